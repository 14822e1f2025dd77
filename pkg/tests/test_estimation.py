"""Measurement synthesis, DOP geometry factors, and the PVT solver."""

import math

import numpy as np
import pytest

from vanetsync.constants import SPEED_OF_LIGHT
from vanetsync.constellation import EcefState, SatelliteClock, lla_to_ecef
from vanetsync.errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateGeometryError,
    EmptyInputError,
    InsufficientSatellitesError,
    SingularGeometryError,
)
from vanetsync.estimation import (
    DopValues,
    MeasurementNoiseModel,
    PseudorangeSet,
    ReceiverTruth,
    design_matrix,
    dop,
    enu_rotation,
    simulate_pseudoranges,
    solve_pvt,
    solve_velocity_drift,
    static_time_solve,
    timing_uncertainty,
)

RX = lla_to_ecef(-27.47, 153.03, 30.0)


def _sat_state(rx, el_deg, az_deg, dist_m=2.2e7, vel=(0.0, 0.0, 0.0), t=0.0):
    """Satellite placed along the given ENU direction from rx."""
    el, az = math.radians(el_deg), math.radians(az_deg)
    enu_dir = np.array(
        [math.sin(az) * math.cos(el), math.cos(az) * math.cos(el), math.sin(el)]
    )
    pos = rx + dist_m * (enu_rotation(rx).T @ enu_dir)
    return EcefState(position_m=pos, velocity_m_per_s=np.asarray(vel, float), t=t)


def _spread_sats(rx, vel=(0.0, 0.0, 0.0)):
    geom = [(70.0, 10.0), (30.0, 60.0), (25.0, 170.0), (35.0, 250.0), (45.0, 320.0)]
    return [
        (f"S{i:02d}", _sat_state(rx, el, az, vel=vel))
        for i, (el, az) in enumerate(geom)
    ]


def test_noise_model_validation():
    with pytest.raises(ConfigurationError):
        MeasurementNoiseModel(sigma_pseudorange_m=-1.0)
    with pytest.raises(ConfigurationError):
        MeasurementNoiseModel(sigma_doppler_mps=-0.1)
    m = MeasurementNoiseModel(sigma_pseudorange_m=5.0).with_seed(9)
    assert m.seed == 9 and m.sigma_pseudorange_m == 5.0


def test_receiver_truth_defaults_zero_velocity():
    truth = ReceiverTruth(position_m=[1.0, 2.0, 3.0])
    np.testing.assert_array_equal(truth.velocity_mps, np.zeros(3))
    assert truth.clock_bias_s == 0.0


def test_pseudorange_set_validation():
    state = _sat_state(RX, 45.0, 0.0)
    with pytest.raises(EmptyInputError):
        PseudorangeSet((), np.array([]), np.array([]), ())
    with pytest.raises(ConfigurationError):
        PseudorangeSet(
            ("A",), np.array([-5.0]), np.array([0.0]), (state,)
        )
    ps = PseudorangeSet(
        ("A",), np.array([2.2e7]), np.array([0.0]), (state,)
    )
    assert ps.nsat == 1
    np.testing.assert_array_equal(ps.sat_positions()[0], state.position_m)


def test_noiseless_pseudorange_is_range_plus_bias():
    bias = 1e-3
    truth = ReceiverTruth(position_m=RX, clock_bias_s=bias)
    sats = _spread_sats(RX)
    meas = simulate_pseudoranges(truth, sats, MeasurementNoiseModel())
    for pr, (_, state) in zip(meas.pseudoranges_m, sats):
        rng = np.linalg.norm(state.position_m - RX)
        assert pr == pytest.approx(rng + SPEED_OF_LIGHT * bias, abs=1e-6)


def test_satellite_clock_offset_subtracts_from_pseudorange():
    truth = ReceiverTruth(position_m=RX, clock_bias_s=0.0)
    state = _sat_state(RX, 50.0, 120.0)
    off = 2e-6
    base = simulate_pseudoranges(truth, [("A", state)], MeasurementNoiseModel())
    shifted = simulate_pseudoranges(
        truth, [("A", state, SatelliteClock(offset_s=off))], MeasurementNoiseModel()
    )
    got = shifted.pseudoranges_m[0] - base.pseudoranges_m[0]
    assert got == pytest.approx(-SPEED_OF_LIGHT * off, rel=1e-9)


def test_range_rate_matches_finite_difference():
    sat_vel = np.array([2500.0, -1200.0, 800.0])
    rx_vel = np.array([20.0, 5.0, 0.0])
    truth = ReceiverTruth(position_m=RX, velocity_mps=rx_vel)
    state = _sat_state(RX, 40.0, 75.0, vel=sat_vel)
    meas = simulate_pseudoranges(truth, [("A", state)], MeasurementNoiseModel())
    dt = 1e-3
    d_plus = np.linalg.norm((state.position_m + sat_vel * dt) - (RX + rx_vel * dt))
    d_minus = np.linalg.norm((state.position_m - sat_vel * dt) - (RX - rx_vel * dt))
    fd = (d_plus - d_minus) / (2.0 * dt)
    assert meas.range_rates_mps[0] == pytest.approx(fd, abs=1e-4)


def test_range_rate_includes_clock_drift_term():
    drift = 3e-9
    truth = ReceiverTruth(position_m=RX, clock_drift_s_per_s=drift)
    state = _sat_state(RX, 40.0, 75.0)
    meas = simulate_pseudoranges(truth, [("A", state)], MeasurementNoiseModel())
    assert meas.range_rates_mps[0] == pytest.approx(
        SPEED_OF_LIGHT * drift, rel=1e-9
    )


def test_simulate_pseudoranges_seeded_noise_is_deterministic():
    truth = ReceiverTruth(position_m=RX)
    sats = _spread_sats(RX)
    noise = MeasurementNoiseModel(sigma_pseudorange_m=5.0, seed=42)
    a = simulate_pseudoranges(truth, sats, noise)
    b = simulate_pseudoranges(truth, sats, noise)
    np.testing.assert_array_equal(a.pseudoranges_m, b.pseudoranges_m)
    c = simulate_pseudoranges(truth, sats, noise.with_seed(43))
    assert not np.array_equal(a.pseudoranges_m, c.pseudoranges_m)


def test_simulate_pseudoranges_rejects_empty_and_coincident():
    truth = ReceiverTruth(position_m=RX)
    with pytest.raises(EmptyInputError):
        simulate_pseudoranges(truth, [], MeasurementNoiseModel())
    coincident = EcefState(position_m=RX.copy(), velocity_m_per_s=np.zeros(3), t=0.0)
    with pytest.raises(DegenerateGeometryError):
        simulate_pseudoranges(truth, [("A", coincident)], MeasurementNoiseModel())


def test_design_matrix_rows():
    sats = np.array([[2e7, 0.0, 0.0], [0.0, 2e7, 0.0]])
    rx = np.array([1e6, 0.0, 0.0])
    H = design_matrix(sats, rx)
    assert H.shape == (2, 4)
    np.testing.assert_allclose(np.linalg.norm(H[:, :3], axis=1), 1.0)
    np.testing.assert_array_equal(H[:, 3], 1.0)
    # first row points from satellite toward the receiver
    np.testing.assert_allclose(H[0, :3], [-1.0, 0.0, 0.0], atol=1e-12)
    with pytest.raises(DegenerateGeometryError):
        design_matrix(np.array([rx]), rx)


def test_enu_rotation_orthonormal_and_degenerate():
    R = enu_rotation(RX)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    # up is the radial direction on the spherical earth
    np.testing.assert_allclose(R[2], RX / np.linalg.norm(RX), atol=1e-12)
    with pytest.raises(DegenerateGeometryError):
        enu_rotation(np.array([0.0, 0.0, 6.4e6]))
    with pytest.raises(DegenerateGeometryError):
        enu_rotation(np.zeros(3))


def test_dop_rejects_bad_shapes_and_singular_geometry():
    with pytest.raises(SingularGeometryError):
        dop(np.ones((3, 4)))
    # four identical lines of sight are rank 1
    H = np.tile(np.array([0.0, 0.0, -1.0, 1.0]), (4, 1))
    with pytest.raises(SingularGeometryError):
        dop(H)


def test_dop_values_invariants():
    with pytest.raises(SingularGeometryError):
        DopValues(gdop=5.0, pdop=3.0, tdop=3.0, hdop=2.0, vdop=2.0)
    with pytest.raises(SingularGeometryError):
        DopValues(gdop=5.0, pdop=3.0, tdop=4.0, hdop=-1.0, vdop=2.0)
    with pytest.raises(SingularGeometryError):
        DopValues(gdop=math.nan, pdop=3.0, tdop=4.0, hdop=2.0, vdop=2.0)
    d = DopValues(gdop=5.0, pdop=3.0, tdop=4.0, hdop=2.0, vdop=2.2360679774997896)
    assert d.gdop == 5.0


def test_solve_pvt_noiseless_recovers_truth():
    bias = 5e-4
    truth = ReceiverTruth(position_m=RX, clock_bias_s=bias)
    meas = simulate_pseudoranges(truth, _spread_sats(RX), MeasurementNoiseModel())
    sol = solve_pvt(meas)
    assert np.linalg.norm(sol.position_m - RX) < 1e-5
    assert abs(sol.clock_bias_s - bias) < 1e-12
    assert sol.valid and sol.nsat == 5
    assert sol.residual_rms_m < 1e-5


def test_solve_pvt_requires_four_satellites():
    truth = ReceiverTruth(position_m=RX)
    meas = simulate_pseudoranges(
        truth, _spread_sats(RX)[:3], MeasurementNoiseModel()
    )
    with pytest.raises(InsufficientSatellitesError):
        solve_pvt(meas)


def test_solve_pvt_convergence_budget():
    truth = ReceiverTruth(position_m=RX)
    meas = simulate_pseudoranges(truth, _spread_sats(RX), MeasurementNoiseModel())
    with pytest.raises(ConvergenceError):
        solve_pvt(meas, max_iter=1)
    # a warm start converges immediately
    sol = solve_pvt(meas, initial=(RX, 0.0), max_iter=2)
    assert sol.iterations <= 2


def test_solve_pvt_residual_orthogonality_with_noise():
    truth = ReceiverTruth(position_m=RX, clock_bias_s=1e-3)
    noise = MeasurementNoiseModel(sigma_pseudorange_m=5.0, seed=7)
    meas = simulate_pseudoranges(truth, _spread_sats(RX), noise)
    sol = solve_pvt(meas)
    H = design_matrix(meas.sat_positions(), sol.position_m)
    rngs = np.linalg.norm(meas.sat_positions() - sol.position_m, axis=1)
    res = meas.pseudoranges_m - (rngs + sol.clock_bias_s * SPEED_OF_LIGHT)
    np.testing.assert_allclose(H.T @ res, 0.0, atol=1e-3)


def test_solve_pvt_flags_poor_geometry_invalid():
    # all satellites bunched in a narrow cone: huge DOP, still solvable
    geom = [(80.0, 0.0), (81.0, 90.0), (80.5, 180.0), (81.5, 270.0), (79.0, 45.0)]
    sats = [
        (f"S{i:02d}", _sat_state(RX, el, az)) for i, (el, az) in enumerate(geom)
    ]
    truth = ReceiverTruth(position_m=RX)
    meas = simulate_pseudoranges(truth, sats, MeasurementNoiseModel())
    sol = solve_pvt(meas, initial=(RX, 0.0))
    assert sol.dop.gdop > 6.0
    assert not sol.valid


def test_solve_velocity_drift_exact():
    vel = np.array([5.0, -3.0, 1.0])
    drift = 2e-9
    sat_vels = [
        (2000.0, 1000.0, -500.0),
        (-1500.0, 2200.0, 300.0),
        (800.0, -2600.0, 1200.0),
        (-900.0, -1100.0, 2500.0),
        (1700.0, 400.0, -2100.0),
    ]
    truth = ReceiverTruth(
        position_m=RX, velocity_mps=vel, clock_drift_s_per_s=drift
    )
    geom = [(70.0, 10.0), (30.0, 60.0), (25.0, 170.0), (35.0, 250.0), (45.0, 320.0)]
    sats = [
        (f"S{i:02d}", _sat_state(RX, el, az, vel=sv))
        for i, ((el, az), sv) in enumerate(zip(geom, sat_vels))
    ]
    meas = simulate_pseudoranges(truth, sats, MeasurementNoiseModel())
    sol = solve_pvt(meas)
    v_est, d_est = solve_velocity_drift(meas, sol)
    np.testing.assert_allclose(v_est, vel, atol=1e-6)
    assert d_est == pytest.approx(drift, abs=1e-15)


def test_solve_velocity_drift_requires_four_satellites():
    truth = ReceiverTruth(position_m=RX)
    meas5 = simulate_pseudoranges(truth, _spread_sats(RX), MeasurementNoiseModel())
    sol = solve_pvt(meas5)
    meas3 = simulate_pseudoranges(
        truth, _spread_sats(RX)[:3], MeasurementNoiseModel()
    )
    with pytest.raises(InsufficientSatellitesError):
        solve_velocity_drift(meas3, sol)


def test_timing_uncertainty_forms():
    d = DopValues(gdop=5.0, pdop=3.0, tdop=4.0, hdop=2.0, vdop=2.2360679774997896)
    full, time_only = timing_uncertainty(3.0, d)
    assert full == pytest.approx(15.0 / SPEED_OF_LIGHT)
    assert time_only == pytest.approx(12.0 / SPEED_OF_LIGHT)
    with pytest.raises(ConfigurationError):
        timing_uncertainty(-1.0, d)


def test_static_time_solve_known_position():
    bias = 7e-4
    truth = ReceiverTruth(position_m=RX, clock_bias_s=bias)
    meas = simulate_pseudoranges(truth, _spread_sats(RX), MeasurementNoiseModel())
    est, sigma = static_time_solve(meas, RX)
    assert est == pytest.approx(bias, abs=1e-15)
    assert sigma == pytest.approx(0.0, abs=1e-15)


def test_static_time_solve_single_satellite_sigma():
    truth = ReceiverTruth(position_m=RX, clock_bias_s=1e-4)
    meas = simulate_pseudoranges(
        truth, _spread_sats(RX)[:1], MeasurementNoiseModel()
    )
    est, sigma = static_time_solve(meas, RX, sigma_pseudorange_m=5.0)
    assert est == pytest.approx(1e-4, abs=1e-15)
    assert sigma == pytest.approx(5.0 / SPEED_OF_LIGHT)
    _, sigma_nan = static_time_solve(meas, RX)
    assert math.isnan(sigma_nan)
