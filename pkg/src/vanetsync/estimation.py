"""Pseudorange/Doppler synthesis and least-squares PVT estimation.

The solver iterates on (position, clock bias in range units) with a
Gauss-Newton step; DOP values come from the normal-matrix cofactor in the
local east-north-up frame at the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import DEFAULT_GDOP_THRESHOLD, SPEED_OF_LIGHT
from .constellation import EcefState, SatelliteClock
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateGeometryError,
    EmptyInputError,
    InsufficientSatellitesError,
    SingularGeometryError,
)


@dataclass(frozen=True)
class MeasurementNoiseModel:
    """Gaussian observation noise levels plus the stream seed."""

    sigma_pseudorange_m: float = 0.0
    sigma_doppler_mps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_pseudorange_m < 0.0 or self.sigma_doppler_mps < 0.0:
            raise ConfigurationError("noise sigmas must be non-negative")

    def with_seed(self, seed: int) -> "MeasurementNoiseModel":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class ReceiverTruth:
    """Ground-truth receiver state for measurement synthesis."""

    position_m: np.ndarray
    velocity_mps: np.ndarray = None
    clock_bias_s: float = 0.0
    clock_drift_s_per_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "position_m", np.asarray(self.position_m, dtype=float)
        )
        v = self.velocity_mps
        v = np.zeros(3) if v is None else np.asarray(v, dtype=float)
        object.__setattr__(self, "velocity_mps", v)


@dataclass(frozen=True)
class PseudorangeSet:
    """One epoch of pseudorange/range-rate measurements."""

    sat_ids: tuple
    pseudoranges_m: np.ndarray
    range_rates_mps: np.ndarray
    sat_states: tuple

    def __post_init__(self):
        if len(self.sat_ids) == 0:
            raise EmptyInputError("measurement set is empty")
        if np.any(np.asarray(self.pseudoranges_m) <= 0.0):
            raise ConfigurationError("pseudoranges must be positive")

    @property
    def nsat(self) -> int:
        return len(self.sat_ids)

    def sat_positions(self) -> np.ndarray:
        return np.vstack([s.position_m for s in self.sat_states])

    def sat_velocities(self) -> np.ndarray:
        return np.vstack([s.velocity_m_per_s for s in self.sat_states])


@dataclass(frozen=True)
class DopValues:
    """Dilution-of-precision factors in the frame of the design matrix."""

    gdop: float
    pdop: float
    tdop: float
    hdop: float
    vdop: float

    def __post_init__(self):
        vals = (self.gdop, self.pdop, self.tdop, self.hdop, self.vdop)
        if any(not math.isfinite(v) or v <= 0.0 for v in vals):
            raise SingularGeometryError("DOP values must be finite and positive")
        lhs = self.gdop**2
        rhs = self.pdop**2 + self.tdop**2
        if abs(lhs - rhs) > 1e-9 * max(lhs, rhs):
            raise SingularGeometryError("gdop^2 != pdop^2 + tdop^2")


@dataclass(frozen=True)
class PvtSolution:
    position_m: np.ndarray
    clock_bias_s: float
    velocity_mps: np.ndarray
    clock_drift_s_per_s: float
    dop: DopValues
    valid: bool
    iterations: int
    residual_rms_m: float
    nsat: int


def simulate_pseudoranges(
    truth: ReceiverTruth,
    sats: list,
    noise: MeasurementNoiseModel,
) -> PseudorangeSet:
    """Synthesize measurements from truth geometry and clock states.

    sats: list of (sat_id, EcefState) or (sat_id, EcefState, SatelliteClock).
    Deterministic for a given noise seed.
    """
    if not sats:
        raise EmptyInputError("no satellites supplied")
    rng = np.random.default_rng(noise.seed)
    ids, prs, rrs, states = [], [], [], []
    for entry in sats:
        if len(entry) == 3:
            sat_id, state, clk = entry
        else:
            sat_id, state = entry
            clk = SatelliteClock()
        dvec = state.position_m - truth.position_m
        rng_m = float(np.linalg.norm(dvec))
        if rng_m == 0.0:
            raise DegenerateGeometryError(f"{sat_id} coincides with receiver")
        los = dvec / rng_m
        pr = rng_m + SPEED_OF_LIGHT * (truth.clock_bias_s - clk.offset_s)
        rr = float(
            los @ (state.velocity_m_per_s - truth.velocity_mps)
        ) + SPEED_OF_LIGHT * truth.clock_drift_s_per_s
        ids.append(sat_id)
        prs.append(pr)
        rrs.append(rr)
        states.append(state)
    prs = np.array(prs)
    rrs = np.array(rrs)
    if noise.sigma_pseudorange_m > 0.0:
        prs = prs + rng.normal(0.0, noise.sigma_pseudorange_m, len(ids))
    if noise.sigma_doppler_mps > 0.0:
        rrs = rrs + rng.normal(0.0, noise.sigma_doppler_mps, len(ids))
    return PseudorangeSet(
        sat_ids=tuple(ids),
        pseudoranges_m=prs,
        range_rates_mps=rrs,
        sat_states=tuple(states),
    )


def design_matrix(sat_positions: np.ndarray, rx_pos_est: np.ndarray) -> np.ndarray:
    """Linearized observation rows: (-unit line of sight, 1) per satellite."""
    sat_positions = np.atleast_2d(np.asarray(sat_positions, dtype=float))
    rx = np.asarray(rx_pos_est, dtype=float)
    d = sat_positions - rx
    rngs = np.linalg.norm(d, axis=1)
    if np.any(rngs == 0.0):
        raise DegenerateGeometryError("satellite coincides with estimate")
    H = np.empty((sat_positions.shape[0], 4))
    H[:, :3] = -d / rngs[:, None]
    H[:, 3] = 1.0
    return H


def enu_rotation(rx_pos: np.ndarray) -> np.ndarray:
    """Rows are the east/north/up unit vectors at rx_pos (spherical earth)."""
    rx = np.asarray(rx_pos, dtype=float)
    rxn = np.linalg.norm(rx)
    if rxn == 0.0:
        raise DegenerateGeometryError("ENU frame undefined at earth center")
    up = rx / rxn
    east = np.array([-up[1], up[0], 0.0])
    en = np.linalg.norm(east)
    if en < 1e-12:
        raise DegenerateGeometryError("ENU frame undefined at pole")
    east /= en
    north = np.cross(up, east)
    return np.vstack([east, north, up])


def dop(H: np.ndarray) -> DopValues:
    """DOP factors from the design matrix (frame follows H's first columns)."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[1] != 4 or H.shape[0] < 4:
        raise SingularGeometryError("need at least four 4-column rows")
    M = H.T @ H
    if abs(np.linalg.det(M)) <= 1e-10:
        raise SingularGeometryError("normal matrix is singular")
    Q = np.linalg.inv(M)
    d = np.diag(Q)
    return DopValues(
        gdop=math.sqrt(d.sum()),
        pdop=math.sqrt(d[0] + d[1] + d[2]),
        tdop=math.sqrt(d[3]),
        hdop=math.sqrt(d[0] + d[1]),
        vdop=math.sqrt(d[2]),
    )


def solve_pvt(
    meas: PseudorangeSet,
    initial: tuple | None = None,
    max_iter: int = 20,
    tol_m: float = 1e-4,
    gdop_threshold: float = DEFAULT_GDOP_THRESHOLD,
) -> PvtSolution:
    """Gauss-Newton solve for position and clock bias.

    initial: optional (position_m, clock_bias_s) guess; defaults to the earth
    center with zero bias, which converges for any surface receiver.
    """
    if meas.nsat < 4:
        raise InsufficientSatellitesError(
            f"PVT needs at least 4 satellites, got {meas.nsat}"
        )
    sat_pos = meas.sat_positions()
    if initial is None:
        pos = np.zeros(3)
        cb_m = 0.0
    else:
        pos = np.asarray(initial[0], dtype=float).copy()
        cb_m = float(initial[1]) * SPEED_OF_LIGHT

    iterations = 0
    converged = False
    H = None
    res = None
    for iterations in range(1, max_iter + 1):
        H = design_matrix(sat_pos, pos)
        rngs = np.linalg.norm(sat_pos - pos, axis=1)
        res = meas.pseudoranges_m - (rngs + cb_m)
        if np.linalg.matrix_rank(H) < 4:
            raise SingularGeometryError("lines of sight are rank deficient")
        delta, *_ = np.linalg.lstsq(H, res, rcond=None)
        pos += delta[:3]
        cb_m += delta[3]
        if np.linalg.norm(delta[:3]) < tol_m:
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"no convergence after {max_iter} iterations")

    H = design_matrix(sat_pos, pos)
    rngs = np.linalg.norm(sat_pos - pos, axis=1)
    res = meas.pseudoranges_m - (rngs + cb_m)

    R = enu_rotation(pos)
    H_enu = H.copy()
    H_enu[:, :3] = H[:, :3] @ R.T
    dops = dop(H_enu)
    valid = meas.nsat >= 4 and dops.gdop <= gdop_threshold
    return PvtSolution(
        position_m=pos,
        clock_bias_s=cb_m / SPEED_OF_LIGHT,
        velocity_mps=np.zeros(3),
        clock_drift_s_per_s=0.0,
        dop=dops,
        valid=valid,
        iterations=iterations,
        residual_rms_m=float(np.sqrt(np.mean(res**2))),
        nsat=meas.nsat,
    )


def solve_velocity_drift(meas: PseudorangeSet, pvt: PvtSolution):
    """Velocity and clock drift from range rates, using the PVT geometry.

    Returns (velocity_mps, clock_drift_s_per_s). Same design matrix as the
    position solve; a single linear step.
    """
    if meas.nsat < 4:
        raise InsufficientSatellitesError(
            f"velocity solve needs at least 4 satellites, got {meas.nsat}"
        )
    sat_pos = meas.sat_positions()
    sat_vel = meas.sat_velocities()
    H = design_matrix(sat_pos, pvt.position_m)
    los = -H[:, :3]
    rhs = meas.range_rates_mps - np.einsum("ij,ij->i", los, sat_vel)
    if np.linalg.matrix_rank(H) < 4:
        raise SingularGeometryError("lines of sight are rank deficient")
    sol, *_ = np.linalg.lstsq(H, rhs, rcond=None)
    return sol[:3], sol[3] / SPEED_OF_LIGHT


def timing_uncertainty(sigma_p_m: float, dops: DopValues):
    """Clock uncertainty bounds in seconds: (sigma*GDOP/c, sigma*TDOP/c).

    The first form scales by the full geometry factor and is what accompanies
    reports for traceability; the second isolates the time component.
    """
    if sigma_p_m < 0.0:
        raise ConfigurationError("sigma must be non-negative")
    return (
        sigma_p_m * dops.gdop / SPEED_OF_LIGHT,
        sigma_p_m * dops.tdop / SPEED_OF_LIGHT,
    )


def static_time_solve(
    meas: PseudorangeSet,
    known_rx_pos: np.ndarray,
    sigma_pseudorange_m: float | None = None,
):
    """Clock bias from a known position; works from a single satellite.

    Returns (clock_bias_s, sigma_estimate_s). With one satellite the spread
    is not observable: sigma is sigma_pseudorange_m/c when that is supplied,
    NaN otherwise.
    """
    rx = np.asarray(known_rx_pos, dtype=float)
    sat_pos = meas.sat_positions()
    rngs = np.linalg.norm(sat_pos - rx, axis=1)
    biases = (meas.pseudoranges_m - rngs) / SPEED_OF_LIGHT
    bias = float(np.mean(biases))
    if meas.nsat >= 2:
        spread = float(np.std(biases, ddof=1))
        sigma = spread / math.sqrt(meas.nsat)
    elif sigma_pseudorange_m is not None:
        sigma = sigma_pseudorange_m / SPEED_OF_LIGHT
    else:
        sigma = math.nan
    return bias, sigma
