"""Sync protocol runners: channel behavior, summaries, and cross-protocol rules."""

import numpy as np
import pytest

from vanetsync.clocks import PpsErrorModel, QuartzClock, pps_preset_fleet
from vanetsync.errors import (
    ConfigurationError,
    EmptyInputError,
    EmptyResultError,
    InsufficientReceiversError,
)
from vanetsync.protocols import (
    PROTOCOL_NAMES,
    AvailabilityTrace,
    ChannelModel,
    ComparisonSpec,
    DelayDistribution,
    PairErrorTrace,
    SyncSummary,
    VehicleNode,
    compare_protocols,
    run_cts,
    run_ftsp,
    run_gnss_sync,
    run_rbs,
    run_tpsn,
    summarize_traces,
)
from vanetsync.visibility import Trajectory


def _platoon(n, spacing_m=30.0, duration_s=3600.0, pps_seed=None, skews=None):
    """Static line of nodes with slightly different clocks."""
    fleet = (
        pps_preset_fleet("same-model", n, seed=pps_seed)
        if pps_seed is not None
        else [None] * n
    )
    nodes = []
    for i in range(n):
        skew = skews[i] if skews is not None else (i - n / 2) * 1e-8
        nodes.append(
            VehicleNode(
                node_id=f"V{i:02d}",
                trajectory=Trajectory.static([i * spacing_m, 0.0, 0.0], duration_s),
                clock=QuartzClock(drift_rate=1.0 + skew, offset_s=1e-4 * (i + 1)),
                pps=fleet[i],
            )
        )
    return nodes


def test_delay_distribution_validation():
    DelayDistribution(0.0, 0.0)
    with pytest.raises(ConfigurationError):
        DelayDistribution(-1.0, 0.0)
    with pytest.raises(ConfigurationError):
        DelayDistribution(1.0, -1.0)


def test_channel_model_validation():
    with pytest.raises(ConfigurationError):
        ChannelModel(comm_range_m=0.0)
    with pytest.raises(ConfigurationError):
        ChannelModel(mac_timestamp_jitter_us=-1.0)
    c = ChannelModel().with_seed(5)
    assert c.seed == 5


def test_availability_trace_step_lookup():
    tr = AvailabilityTrace(
        times_s=np.array([0.0, 10.0]), available=np.array([True, False])
    )
    assert tr.available_at(5.0)
    assert not tr.available_at(10.0)
    assert not tr.available_at(100.0)
    assert tr.available_at(-1.0)  # clamps to the first sample
    with pytest.raises(ConfigurationError):
        AvailabilityTrace(times_s=np.array([]), available=np.array([]))
    with pytest.raises(ConfigurationError):
        AvailabilityTrace(
            times_s=np.array([1.0, 0.0]), available=np.array([True, True])
        )


def test_vehicle_node_gnss_ok_forms():
    node = _platoon(1)[0]
    assert node.gnss_ok(np.array([0.0, 1.0])).all()
    blocked = VehicleNode(
        node_id="X",
        trajectory=node.trajectory,
        clock=node.clock,
        gnss_available=False,
    )
    assert not blocked.gnss_ok(np.array([0.0])).any()
    gated = VehicleNode(
        node_id="Y",
        trajectory=node.trajectory,
        clock=node.clock,
        gnss_available=lambda t: t < 5.0,
    )
    np.testing.assert_array_equal(
        gated.gnss_ok(np.array([0.0, 9.0])), [True, False]
    )


def test_pair_error_trace_validation():
    with pytest.raises(ConfigurationError):
        PairErrorTrace("a", "b", np.array([0.0, 1.0]), np.array([0.0]))


def test_summarize_traces_steady_filter():
    tr = PairErrorTrace(
        "a", "b", np.array([0.0, 10.0, 20.0]), np.array([100.0, 2e-9, -4e-9])
    )
    s = summarize_traces([tr], steady_after_s=5.0)
    assert s.n == 2
    assert s.peak_s == pytest.approx(4e-9)
    assert s.mean_s == pytest.approx(3e-9)
    with pytest.raises(EmptyResultError):
        summarize_traces([tr], steady_after_s=30.0)


def test_summary_statistics_are_consistent():
    tr = PairErrorTrace(
        "a", "b", np.arange(4.0), np.array([1e-9, -3e-9, 2e-9, -2e-9])
    )
    s = summarize_traces([tr], 0.0)
    assert isinstance(s, SyncSummary)
    assert s.rms_s**2 == pytest.approx(s.mean_s**2 + s.std_s**2)
    assert s.to_dict()["n"] == 4


def test_duplicate_and_empty_node_lists():
    nodes = _platoon(2, pps_seed=0)
    dup = [nodes[0], nodes[0]]
    with pytest.raises(ConfigurationError):
        run_gnss_sync(dup, 10.0)
    with pytest.raises(EmptyInputError):
        run_gnss_sync([], 10.0)


def test_gnss_sync_no_messages_and_all_pairs():
    nodes = _platoon(4, pps_seed=1)
    res = run_gnss_sync(nodes, 600.0)
    assert res.message_count == 0
    assert res.messages_per_node_per_round == 0.0
    assert len(res.traces) == 6
    assert res.unsynchronized == ()
    # disciplined clocks agree to well under a microsecond
    assert res.summary.rms_s < 1e-6


def test_gnss_sync_unavailable_node_free_runs():
    nodes = _platoon(3, pps_seed=1, skews=(5e-5, 0.0, -5e-5))
    dark = VehicleNode(
        node_id=nodes[0].node_id,
        trajectory=nodes[0].trajectory,
        clock=nodes[0].clock,
        pps=nodes[0].pps,
        gnss_available=False,
    )
    res = run_gnss_sync([dark, nodes[1], nodes[2]], 1000.0)
    by_pair = {(t.node_a, t.node_b): t for t in res.traces}
    dark_err = np.abs(by_pair[("V00", "V01")].errors_s)
    lit_err = np.abs(by_pair[("V01", "V02")].errors_s)
    # a 5e-5 skew free-runs to ~50 ms over 1000 s; the disciplined pair stays ns
    assert dark_err[-1] > 1e-3
    assert lit_err[-1] < 1e-6


def test_gnss_sync_validation():
    nodes = _platoon(2, pps_seed=0)
    with pytest.raises(ConfigurationError):
        run_gnss_sync(nodes, 0.0)
    bare = VehicleNode(
        node_id="B", trajectory=nodes[0].trajectory, clock=QuartzClock()
    )
    with pytest.raises(ConfigurationError):
        run_gnss_sync([bare], 10.0)


def test_tpsn_tree_and_orphans():
    nodes = _platoon(4, spacing_m=30.0)
    # last node parked far beyond radio range
    far = VehicleNode(
        node_id="V99",
        trajectory=Trajectory.static([1e6, 0.0, 0.0], 3600.0),
        clock=QuartzClock(),
    )
    res = run_tpsn(nodes + [far], ChannelModel(seed=3), "V00", rounds=3)
    assert res.unsynchronized == ("V99",)
    assert res.message_count > 0
    assert len(res.traces) == 6  # pairs among the four synced nodes
    assert res.summary.rms_s < 1e-3


def test_tpsn_validation():
    nodes = _platoon(3)
    with pytest.raises(ConfigurationError):
        run_tpsn(nodes, ChannelModel(), "nope", rounds=2)
    with pytest.raises(ConfigurationError):
        run_tpsn(nodes, ChannelModel(), "V00", rounds=0)


def test_rbs_needs_two_receivers_in_range():
    with pytest.raises(InsufficientReceiversError):
        run_rbs(_platoon(2), ChannelModel(seed=1), rounds=40)


def test_rbs_sender_excluded_from_traces():
    nodes = _platoon(4)
    res = run_rbs(nodes, ChannelModel(seed=1), rounds=40, window=10)
    traced_ids = {t.node_a for t in res.traces} | {t.node_b for t in res.traces}
    assert "V00" not in traced_ids
    assert traced_ids == {"V01", "V02", "V03"}
    alt = run_rbs(
        nodes, ChannelModel(seed=1), rounds=40, window=10, sender_id="V02"
    )
    alt_ids = {t.node_a for t in alt.traces} | {t.node_b for t in alt.traces}
    assert "V02" not in alt_ids


def test_rbs_validation():
    nodes = _platoon(4)
    with pytest.raises(ConfigurationError):
        run_rbs(nodes, ChannelModel(), rounds=40, sender_id="V77")
    with pytest.raises(ConfigurationError):
        run_rbs(nodes, ChannelModel(), rounds=0)
    with pytest.raises(ConfigurationError):
        run_rbs(nodes, ChannelModel(), rounds=10, window=0)
    with pytest.raises(EmptyResultError):
        run_rbs(nodes, ChannelModel(seed=1), rounds=5, window=10)


def test_ftsp_converges_on_short_run():
    nodes = _platoon(5)
    res = run_ftsp(nodes, ChannelModel(seed=4), duration_s=300.0)
    assert res.protocol == "ftsp"
    assert res.message_count > 0
    assert len(res.traces) == 10
    assert res.summary.rms_s < 2e-5


def test_cts_converges_on_short_run():
    nodes = _platoon(5)
    res = run_cts(nodes, ChannelModel(seed=4), duration_s=180.0)
    assert res.message_count > 0
    assert res.summary.rms_s < 2e-4
    with pytest.raises(ConfigurationError):
        run_cts(nodes, ChannelModel(), duration_s=0.0)
    with pytest.raises(ConfigurationError):
        run_cts(nodes, ChannelModel(), duration_s=60.0, refresh_gain=0.0)


def test_protocol_runs_are_seed_deterministic():
    nodes = _platoon(4)
    a = run_rbs(nodes, ChannelModel(seed=9), rounds=50, window=10)
    b = run_rbs(nodes, ChannelModel(seed=9), rounds=50, window=10)
    for ta, tb in zip(a.traces, b.traces):
        np.testing.assert_array_equal(ta.errors_s, tb.errors_s)
    c = run_rbs(nodes, ChannelModel(seed=10), rounds=50, window=10)
    assert any(
        not np.array_equal(ta.errors_s, tc.errors_s)
        for ta, tc in zip(a.traces, c.traces)
    )


def test_compare_protocols_subset_is_unaffected_by_others():
    nodes = tuple(_platoon(4, pps_seed=2))
    chan = ChannelModel(seed=6)
    full = compare_protocols(
        ComparisonSpec(nodes=nodes, channel=chan, duration_s=240.0)
    )
    subset = compare_protocols(
        ComparisonSpec(
            nodes=nodes, channel=chan, duration_s=240.0, protocols=("rbs", "cts")
        )
    )
    for proto in ("rbs", "cts"):
        fa, fb = full.results[proto].traces, subset.results[proto].traces
        for ta, tb in zip(fa, fb):
            np.testing.assert_array_equal(ta.errors_s, tb.errors_s)


def test_compare_protocols_ranking_and_report():
    nodes = tuple(_platoon(4, pps_seed=2))
    report = compare_protocols(
        ComparisonSpec(
            nodes=nodes,
            channel=ChannelModel(seed=6),
            duration_s=240.0,
            protocols=("gnss", "rbs"),
        )
    )
    ranked = report.ranked()
    assert [p for p, _ in ranked] == sorted(
        ("gnss", "rbs"), key=lambda p: report.results[p].summary.rms_s
    )
    assert ranked[0][0] == "gnss"
    d = report.to_dict()
    assert set(d["results"]) == {"gnss", "rbs"}
    assert d["ranking"][0]["protocol"] == "gnss"


def test_compare_protocols_rejects_unknown():
    nodes = tuple(_platoon(3, pps_seed=2))
    with pytest.raises(ConfigurationError, match="ntp"):
        compare_protocols(
            ComparisonSpec(
                nodes=nodes,
                channel=ChannelModel(),
                duration_s=60.0,
                protocols=("ntp",),
            )
        )
    assert set(PROTOCOL_NAMES) == {"gnss", "tpsn", "rbs", "ftsp", "cts"}


def test_sync_result_round_trips_summary():
    nodes = _platoon(4, pps_seed=3)
    res = run_gnss_sync(nodes, 120.0)
    again = res.recompute_summary()
    assert again == res.summary
    d = res.to_dict()
    assert d["protocol"] == "gnss"
    assert d["summary"]["n"] == res.summary.n
