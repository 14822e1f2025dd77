"""Network time-sync protocols over a jittery vehicular channel.

Out-of-band GNSS disciplining is compared against four in-band protocols:
two-way exchange over a spanning tree (TPSN), receiver-receiver beacon
comparison (RBS), flooding with offset+skew regression (FTSP), and
largest-group convergence (CTS). All runs are driven by a discrete-event
queue with stable (time, node_id, sequence) ordering, so results are
bit-reproducible for a given seed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clocks import PpsErrorModel, QuartzClock, discipline_clock, pps_series_ns, read_clock
from .analysis import OffsetSeries
from .constants import SPEED_OF_LIGHT
from .errors import (
    ConfigurationError,
    EmptyInputError,
    EmptyResultError,
    InsufficientReceiversError,
)
from .rng import derive_seed
from .visibility import Trajectory


@dataclass(frozen=True)
class AvailabilityTrace:
    """Sampled GNSS availability flag; value holds until the next sample."""

    times_s: np.ndarray
    available: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=float)
        a = np.asarray(self.available, dtype=bool)
        if t.ndim != 1 or a.shape != t.shape or t.size == 0:
            raise ConfigurationError("availability needs matching 1-D arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ConfigurationError("availability times must be increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "available", a)

    def available_at(self, t):
        idx = np.clip(
            np.searchsorted(self.times_s, np.asarray(t, dtype=float), side="right") - 1,
            0,
            self.times_s.size - 1,
        )
        return self.available[idx]


@dataclass(frozen=True)
class VehicleNode:
    """A clock-bearing vehicle with a trajectory and optional GNSS timing."""

    node_id: str
    trajectory: Trajectory
    clock: QuartzClock
    pps: PpsErrorModel | None = None
    gnss_available: object = True

    def position_at(self, t):
        return self.trajectory.positions_at(t)

    def gnss_ok(self, t) -> np.ndarray:
        av = self.gnss_available
        t = np.asarray(t, dtype=float)
        if isinstance(av, AvailabilityTrace):
            out = av.available_at(t)
        elif callable(av):
            out = np.asarray([bool(av(x)) for x in np.atleast_1d(t)])
            out = out.reshape(t.shape)
        else:
            out = np.full(t.shape, bool(av))
        return out


@dataclass(frozen=True)
class DelayDistribution:
    """Gaussian processing delay in microseconds (clamped at zero)."""

    mean_us: float
    jitter_us: float

    def __post_init__(self):
        if self.mean_us < 0.0 or self.jitter_us < 0.0:
            raise ConfigurationError("delay parameters must be non-negative")


@dataclass(frozen=True)
class ChannelModel:
    """Unit-disk radio with per-message processing delays.

    tx/rx delays apply at application level; MAC-level timestamping bypasses
    them and carries only mac_timestamp_jitter_us. node_delay_bias_us adds
    fixed per-node hardware offsets as (node_id, tx_extra_us, rx_extra_us).
    """

    comm_range_m: float = 1000.0
    tx_delay: DelayDistribution = DelayDistribution(50.0, 5.0)
    rx_delay: DelayDistribution = DelayDistribution(60.0, 20.0)
    mac_timestamp_jitter_us: float = 2.0
    node_delay_bias_us: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.comm_range_m <= 0.0:
            raise ConfigurationError("comm_range_m must be positive")
        if self.mac_timestamp_jitter_us < 0.0:
            raise ConfigurationError("mac jitter must be non-negative")

    def with_seed(self, seed: int) -> "ChannelModel":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Delivery:
    """One received copy of a message."""

    sender_id: str
    receiver_id: str
    t_sent: float
    t_phys_tx: float
    t_phys_rx: float
    t_delivered: float
    mac_tx_err_s: float
    mac_rx_err_s: float


class _ChannelState:
    """Live channel: independent tx/rx/mac streams plus message accounting."""

    def __init__(self, channel: ChannelModel):
        self.model = channel
        self._tx_rng = np.random.default_rng(derive_seed(channel.seed, "tx"))
        self._rx_rng = np.random.default_rng(derive_seed(channel.seed, "rx"))
        self._mac_rng = np.random.default_rng(derive_seed(channel.seed, "mac"))
        self._bias = {nid: (tx, rx) for nid, tx, rx in channel.node_delay_bias_us}
        self.message_count = 0

    def nominal_delay_s(self) -> float:
        return (self.model.tx_delay.mean_us + self.model.rx_delay.mean_us) * 1e-6

    def _tx_delay_s(self, sender_id: str) -> float:
        d = self.model.tx_delay
        extra = self._bias.get(sender_id, (0.0, 0.0))[0]
        raw = self._tx_rng.normal(d.mean_us + extra, d.jitter_us) if d.jitter_us else d.mean_us + extra
        return max(0.0, raw) * 1e-6

    def _rx_delay_s(self, receiver_id: str) -> float:
        d = self.model.rx_delay
        extra = self._bias.get(receiver_id, (0.0, 0.0))[1]
        raw = self._rx_rng.normal(d.mean_us + extra, d.jitter_us) if d.jitter_us else d.mean_us + extra
        return max(0.0, raw) * 1e-6

    def _mac_err_s(self) -> float:
        j = self.model.mac_timestamp_jitter_us
        return (self._mac_rng.normal(0.0, j) if j else 0.0) * 1e-6

    def broadcast(self, sender: VehicleNode, receivers: list, t_sent: float) -> list:
        """Deliver to every receiver in range; one transmission, shared tx leg."""
        self.message_count += 1
        t_phys_tx = t_sent + self._tx_delay_s(sender.node_id)
        mac_tx = self._mac_err_s()
        spos = np.asarray(sender.position_at(t_sent), dtype=float)
        out = []
        for rx in sorted(receivers, key=lambda n: n.node_id):
            if rx.node_id == sender.node_id:
                continue
            dist = float(np.linalg.norm(np.asarray(rx.position_at(t_sent)) - spos))
            if dist > self.model.comm_range_m:
                continue
            t_phys_rx = t_phys_tx + dist / SPEED_OF_LIGHT
            t_delivered = t_phys_rx + self._rx_delay_s(rx.node_id)
            out.append(
                Delivery(
                    sender_id=sender.node_id,
                    receiver_id=rx.node_id,
                    t_sent=t_sent,
                    t_phys_tx=t_phys_tx,
                    t_phys_rx=t_phys_rx,
                    t_delivered=t_delivered,
                    mac_tx_err_s=mac_tx,
                    mac_rx_err_s=self._mac_err_s(),
                )
            )
        return out

    def unicast(self, sender: VehicleNode, receiver: VehicleNode, t_sent: float):
        found = self.broadcast(sender, [receiver], t_sent)
        return found[0] if found else None


class EventQueue:
    """Min-heap of (time, node_id, sequence) ordered events."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, t: float, node_id: str, kind: str, payload=None):
        heapq.heappush(self._heap, (t, node_id, self._seq, kind, payload))
        self._seq += 1

    def pop(self):
        return heapq.heappop(self._heap)

    def __bool__(self):
        return bool(self._heap)


@dataclass(frozen=True)
class PairErrorTrace:
    """Time series of synchronized-clock disagreement for one node pair."""

    node_a: str
    node_b: str
    times_s: np.ndarray
    errors_s: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=float)
        e = np.asarray(self.errors_s, dtype=float)
        if t.shape != e.shape or t.ndim != 1:
            raise ConfigurationError("trace needs matching 1-D arrays")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "errors_s", e)


@dataclass(frozen=True)
class SyncSummary:
    """Statistics of |pairwise error| over the steady-state window."""

    n: int
    mean_s: float
    std_s: float
    rms_s: float
    peak_s: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_s": self.mean_s,
            "std_s": self.std_s,
            "rms_s": self.rms_s,
            "peak_s": self.peak_s,
        }


def summarize_traces(traces, steady_after_s: float) -> SyncSummary:
    chunks = [
        tr.errors_s[tr.times_s >= steady_after_s - 1e-12] for tr in traces
    ]
    samples = np.concatenate(chunks) if chunks else np.empty(0)
    if samples.size == 0:
        raise EmptyResultError("no steady-state samples to summarize")
    a = np.abs(samples)
    return SyncSummary(
        n=int(a.size),
        mean_s=float(a.mean()),
        std_s=float(a.std()),
        rms_s=float(np.sqrt(np.mean(a**2))),
        peak_s=float(a.max()),
    )


@dataclass(frozen=True)
class SyncResult:
    protocol: str
    traces: tuple
    steady_after_s: float
    summary: SyncSummary
    message_count: int
    messages_per_node_per_round: float
    unsynchronized: tuple = ()

    def recompute_summary(self) -> SyncSummary:
        return summarize_traces(self.traces, self.steady_after_s)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "steady_after_s": self.steady_after_s,
            "summary": self.summary.to_dict(),
            "message_count": self.message_count,
            "messages_per_node_per_round": self.messages_per_node_per_round,
            "unsynchronized": list(self.unsynchronized),
        }


def _sorted_nodes(nodes) -> list:
    out = sorted(nodes, key=lambda n: n.node_id)
    ids = [n.node_id for n in out]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("node ids must be unique")
    if not out:
        raise EmptyInputError("no nodes supplied")
    return out


def _pairs(ids):
    return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]


def _in_range(a: VehicleNode, b: VehicleNode, t: float, comm_range_m: float) -> bool:
    d = np.linalg.norm(
        np.asarray(a.position_at(t), dtype=float)
        - np.asarray(b.position_at(t), dtype=float)
    )
    return bool(d <= comm_range_m)


def run_gnss_sync(
    nodes,
    duration_s: float,
    pps_rate_hz: float = 1.0,
    adjust_limit_s: float = 0.1,
) -> SyncResult:
    """Discipline every node's clock from its own GNSS PPS; no messages.

    Pairwise errors are sampled at the pulse epochs, as a bench oscilloscope
    triggering on the pulses would measure them. Nodes lacking availability
    at a pulse free-run from their last anchor.
    """
    nodes = _sorted_nodes(nodes)
    if duration_s <= 0.0 or pps_rate_hz <= 0.0:
        raise ConfigurationError("duration and pulse rate must be positive")
    for node in nodes:
        if node.pps is None:
            raise ConfigurationError(f"node {node.node_id} has no PPS model")

    n_pulses = int(math.floor(duration_s * pps_rate_hz)) + 1
    t_pulse = np.arange(n_pulses, dtype=float) / pps_rate_hz

    errors = {}
    for node in nodes:
        offs = pps_series_ns(node.pps, n_pulses)
        ok = node.gnss_ok(t_pulse)
        if not np.any(ok):
            errors[node.node_id] = read_clock(node.clock, t_pulse) - t_pulse
            continue
        events = OffsetSeries(t_pulse[ok], offs[ok], source=node.node_id)
        disc = discipline_clock(node.clock, events, adjust_limit_s=adjust_limit_s)
        errors[node.node_id] = disc.error(t_pulse)

    ids = [n.node_id for n in nodes]
    traces = tuple(
        PairErrorTrace(a, b, t_pulse, errors[a] - errors[b])
        for a, b in _pairs(ids)
    )
    return SyncResult(
        protocol="gnss",
        traces=traces,
        steady_after_s=0.0,
        summary=summarize_traces(traces, 0.0),
        message_count=0,
        messages_per_node_per_round=0.0,
        unsynchronized=(),
    )


def _build_tree(nodes, root_id: str, comm_range_m: float, t: float):
    """Breadth-first spanning tree; returns (parent map, level map, orphans)."""
    by_id = {n.node_id: n for n in nodes}
    if root_id not in by_id:
        raise ConfigurationError(f"unknown root node '{root_id}'")
    parent = {root_id: None}
    level = {root_id: 0}
    frontier = [root_id]
    while frontier:
        nxt = []
        for pid in frontier:
            for node in nodes:
                nid = node.node_id
                if nid in parent:
                    continue
                if _in_range(by_id[pid], node, t, comm_range_m):
                    parent[nid] = pid
                    level[nid] = level[pid] + 1
                    nxt.append(nid)
        frontier = sorted(nxt)
    orphans = tuple(sorted(set(by_id) - set(parent)))
    return parent, level, orphans


def run_tpsn(
    nodes,
    channel: ChannelModel,
    root_id: str,
    rounds: int,
    round_period_s: float = 30.0,
) -> SyncResult:
    """Spanning-tree two-way exchange; children correct toward their parents."""
    nodes = _sorted_nodes(nodes)
    if rounds < 1:
        raise ConfigurationError("rounds must be >= 1")
    chan = _ChannelState(channel)
    by_id = {n.node_id: n for n in nodes}
    parent, level, orphans = _build_tree(nodes, root_id, channel.comm_range_m, 0.0)
    chan.message_count += len(parent)  # level-discovery flood

    synced_ids = sorted(parent)
    adj = {nid: 0.0 for nid in synced_ids}
    turnaround_s = 1e-3
    sample_offset_s = 0.9 * round_period_s

    def synced_read(nid: str, t: float) -> float:
        return float(read_clock(by_id[nid].clock, t)) + adj[nid]

    sample_t, samples = [], {p: [] for p in _pairs(synced_ids)}
    queue = EventQueue()
    for r in range(1, rounds + 1):
        t_round = r * round_period_s
        order = sorted((lv, nid) for nid, lv in level.items() if lv > 0)
        for idx, (lv, nid) in enumerate(order):
            queue.push(t_round + lv * 0.1 + idx * 1e-3, nid, "exchange")
        queue.push(t_round + sample_offset_s, "", "sample")

    while queue:
        t, nid, _, kind, _ = queue.pop()
        if kind == "exchange":
            child, par = by_id[nid], by_id[parent[nid]]
            t1_stamp = synced_read(nid, t)
            d1 = chan.unicast(child, par, t)
            if d1 is None:
                continue
            t2_stamp = synced_read(par.node_id, d1.t_delivered)
            t_reply = d1.t_delivered + turnaround_s
            t3_stamp = synced_read(par.node_id, t_reply)
            d2 = chan.unicast(par, child, t_reply)
            if d2 is None:
                continue
            t4_stamp = synced_read(nid, d2.t_delivered)
            delta = ((t2_stamp - t1_stamp) - (t4_stamp - t3_stamp)) / 2.0
            adj[nid] += delta
        else:
            sample_t.append(t)
            for a, b in samples:
                samples[(a, b)].append(synced_read(a, t) - synced_read(b, t))

    times = np.array(sample_t)
    traces = tuple(
        PairErrorTrace(a, b, times, np.array(samples[(a, b)]))
        for a, b in _pairs(synced_ids)
    )
    steady = round_period_s
    return SyncResult(
        protocol="tpsn",
        traces=traces,
        steady_after_s=steady,
        summary=summarize_traces(traces, steady),
        message_count=chan.message_count,
        messages_per_node_per_round=chan.message_count / len(nodes) / rounds,
        unsynchronized=orphans,
    )


def run_rbs(
    nodes,
    channel: ChannelModel,
    rounds: int,
    beacon_period_s: float = 1.0,
    window: int = 30,
    sender_id: str | None = None,
) -> SyncResult:
    """Receiver-receiver beacon comparison with windowed averaging.

    One node (lowest id unless sender_id names another) transmits reference
    beacons; receiver pairs estimate relative offsets by averaging timestamp
    differences over the last `window` beacons. The sender's own clock never
    enters the estimates. Errors are evaluated against the true clock
    relation at the window-center time (the natural timestamp of an average).
    """
    nodes = _sorted_nodes(nodes)
    if rounds < 1:
        raise ConfigurationError("rounds must be >= 1")
    if window < 1:
        raise ConfigurationError("window must be >= 1")
    chan = _ChannelState(channel)
    if sender_id is None:
        sender = nodes[0]
    else:
        match = [n for n in nodes if n.node_id == sender_id]
        if not match:
            raise ConfigurationError(f"unknown sender node '{sender_id}'")
        sender = match[0]
    receivers = [n for n in nodes if n.node_id != sender.node_id]
    t0 = 0.0
    in_range = [
        n for n in receivers if _in_range(sender, n, t0, channel.comm_range_m)
    ]
    if len(in_range) < 2:
        raise InsufficientReceiversError(
            "reference broadcasts need at least 2 receivers in range"
        )

    rx_ids = sorted(n.node_id for n in in_range)
    by_id = {n.node_id: n for n in nodes}
    stamps = {nid: [] for nid in rx_ids}
    beacon_t = []
    for k in range(rounds):
        t = k * beacon_period_s
        deliveries = chan.broadcast(sender, in_range, t)
        chan.message_count += len(deliveries)  # receivers share their stamps
        got = {d.receiver_id: d for d in deliveries}
        if len(got) < len(rx_ids):
            continue
        beacon_t.append(t)
        for nid in rx_ids:
            d = got[nid]
            stamps[nid].append(float(read_clock(by_id[nid].clock, d.t_delivered)))

    beacon_t = np.array(beacon_t)
    if beacon_t.size < window:
        raise EmptyResultError("fewer complete beacons than the averaging window")
    arr = {nid: np.array(stamps[nid]) for nid in rx_ids}

    kernel = np.ones(window) / window
    centers = np.convolve(beacon_t, kernel, mode="valid")
    traces = []
    for a, b in _pairs(rx_ids):
        diffs = arr[a] - arr[b]
        est = np.convolve(diffs, kernel, mode="valid")
        ca, cb = by_id[a].clock, by_id[b].clock
        truth = read_clock(ca, centers) - read_clock(cb, centers)
        traces.append(PairErrorTrace(a, b, centers, est - truth))
    traces = tuple(traces)
    steady = float(centers[0])
    return SyncResult(
        protocol="rbs",
        traces=traces,
        steady_after_s=steady,
        summary=summarize_traces(traces, steady),
        message_count=chan.message_count,
        messages_per_node_per_round=chan.message_count / len(nodes) / rounds,
        unsynchronized=tuple(
            sorted(set(n.node_id for n in receivers) - set(rx_ids))
        ),
    )


def run_ftsp(
    nodes,
    channel: ChannelModel,
    duration_s: float,
    beacon_period_s: float = 5.0,
    window: int = 8,
    root_timeout_periods: int = 3,
) -> SyncResult:
    """Flooding sync: MAC-stamped beacons, per-node offset+skew regression.

    The lowest-id node acts as root; nodes falling silent trigger lowest-id
    re-election. Receivers regress beacon global time on local MAC receive
    stamps over a sliding window and read synchronized time through the fit.
    """
    nodes = _sorted_nodes(nodes)
    if duration_s <= 0.0 or beacon_period_s <= 0.0:
        raise ConfigurationError("duration and beacon period must be positive")
    if window < 2:
        raise ConfigurationError("regression window must be >= 2")
    chan = _ChannelState(channel)
    by_id = {n.node_id: n for n in nodes}
    ids = [n.node_id for n in nodes]

    fits = {nid: None for nid in ids}  # (intercept, slope)
    points = {nid: [] for nid in ids}  # (local_mac_rx, global_in_beacon)
    believed_root = {nid: min(ids) for nid in ids}
    last_heard = {nid: 0.0 for nid in ids}
    seen_seq = {nid: -1 for nid in ids}
    timeout_s = root_timeout_periods * beacon_period_s

    def synced_read(nid: str, t: float) -> float:
        local = float(read_clock(by_id[nid].clock, t))
        fit = fits[nid]
        if nid == believed_root[nid] or fit is None:
            return local
        a, b = fit
        return a + b * local

    def refit(nid: str):
        pts = points[nid][-window:]
        if len(pts) < 2:
            return
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        xm, ym = x.mean(), y.mean()
        sxx = float(np.sum((x - xm) ** 2))
        if sxx == 0.0:
            return
        slope = float(np.sum((x - xm) * (y - ym)) / sxx)
        fits[nid] = (ym - slope * xm, slope)

    def accept(d: Delivery, seq: int, sender_root: str):
        """Apply one flood copy at the receiver; duplicates are dropped."""
        rid = d.receiver_id
        if believed_root[rid] == rid:
            if sender_root >= rid:
                return  # a root only yields to a strictly lower root id
        elif sender_root > believed_root[rid]:
            return
        if sender_root < believed_root[rid]:
            believed_root[rid] = sender_root
            points[rid].clear()
            fits[rid] = None
            seen_seq[rid] = seq - 1
        if seq <= seen_seq[rid]:
            return
        seen_seq[rid] = seq
        last_heard[rid] = d.t_delivered
        sender = d.sender_id
        g = synced_read(sender, d.t_phys_tx) + d.mac_tx_err_s
        loc = float(read_clock(by_id[rid].clock, d.t_phys_rx)) + d.mac_rx_err_s
        points[rid].append((loc, g))
        refit(rid)

    n_beacons = int(math.floor(duration_s / beacon_period_s))
    queue = EventQueue()
    for k in range(n_beacons):
        base = k * beacon_period_s
        for nid in ids:
            queue.push(base + 1e-4, nid, "originate", k)
            queue.push(base + 0.05 * beacon_period_s, nid, "relay", k)
        queue.push(base + 0.7 * beacon_period_s, "", "sample", k)

    sample_t, samples = [], {p: [] for p in _pairs(ids)}
    while queue:
        t, nid, _, kind, seq = queue.pop()
        if kind == "originate":
            if believed_root[nid] != nid:
                continue
            for d in chan.broadcast(by_id[nid], nodes, t):
                accept(d, seq, nid)
        elif kind == "relay":
            if believed_root[nid] == nid or fits[nid] is None:
                continue
            if seen_seq[nid] < 0:
                continue
            for d in chan.broadcast(by_id[nid], nodes, t):
                accept(d, seen_seq[nid], believed_root[nid])
        else:
            for cand in ids:
                if believed_root[cand] != cand and t - last_heard[cand] > timeout_s:
                    believed_root[cand] = cand
                    points[cand].clear()
                    fits[cand] = None
            sample_t.append(t)
            for a, b in samples:
                samples[(a, b)].append(synced_read(a, t) - synced_read(b, t))

    times = np.array(sample_t)
    traces = tuple(
        PairErrorTrace(a, b, times, np.array(samples[(a, b)]))
        for a, b in _pairs(ids)
    )
    steady = (window + 1) * beacon_period_s
    rounds = max(n_beacons, 1)
    return SyncResult(
        protocol="ftsp",
        traces=traces,
        steady_after_s=steady,
        summary=summarize_traces(traces, steady),
        message_count=chan.message_count,
        messages_per_node_per_round=chan.message_count / len(nodes) / rounds,
        unsynchronized=(),
    )


def run_cts(
    nodes,
    channel: ChannelModel,
    duration_s: float,
    beacon_period_s: float = 1.0,
    refresh_gain: float = 0.5,
) -> SyncResult:
    """Largest-group convergence: join bigger groups, track the group root.

    Beacons carry (group id, believed size, synchronized time). A node
    hearing a strictly larger group (ties broken by lower group id) adopts
    its time outright; beacons from the current group's root refresh the
    offset through an exponential moving average with the given gain.
    """
    nodes = _sorted_nodes(nodes)
    if duration_s <= 0.0 or beacon_period_s <= 0.0:
        raise ConfigurationError("duration and beacon period must be positive")
    if not 0.0 < refresh_gain <= 1.0:
        raise ConfigurationError("refresh_gain must be in (0, 1]")
    chan = _ChannelState(channel)
    by_id = {n.node_id: n for n in nodes}
    ids = [n.node_id for n in nodes]

    group = {nid: nid for nid in ids}
    adj = {nid: 0.0 for nid in ids}
    heard = {nid: {} for nid in ids}  # member id -> last heard t
    memory_s = 3.0 * beacon_period_s
    nominal = chan.nominal_delay_s()

    def synced_read(nid: str, t: float) -> float:
        return float(read_clock(by_id[nid].clock, t)) + adj[nid]

    def group_size(nid: str, now: float) -> int:
        members = heard[nid]
        alive = sum(1 for t_h in members.values() if now - t_h <= memory_s)
        return alive + 1

    n_periods = int(math.floor(duration_s / beacon_period_s))
    queue = EventQueue()
    n_nodes = len(ids)
    for k in range(n_periods):
        base = k * beacon_period_s
        for idx, nid in enumerate(ids):
            queue.push(base + (idx + 1) * beacon_period_s / (n_nodes + 2), nid, "beacon")
        queue.push(base + 0.9 * beacon_period_s, "", "sample")

    sample_t, samples = [], {p: [] for p in _pairs(ids)}
    while queue:
        t, nid, _, kind, _ = queue.pop()
        if kind == "beacon":
            node = by_id[nid]
            gid = group[nid]
            size = group_size(nid, t)
            stamp = synced_read(nid, t)
            for d in chan.broadcast(node, nodes, t):
                rid = d.receiver_id
                # align the receiver's synced clock to the beacon stamp plus
                # the nominal channel delay; jitter and propagation leak in
                target = stamp + nominal
                new_adj = adj[rid] + (target - synced_read(rid, d.t_delivered))
                mine = group[rid]
                my_size = group_size(rid, d.t_delivered)
                bigger = size > my_size or (size == my_size and gid < mine)
                if gid == mine:
                    heard[rid][nid] = d.t_delivered
                    if nid == gid:  # root beacon: EMA refresh
                        adj[rid] += refresh_gain * (new_adj - adj[rid])
                elif bigger:
                    group[rid] = gid
                    heard[rid] = {nid: d.t_delivered}
                    adj[rid] = new_adj
        else:
            sample_t.append(t)
            for a, b in samples:
                samples[(a, b)].append(synced_read(a, t) - synced_read(b, t))

    times = np.array(sample_t)
    traces = tuple(
        PairErrorTrace(a, b, times, np.array(samples[(a, b)]))
        for a, b in _pairs(ids)
    )
    steady = 12.0 * beacon_period_s
    rounds = max(n_periods, 1)
    return SyncResult(
        protocol="cts",
        traces=traces,
        steady_after_s=steady,
        summary=summarize_traces(traces, steady),
        message_count=chan.message_count,
        messages_per_node_per_round=chan.message_count / len(nodes) / rounds,
        unsynchronized=(),
    )


PROTOCOL_NAMES = ("gnss", "tpsn", "rbs", "ftsp", "cts")


@dataclass(frozen=True)
class ComparisonSpec:
    """Everything needed to run several protocols on one node realization."""

    nodes: tuple
    channel: ChannelModel
    duration_s: float
    protocols: tuple = PROTOCOL_NAMES
    pps_rate_hz: float = 1.0
    tpsn_root_id: str | None = None
    tpsn_round_period_s: float = 30.0
    rbs_beacon_period_s: float = 1.0
    rbs_window: int = 30
    ftsp_beacon_period_s: float = 5.0
    ftsp_window: int = 8
    cts_beacon_period_s: float = 1.0


@dataclass(frozen=True)
class ComparisonReport:
    results: dict

    def ranked(self) -> list:
        """(protocol, rms_s) pairs, best first."""
        rows = [(name, res.summary.rms_s) for name, res in self.results.items()]
        return sorted(rows, key=lambda r: r[1])

    def to_dict(self) -> dict:
        return {
            "results": {k: v.to_dict() for k, v in self.results.items()},
            "ranking": [{"protocol": p, "rms_s": r} for p, r in self.ranked()],
        }


def compare_protocols(spec: ComparisonSpec) -> ComparisonReport:
    """Run the selected protocols over the identical node/clock realization.

    Each protocol gets an independent channel stream derived from the channel
    seed and the protocol name, so adding or removing protocols never changes
    another protocol's result.
    """
    nodes = _sorted_nodes(spec.nodes)
    unknown = [p for p in spec.protocols if p not in PROTOCOL_NAMES]
    if unknown:
        raise ConfigurationError(
            f"unknown protocols {unknown}; known: {list(PROTOCOL_NAMES)}"
        )
    results = {}
    for proto in spec.protocols:
        chan = spec.channel.with_seed(derive_seed(spec.channel.seed, proto))
        if proto == "gnss":
            results[proto] = run_gnss_sync(
                nodes, spec.duration_s, pps_rate_hz=spec.pps_rate_hz
            )
        elif proto == "tpsn":
            rounds = max(1, int(spec.duration_s / spec.tpsn_round_period_s) - 1)
            root = spec.tpsn_root_id or nodes[0].node_id
            results[proto] = run_tpsn(
                nodes, chan, root, rounds, round_period_s=spec.tpsn_round_period_s
            )
        elif proto == "rbs":
            rounds = int(spec.duration_s / spec.rbs_beacon_period_s)
            results[proto] = run_rbs(
                nodes,
                chan,
                rounds,
                beacon_period_s=spec.rbs_beacon_period_s,
                window=spec.rbs_window,
            )
        elif proto == "ftsp":
            results[proto] = run_ftsp(
                nodes,
                chan,
                spec.duration_s,
                beacon_period_s=spec.ftsp_beacon_period_s,
                window=spec.ftsp_window,
            )
        elif proto == "cts":
            results[proto] = run_cts(
                nodes, chan, spec.duration_s, beacon_period_s=spec.cts_beacon_period_s
            )
    return ComparisonReport(results=results)
