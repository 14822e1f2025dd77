"""Declarative scenario assembly and reproducible pipeline execution.

Scenario files are TOML (`.scn`). Validation collects every violation with
its field path before rejecting; runs derive all randomness from the master
seed via named sub-streams and write outputs atomically.
"""

from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import estimation
from .analysis import (
    estimate_jitter_std_ns,
    moving_window_mean,
    offset_statistics,
    save_offset_series_csv,
)
from .clocks import (
    PPS_PRESET_NAMES,
    QuartzClock,
    pairwise_pps_series,
    pps_preset_fleet,
    pps_preset_pair,
)
from .constants import DEFAULT_GDOP_THRESHOLD
from .constellation import (
    ConstellationSet,
    build_nominal_constellation,
    elevation_azimuth,
    lla_to_ecef,
    propagate,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    InsufficientSatellitesError,
    ScenarioValidationError,
    SingularGeometryError,
)
from .protocols import (
    PROTOCOL_NAMES,
    ChannelModel,
    ComparisonSpec,
    DelayDistribution,
    VehicleNode,
    compare_protocols,
)
from .rng import derive_seed
from .visibility import (
    MaskSchedule,
    Trajectory,
    VisibilityMask,
    availability_summary,
    load_trajectory_csv,
    urban_canyon_schedule,
)

OUTPUT_KINDS = ("availability", "pvt", "pps", "sync")
MASK_KINDS = ("open-sky", "urban-canyon")


@dataclass(frozen=True)
class ReceiverSpec:
    latitude_deg: float = 0.0
    longitude_deg: float = 0.0
    height_m: float = 0.0
    trajectory_file: str | None = None


@dataclass(frozen=True)
class MaskSpec:
    kind: str = "open-sky"
    base_cutoff_deg: float = 10.0
    cycle_period_s: float = 1200.0
    canyon_fraction: float = 0.24
    wall_elevation_deg: float = 57.0
    street_half_width_deg: float = 24.0
    headings_deg: tuple = (0.0, 90.0, 180.0, 270.0)


@dataclass(frozen=True)
class PpsSpec:
    presets: tuple = ("same-model", "diff-model")
    rate_hz: float = 1.0
    window_s: float = 7200.0
    duration_s: float | None = None


@dataclass(frozen=True)
class PvtSpec:
    constellation: str | None = None
    sigma_pseudorange_m: float = 5.0
    sigma_doppler_mps: float = 0.1
    interval_s: float = 60.0
    clock_bias_s: float = 1e-3
    clock_drift_s_per_s: float = 0.0


@dataclass(frozen=True)
class NodesSpec:
    count: int = 6
    spacing_m: float = 30.0
    clock_offset_range_s: float = 5e-4
    clock_skew_range: float = 5e-8
    pps_preset: str = "same-model"


@dataclass(frozen=True)
class ChannelSpec:
    comm_range_m: float = 1000.0
    tx_mean_us: float = 50.0
    tx_jitter_us: float = 5.0
    rx_mean_us: float = 60.0
    rx_jitter_us: float = 20.0
    mac_jitter_us: float = 2.0

    def to_model(self, seed: int) -> ChannelModel:
        return ChannelModel(
            comm_range_m=self.comm_range_m,
            tx_delay=DelayDistribution(self.tx_mean_us, self.tx_jitter_us),
            rx_delay=DelayDistribution(self.rx_mean_us, self.rx_jitter_us),
            mac_timestamp_jitter_us=self.mac_jitter_us,
            seed=seed,
        )


@dataclass(frozen=True)
class ProtocolsSpec:
    run: tuple = PROTOCOL_NAMES
    sync_duration_s: float | None = None
    pps_rate_hz: float = 1.0
    tpsn_round_period_s: float = 30.0
    rbs_beacon_period_s: float = 1.0
    rbs_window: int = 30
    ftsp_beacon_period_s: float = 5.0
    ftsp_window: int = 8
    cts_beacon_period_s: float = 1.0


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration_s: float
    epoch_step_s: float
    constellations: tuple
    outputs: tuple
    gdop_threshold: float
    receiver: ReceiverSpec
    mask: MaskSpec
    pps: PpsSpec
    pvt: PvtSpec
    nodes: NodesSpec
    channel: ChannelSpec
    protocols: ProtocolsSpec
    source_dir: Path

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


class _Reader:
    """Typed extraction from nested dicts, collecting field-path errors."""

    def __init__(self, data: dict):
        self.data = data
        self.errors: list = []
        self._consumed: dict = {}

    def _mark(self, table: str, key: str):
        self._consumed.setdefault(table, set()).add(key)

    def table(self, name: str) -> dict:
        self._mark("", name)
        sub = self.data.get(name, {})
        if not isinstance(sub, dict):
            self.errors.append(f"{name}: expected a table")
            return {}
        return sub

    def get(self, table: str, d: dict, key: str, kinds, default, check=None):
        path = f"{table}.{key}" if table else key
        self._mark(table, key)
        if key not in d:
            if default is _REQUIRED:
                self.errors.append(f"{path}: required field is missing")
                return None
            return default
        val = d[key]
        if kinds is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if kinds is int and isinstance(val, bool):
            self.errors.append(f"{path}: expected an integer")
            return default if default is not _REQUIRED else None
        if not isinstance(val, kinds):
            self.errors.append(f"{path}: expected {getattr(kinds, '__name__', kinds)}")
            return default if default is not _REQUIRED else None
        if check is not None:
            msg = check(val)
            if msg:
                self.errors.append(f"{path}: {msg}")
                return default if default is not _REQUIRED else None
        return val

    def check_unknown(self, table: str, d: dict):
        known = self._consumed.get(table, set())
        for key in d:
            if key not in known:
                path = f"{table}.{key}" if table else key
                self.errors.append(f"{path}: unknown field")


class _Req:
    pass


_REQUIRED = _Req()


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _str_list(reader: _Reader, table: str, d: dict, key: str, default, allowed=None):
    raw = reader.get(table, d, key, list, default)
    if raw is default or raw is None:
        return default
    out = []
    path = f"{table}.{key}" if table else key
    for i, item in enumerate(raw):
        if not isinstance(item, str):
            reader.errors.append(f"{path}[{i}]: expected a string")
            continue
        if allowed is not None and item not in allowed:
            reader.errors.append(
                f"{path}[{i}]: unknown value '{item}' (known: {', '.join(allowed)})"
            )
            continue
        out.append(item)
    return tuple(out)


def parse_scenario(data: dict, source_dir) -> Scenario:
    """Build a validated Scenario; raises with every violation listed."""
    source_dir = Path(source_dir)
    r = _Reader(data)

    name = r.get("", data, "name", str, _REQUIRED, lambda v: None if v else "must be non-empty")
    seed = r.get("", data, "seed", int, _REQUIRED)
    duration = r.get("", data, "duration_s", float, _REQUIRED, _positive)
    step = r.get("", data, "epoch_step_s", float, 10.0, _positive)
    gdop_thr = r.get("", data, "gdop_threshold", float, DEFAULT_GDOP_THRESHOLD, _positive)
    constellations = _str_list(
        r, "", data, "constellations", (), allowed=[c.value for c in ConstellationSet]
    )
    outputs = _str_list(r, "", data, "outputs", _REQUIRED, allowed=OUTPUT_KINDS)
    if outputs is _REQUIRED:
        r.errors.append("outputs: required field is missing")
        outputs = ()
    elif not outputs:
        r.errors.append("outputs: must request at least one pipeline")

    needs_sky = "availability" in outputs or "pvt" in outputs
    if needs_sky and not constellations:
        r.errors.append("constellations: required when availability or pvt is requested")

    rd = r.table("receiver")
    receiver = ReceiverSpec(
        latitude_deg=r.get("receiver", rd, "latitude_deg", float, 0.0,
                           lambda v: None if -90 <= v <= 90 else "must be in [-90, 90]"),
        longitude_deg=r.get("receiver", rd, "longitude_deg", float, 0.0,
                            lambda v: None if -180 <= v <= 360 else "must be in [-180, 360]"),
        height_m=r.get("receiver", rd, "height_m", float, 0.0),
        trajectory_file=r.get("receiver", rd, "trajectory_file", str, None),
    )
    if receiver.trajectory_file is not None:
        p = source_dir / receiver.trajectory_file
        if not p.is_file():
            r.errors.append(f"receiver.trajectory_file: file not found: {p}")
    elif needs_sky and not rd:
        r.errors.append("receiver: required when availability or pvt is requested")
    r.check_unknown("receiver", rd)

    md = r.table("mask")
    mask = MaskSpec(
        kind=r.get("mask", md, "kind", str, "open-sky",
                   lambda v: None if v in MASK_KINDS else f"unknown kind (known: {', '.join(MASK_KINDS)})"),
        base_cutoff_deg=r.get("mask", md, "base_cutoff_deg", float, 10.0,
                              lambda v: None if 0 <= v < 90 else "must be in [0, 90)"),
        cycle_period_s=r.get("mask", md, "cycle_period_s", float, 1200.0, _positive),
        canyon_fraction=r.get("mask", md, "canyon_fraction", float, 0.24,
                              lambda v: None if 0 <= v <= 1 else "must be in [0, 1]"),
        wall_elevation_deg=r.get("mask", md, "wall_elevation_deg", float, 57.0,
                                 lambda v: None if 0 <= v < 90 else "must be in [0, 90)"),
        street_half_width_deg=r.get("mask", md, "street_half_width_deg", float, 24.0,
                                    lambda v: None if 0 < v < 90 else "must be in (0, 90)"),
        headings_deg=tuple(
            r.get("mask", md, "headings_deg", list, [0.0, 90.0, 180.0, 270.0])
        ),
    )
    if mask.wall_elevation_deg < mask.base_cutoff_deg:
        r.errors.append("mask.wall_elevation_deg: must not be below mask.base_cutoff_deg")
    r.check_unknown("mask", md)

    pd = r.table("pps")
    pps = PpsSpec(
        presets=_str_list(r, "pps", pd, "presets", ("same-model", "diff-model"),
                          allowed=PPS_PRESET_NAMES),
        rate_hz=r.get("pps", pd, "rate_hz", float, 1.0, _positive),
        window_s=r.get("pps", pd, "window_s", float, 7200.0, _positive),
        duration_s=r.get("pps", pd, "duration_s", float, None, _positive),
    )
    if "pps" in outputs and not pps.presets:
        r.errors.append("pps.presets: must name at least one preset")
    r.check_unknown("pps", pd)

    vd = r.table("pvt")
    pvt = PvtSpec(
        constellation=r.get("pvt", vd, "constellation", str, None,
                            lambda v: None if v in [c.value for c in ConstellationSet]
                            else "unknown constellation"),
        sigma_pseudorange_m=r.get("pvt", vd, "sigma_pseudorange_m", float, 5.0, _non_negative),
        sigma_doppler_mps=r.get("pvt", vd, "sigma_doppler_mps", float, 0.1, _non_negative),
        interval_s=r.get("pvt", vd, "interval_s", float, 60.0, _positive),
        clock_bias_s=r.get("pvt", vd, "clock_bias_s", float, 1e-3),
        clock_drift_s_per_s=r.get("pvt", vd, "clock_drift_s_per_s", float, 0.0),
    )
    r.check_unknown("pvt", vd)

    nd = r.table("nodes")
    nodes = NodesSpec(
        count=r.get("nodes", nd, "count", int, 6,
                    lambda v: None if v >= 2 else "must be at least 2"),
        spacing_m=r.get("nodes", nd, "spacing_m", float, 30.0, _positive),
        clock_offset_range_s=r.get("nodes", nd, "clock_offset_range_s", float, 5e-4, _non_negative),
        clock_skew_range=r.get("nodes", nd, "clock_skew_range", float, 5e-8,
                               lambda v: None if 0 <= v <= 1e-4 else "must be in [0, 1e-4]"),
        pps_preset=r.get("nodes", nd, "pps_preset", str, "same-model",
                         lambda v: None if v in PPS_PRESET_NAMES
                         else f"unknown preset (known: {', '.join(PPS_PRESET_NAMES)})"),
    )
    r.check_unknown("nodes", nd)

    cd = r.table("channel")
    channel = ChannelSpec(
        comm_range_m=r.get("channel", cd, "comm_range_m", float, 1000.0, _positive),
        tx_mean_us=r.get("channel", cd, "tx_mean_us", float, 50.0, _non_negative),
        tx_jitter_us=r.get("channel", cd, "tx_jitter_us", float, 5.0, _non_negative),
        rx_mean_us=r.get("channel", cd, "rx_mean_us", float, 60.0, _non_negative),
        rx_jitter_us=r.get("channel", cd, "rx_jitter_us", float, 20.0, _non_negative),
        mac_jitter_us=r.get("channel", cd, "mac_jitter_us", float, 2.0, _non_negative),
    )
    r.check_unknown("channel", cd)

    od = r.table("protocols")
    protocols = ProtocolsSpec(
        run=_str_list(r, "protocols", od, "run", PROTOCOL_NAMES, allowed=PROTOCOL_NAMES),
        sync_duration_s=r.get("protocols", od, "sync_duration_s", float, None, _positive),
        pps_rate_hz=r.get("protocols", od, "pps_rate_hz", float, 1.0, _positive),
        tpsn_round_period_s=r.get("protocols", od, "tpsn_round_period_s", float, 30.0, _positive),
        rbs_beacon_period_s=r.get("protocols", od, "rbs_beacon_period_s", float, 1.0, _positive),
        rbs_window=r.get("protocols", od, "rbs_window", int, 30,
                         lambda v: None if v >= 1 else "must be >= 1"),
        ftsp_beacon_period_s=r.get("protocols", od, "ftsp_beacon_period_s", float, 5.0, _positive),
        ftsp_window=r.get("protocols", od, "ftsp_window", int, 8,
                          lambda v: None if v >= 2 else "must be >= 2"),
        cts_beacon_period_s=r.get("protocols", od, "cts_beacon_period_s", float, 1.0, _positive),
    )
    if "sync" in outputs and not protocols.run:
        r.errors.append("protocols.run: must name at least one protocol")
    r.check_unknown("protocols", od)

    r.check_unknown("", data)
    if r.errors:
        raise ScenarioValidationError(r.errors)

    return Scenario(
        name=name,
        seed=seed,
        duration_s=duration,
        epoch_step_s=step,
        constellations=constellations,
        outputs=tuple(outputs),
        gdop_threshold=gdop_thr,
        receiver=receiver,
        mask=mask,
        pps=pps,
        pvt=pvt,
        nodes=nodes,
        channel=channel,
        protocols=protocols,
        source_dir=source_dir,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioValidationError([f"scenario file not found: {path}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioValidationError([f"{path}: invalid syntax: {exc}"]) from None
    return parse_scenario(data, path.parent)


PRESET_DIR = Path(__file__).parent / "presets"
PRESET_NAMES = ("open-sky", "urban-canyon", "pps-bench", "sync-compare")


def preset_path(name: str) -> Path:
    p = PRESET_DIR / f"{name}.scn"
    if not p.is_file():
        raise ConfigurationError(
            f"unknown preset '{name}' (known: {', '.join(PRESET_NAMES)})"
        )
    return p


def load_preset(name: str) -> Scenario:
    return load_scenario(preset_path(name))


def _atomic_write_text(path: Path, text: str):
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _atomic_save_series(series, path: Path) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    save_offset_series_csv(series, tmp)
    os.replace(tmp, path)


def build_trajectory(scn: Scenario) -> Trajectory:
    if scn.receiver.trajectory_file is not None:
        return load_trajectory_csv(scn.source_dir / scn.receiver.trajectory_file)
    pos = lla_to_ecef(
        scn.receiver.latitude_deg, scn.receiver.longitude_deg, scn.receiver.height_m
    )
    return Trajectory.static(pos, scn.duration_s)


def build_mask(scn: Scenario):
    ms = scn.mask
    if ms.kind == "open-sky":
        return VisibilityMask.uniform(math.radians(ms.base_cutoff_deg))
    return urban_canyon_schedule(
        scn.duration_s,
        cycle_period_s=ms.cycle_period_s,
        canyon_fraction=ms.canyon_fraction,
        wall_elevation_rad=math.radians(ms.wall_elevation_deg),
        street_half_width_rad=math.radians(ms.street_half_width_deg),
        base_cutoff_rad=math.radians(ms.base_cutoff_deg),
        headings_rad=tuple(math.radians(h) for h in ms.headings_deg),
    )


def build_sync_nodes(scn: Scenario) -> tuple:
    """Node fleet on an east-aligned platoon with seeded clocks and PPS."""
    rng = np.random.default_rng(derive_seed(scn.seed, "nodes"))
    origin = lla_to_ecef(
        scn.receiver.latitude_deg, scn.receiver.longitude_deg, scn.receiver.height_m
    )
    east = estimation.enu_rotation(origin)[0]
    duration = scn.protocols.sync_duration_s or scn.duration_s
    fleet = pps_preset_fleet(
        scn.nodes.pps_preset, scn.nodes.count, derive_seed(scn.seed, "pps-fleet")
    )
    nodes = []
    for i in range(scn.nodes.count):
        offset = rng.uniform(-scn.nodes.clock_offset_range_s, scn.nodes.clock_offset_range_s)
        skew = rng.uniform(-scn.nodes.clock_skew_range, scn.nodes.clock_skew_range)
        pos = origin + i * scn.nodes.spacing_m * east
        nodes.append(
            VehicleNode(
                node_id=f"V{i:02d}",
                trajectory=Trajectory.static(pos, duration),
                clock=QuartzClock(1.0 + skew, offset, node_id=f"V{i:02d}"),
                pps=fleet[i],
                gnss_available=True,
            )
        )
    return tuple(nodes)


@dataclass(frozen=True)
class RunArtifacts:
    scenario_name: str
    outdir: Path
    files: tuple
    availability: dict | None = None
    pvt_summary: dict | None = None
    pps_stats: dict | None = None
    sync_report: object = None


def _run_availability(scn: Scenario, outdir: Path, files: list) -> dict:
    trajectory = build_trajectory(scn)
    mask = build_mask(scn)
    reports = {}
    rows = []
    for tag in scn.constellations:
        elements = build_nominal_constellation(ConstellationSet(tag))
        rep = availability_summary(
            elements,
            trajectory,
            mask,
            epoch_step_s=scn.epoch_step_s,
            gdop_threshold=scn.gdop_threshold,
            constellation_tag=tag,
        )
        reports[tag] = rep
        for rec in rep.records:
            g = f"{rec.gdop:.6f}" if rec.gdop is not None else "nan"
            rows.append((tag, f"{rec.t:.3f}", rec.nsat, g, rec.cls.value))
    payload = {
        "scenario": scn.name,
        "seed": scn.seed,
        "epoch_step_s": scn.epoch_step_s,
        "reports": {tag: rep.to_dict() for tag, rep in reports.items()},
    }
    _write_json(outdir / "availability.json", payload)
    _write_csv(
        outdir / "availability_epochs.csv",
        ("constellation", "t_s", "nsat", "gdop", "class"),
        rows,
    )
    files += ["availability.json", "availability_epochs.csv"]
    return reports


def _run_pvt(scn: Scenario, outdir: Path, files: list) -> dict:
    tag = scn.pvt.constellation or scn.constellations[0]
    elements = build_nominal_constellation(ConstellationSet(tag))
    trajectory = build_trajectory(scn)
    mask = build_mask(scn)
    pvt_seed = derive_seed(scn.seed, "pvt")
    noise = estimation.MeasurementNoiseModel(
        sigma_pseudorange_m=scn.pvt.sigma_pseudorange_m,
        sigma_doppler_mps=scn.pvt.sigma_doppler_mps,
        seed=pvt_seed,
    )

    n_epochs = int(math.floor(scn.duration_s / scn.pvt.interval_s + 1e-9)) + 1
    times = np.arange(n_epochs) * scn.pvt.interval_s
    rows = []
    bias_errs, pos_errs, n_valid = [], [], 0
    for k, t in enumerate(times):
        t = float(t)
        rx_pos = trajectory.positions_at(np.array([t]))[0]
        m = mask.mask_at(t) if isinstance(mask, MaskSchedule) else mask
        states = [(e.sat_id, propagate(e, t)) for e in elements]
        visible = []
        for sat_id, st in states:
            el, az = elevation_azimuth(st.position_m, rx_pos)
            if el > m.min_elevation_at(az):
                visible.append((sat_id, st))
        truth_bias = scn.pvt.clock_bias_s + scn.pvt.clock_drift_s_per_s * t
        if len(visible) < 4:
            rows.append((f"{t:.3f}", 0, len(visible), "nan", "nan", "nan", "nan"))
            continue
        truth = estimation.ReceiverTruth(
            position_m=rx_pos,
            clock_bias_s=truth_bias,
            clock_drift_s_per_s=scn.pvt.clock_drift_s_per_s,
        )
        meas = estimation.simulate_pseudoranges(
            truth, visible, noise.with_seed(derive_seed(pvt_seed, f"epoch:{k}"))
        )
        try:
            sol = estimation.solve_pvt(meas, gdop_threshold=scn.gdop_threshold)
        except (SingularGeometryError, InsufficientSatellitesError, ConvergenceError):
            rows.append((f"{t:.3f}", 0, len(visible), "nan", "nan", "nan", "nan"))
            continue
        bias_err_ns = (sol.clock_bias_s - truth_bias) * 1e9
        pos_err = float(np.linalg.norm(sol.position_m - rx_pos))
        rows.append(
            (
                f"{t:.3f}",
                int(sol.valid),
                sol.nsat,
                f"{sol.dop.gdop:.6f}",
                f"{sol.dop.tdop:.6f}",
                f"{bias_err_ns:.3f}",
                f"{pos_err:.6f}",
            )
        )
        if sol.valid:
            n_valid += 1
            bias_errs.append(bias_err_ns)
            pos_errs.append(pos_err)

    summary = {
        "scenario": scn.name,
        "constellation": tag,
        "epochs": len(rows),
        "valid_epochs": n_valid,
        "valid_percent": 100.0 * n_valid / max(len(rows), 1),
        "bias_error_rms_ns": float(np.sqrt(np.mean(np.square(bias_errs)))) if bias_errs else None,
        "position_error_rms_m": float(np.sqrt(np.mean(np.square(pos_errs)))) if pos_errs else None,
        "sigma_pseudorange_m": scn.pvt.sigma_pseudorange_m,
    }
    _write_csv(
        outdir / "pvt_records.csv",
        ("t", "valid", "nsat", "gdop", "tdop", "bias_ns", "pos_err_m"),
        rows,
    )
    _write_json(outdir / "pvt_summary.json", summary)
    files += ["pvt_records.csv", "pvt_summary.json"]
    return summary


def _run_pps(scn: Scenario, outdir: Path, files: list) -> dict:
    duration = scn.pps.duration_s or scn.duration_s
    n_pulses = int(math.floor(duration * scn.pps.rate_hz)) + 1
    all_stats = {"scenario": scn.name, "seed": scn.seed, "presets": {}}
    for preset in scn.pps.presets:
        a, b = pps_preset_pair(preset, derive_seed(scn.seed, f"pps:{preset}"))
        series = pairwise_pps_series(a, b, n_pulses, rate_hz=scn.pps.rate_hz)
        stats = offset_statistics(series)
        entry = {
            "stats": stats.to_dict(),
            "jitter_estimate_ns": estimate_jitter_std_ns(series),
            "n_pulses": n_pulses,
        }
        series_name = f"pps_{preset}.csv"
        _atomic_save_series(series, outdir / series_name)
        files.append(series_name)
        if series.span_s >= scn.pps.window_s:
            windowed = moving_window_mean(series, scn.pps.window_s)
            wstats = offset_statistics(windowed)
            entry["window_s"] = scn.pps.window_s
            entry["window_mean_min_ns"] = wstats.min_ns
            entry["window_mean_max_ns"] = wstats.max_ns
            wname = f"pps_{preset}_window.csv"
            _atomic_save_series(windowed, outdir / wname)
            files.append(wname)
        all_stats["presets"][preset] = entry
    _write_json(outdir / "pps_stats.json", all_stats)
    files.append("pps_stats.json")
    return all_stats


def _run_sync(scn: Scenario, outdir: Path, files: list):
    nodes = build_sync_nodes(scn)
    channel = scn.channel.to_model(derive_seed(scn.seed, "channel"))
    duration = scn.protocols.sync_duration_s or scn.duration_s
    spec = ComparisonSpec(
        nodes=nodes,
        channel=channel,
        duration_s=duration,
        protocols=scn.protocols.run,
        pps_rate_hz=scn.protocols.pps_rate_hz,
        tpsn_round_period_s=scn.protocols.tpsn_round_period_s,
        rbs_beacon_period_s=scn.protocols.rbs_beacon_period_s,
        rbs_window=scn.protocols.rbs_window,
        ftsp_beacon_period_s=scn.protocols.ftsp_beacon_period_s,
        ftsp_window=scn.protocols.ftsp_window,
        cts_beacon_period_s=scn.protocols.cts_beacon_period_s,
    )
    report = compare_protocols(spec)
    for proto, result in report.results.items():
        rows = []
        for tr in result.traces:
            for t, e in zip(tr.times_s, tr.errors_s):
                rows.append((tr.node_a, tr.node_b, f"{t:.6f}", f"{e:.12e}"))
        name = f"sync_{proto}.csv"
        _write_csv(outdir / name, ("node_a", "node_b", "t_s", "error_s"), rows)
        files.append(name)
    payload = {"scenario": scn.name, "seed": scn.seed}
    payload.update(report.to_dict())
    _write_json(outdir / "sync_compare.json", payload)
    files.append("sync_compare.json")
    return report


def run(scenario: Scenario, outdir) -> RunArtifacts:
    """Execute the requested pipelines in a fixed order, writing atomically."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files: list = []
    availability = pvt_summary = pps_stats = sync_report = None
    if "availability" in scenario.outputs:
        availability = _run_availability(scenario, outdir, files)
    if "pvt" in scenario.outputs:
        pvt_summary = _run_pvt(scenario, outdir, files)
    if "pps" in scenario.outputs:
        pps_stats = _run_pps(scenario, outdir, files)
    if "sync" in scenario.outputs:
        sync_report = _run_sync(scenario, outdir, files)
    return RunArtifacts(
        scenario_name=scenario.name,
        outdir=outdir,
        files=tuple(files),
        availability=availability,
        pvt_summary=pvt_summary,
        pps_stats=pps_stats,
        sync_report=sync_report,
    )
