"""Command-line surface: run scenarios, analyze PPS logs, evaluate calculators.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import (
    OffsetStats,
    guard_interval_gain,
    load_offset_series_csv,
    moving_window_mean,
    offset_statistics,
    ranging_error,
    relative_position_error,
    render_stats_table,
    required_timing_accuracy,
)
from .clocks import PPS_PRESET_NAMES
from .errors import (
    ConfigurationError,
    EmptyInputError,
    EmptyResultError,
    ScenarioValidationError,
    SimulationError,
    UndefinedRequirementError,
)
from .scenario import PRESET_NAMES, Scenario, load_preset, load_scenario, parse_scenario, run
from .visibility import AvailabilityClass

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

OUTDIR_ENV = "VANETSYNC_OUTDIR"

_TIME_UNITS = {"ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0}
_SPEED_UNITS = {"kmh": 1.0 / 3.6, "mps": 1.0}
_DISTANCE_UNITS = {"mm": 1e-3, "cm": 1e-2, "m": 1.0, "km": 1e3}


def _parse_unit(text: str, table: dict, kind: str) -> float:
    t = text.strip()
    for suffix in sorted(table, key=len, reverse=True):
        if t.endswith(suffix):
            try:
                return float(t[: -len(suffix)]) * table[suffix]
            except ValueError:
                break
    units = "/".join(sorted(table))
    raise argparse.ArgumentTypeError(
        f"expected a {kind} with an explicit unit suffix ({units}), got '{text}'"
    )


def parse_time(text: str) -> float:
    """`10ns` / `496us` / `3ms` / `2s` -> seconds."""
    return _parse_unit(text, _TIME_UNITS, "time")


def parse_speed(text: str) -> float:
    """`110kmh` / `30.6mps` -> meters per second."""
    return _parse_unit(text, _SPEED_UNITS, "speed")


def parse_distance(text: str) -> float:
    """`0.3m` / `30cm` / `1km` -> meters."""
    return _parse_unit(text, _DISTANCE_UNITS, "distance")


def format_seconds(value_s: float) -> str:
    """Engineering rendering of a time in the most natural unit."""
    mag = abs(value_s)
    if mag == 0.0:
        return "0 s"
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)):
        if mag >= scale:
            return f"{value_s / scale:.4g} {unit}"
    return f"{value_s / 1e-9:.4g} ns"


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with the usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_outdir() -> str:
    return os.environ.get(OUTDIR_ENV, ".")


def _resolve_scenario(ref: str) -> Scenario:
    path = Path(ref)
    if path.is_file():
        return load_scenario(path)
    if ref in PRESET_NAMES:
        return load_preset(ref)
    raise ScenarioValidationError(
        [f"scenario not found: '{ref}' is neither a file nor a preset "
         f"(presets: {', '.join(PRESET_NAMES)})"]
    )


def _apply_overrides(scn: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scn = scn.with_seed(args.seed)
    if getattr(args, "duration_hours", None) is not None:
        scn = replace(scn, duration_s=args.duration_hours * 3600.0)
    if getattr(args, "gdop_threshold", None) is not None:
        scn = replace(scn, gdop_threshold=args.gdop_threshold)
    return scn


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_availability(args) -> int:
    scn = _apply_overrides(_resolve_scenario(args.scenario), args)
    scn = replace(scn, outputs=("availability",))
    if not scn.constellations:
        raise ScenarioValidationError(
            ["constellations: required when availability is requested"]
        )
    art = run(scn, args.outdir)
    reports = art.availability

    if args.format == "json":
        _print_json({tag: rep.to_dict() for tag, rep in reports.items()})
    elif args.format == "csv":
        print("constellation,nsat_ge4_pct,nsat_1_3_pct,nsat_0_pct,"
              "gdop_le_thr_pct,gdop_gt_thr_pct")
        for tag, rep in reports.items():
            cp, gb = rep.class_percent, rep.gdop_breakdown
            print(
                f"{tag},{cp[AvailabilityClass.GE4]:.6f},"
                f"{cp[AvailabilityClass.ONE_TO_THREE]:.6f},"
                f"{cp[AvailabilityClass.ZERO]:.6f},"
                f"{gb['gdop_le_threshold']:.6f},{gb['gdop_gt_threshold']:.6f}"
            )
    else:
        print(f"Availability: {scn.name}  "
              f"(seed {scn.seed}, {scn.duration_s:.0f} s @ {scn.epoch_step_s:g} s)")
        thr = scn.gdop_threshold
        header = (f"{'Constellation':<14} {'NSAT>=4':>9} {'NSAT 1-3':>9} "
                  f"{'NSAT=0':>9} {f'GDOP<={thr:g}':>11} {f'GDOP>{thr:g}':>10}")
        print(header)
        for tag, rep in reports.items():
            cp, gb = rep.class_percent, rep.gdop_breakdown
            print(
                f"{tag:<14} {cp[AvailabilityClass.GE4]:>8.2f}% "
                f"{cp[AvailabilityClass.ONE_TO_THREE]:>8.2f}% "
                f"{cp[AvailabilityClass.ZERO]:>8.2f}% "
                f"{gb['gdop_le_threshold']:>10.2f}% "
                f"{gb['gdop_gt_threshold']:>9.2f}%"
            )
        print(f"files: {', '.join(art.files)}")
    return EXIT_OK


def cmd_pps_simulate(args) -> int:
    data = {
        "name": f"pps-{args.preset}",
        "seed": args.seed,
        "duration_s": args.hours * 3600.0,
        "outputs": ["pps"],
        "pps": {
            "presets": [args.preset],
            "rate_hz": args.rate_hz,
            "window_s": args.window,
        },
    }
    scn = parse_scenario(data, Path.cwd())
    art = run(scn, args.outdir)
    entry = art.pps_stats["presets"][args.preset]

    if args.format == "json":
        _print_json(art.pps_stats)
    else:
        print(f"PPS pairing '{args.preset}' over {args.hours:g} h "
              f"at {args.rate_hz:g} Hz (seed {args.seed})")
        print(_stats_block(args.preset, entry))
        print(f"files: {', '.join(art.files)}")
    return EXIT_OK


def _stats_block(label: str, entry: dict) -> str:
    st = OffsetStats(**{
        k: v for k, v in entry["stats"].items()
        if k in ("n", "mean_ns", "std_ns", "rms_ns", "peak_abs_ns", "min_ns", "max_ns")
    })
    lines = [render_stats_table([(label, st)])]
    if "window_s" in entry:
        lines.append(
            f"windowed means ({entry['window_s']:.0f} s): "
            f"min {entry['window_mean_min_ns']:.3f} ns, "
            f"max {entry['window_mean_max_ns']:.3f} ns"
        )
    lines.append(f"pulse-to-pulse jitter estimate: {entry['jitter_estimate_ns']:.3f} ns")
    return "\n".join(lines)


def cmd_pps_analyze(args) -> int:
    series = load_offset_series_csv(args.csv, source=Path(args.csv).name)
    stats = offset_statistics(series)
    payload = {"stats": stats.to_dict(), "n": series.n, "span_s": series.span_s}
    window_line = None
    if series.span_s >= args.window:
        windowed = moving_window_mean(series, args.window)
        wstats = offset_statistics(windowed)
        payload["window_s"] = args.window
        payload["window_mean_min_ns"] = wstats.min_ns
        payload["window_mean_max_ns"] = wstats.max_ns
        window_line = (
            f"windowed means ({args.window:.0f} s): "
            f"min {wstats.min_ns:.3f} ns, max {wstats.max_ns:.3f} ns "
            f"over {wstats.n} windows"
        )
    if args.format == "json":
        _print_json(payload)
    else:
        print(render_stats_table([(series.source or Path(args.csv).name, stats)]))
        if window_line:
            print(window_line)
        else:
            print(f"series span {series.span_s:g} s is shorter than the "
                  f"{args.window:g} s window; no windowed means")
    return EXIT_OK


def cmd_sync(args) -> int:
    scn = _apply_overrides(_resolve_scenario(args.scenario), args)
    scn = replace(scn, outputs=("sync",))
    if not scn.protocols.run:
        raise ScenarioValidationError(["protocols.run: must name at least one protocol"])
    art = run(scn, args.outdir)
    report = art.sync_report

    if args.format == "json":
        _print_json(report.to_dict())
    else:
        print(f"Synchronization comparison: {scn.name} (seed {scn.seed}, "
              f"{scn.protocols.sync_duration_s or scn.duration_s:.0f} s)")
        print(f"{'Protocol':<10} {'RMS':>12} {'Peak':>12} {'Mean':>12} "
              f"{'Messages':>9} {'Msg/node/round':>15}")
        for proto, _rms in report.ranked():
            res = report.results[proto]
            s = res.summary
            print(
                f"{proto:<10} {format_seconds(s.rms_s):>12} "
                f"{format_seconds(s.peak_s):>12} {format_seconds(s.mean_s):>12} "
                f"{res.message_count:>9d} {res.messages_per_node_per_round:>15.2f}"
            )
        print(f"files: {', '.join(art.files)}")
    return EXIT_OK


def cmd_calc(args) -> int:
    if args.which == "ranging":
        value = ranging_error(args.time)
        print(f"{value:.3f} m")
        print(f"formula: distance = c * t = 299792458 m/s * {args.time:g} s")
    elif args.which == "relpos":
        value = relative_position_error(args.speed, args.time)
        print(f"{value:.3f} m")
        print(f"formula: error = v * t = {args.speed:g} m/s * {args.time:g} s")
    elif args.which == "required-timing":
        value = required_timing_accuracy(args.speed, args.tolerance)
        print(format_seconds(value))
        print(f"formula: t = tolerance / v = {args.tolerance:g} m / {args.speed:g} m/s")
    else:  # guard
        value = guard_interval_gain(args.slots, args.slot, args.delta)
        print(value)
        print(
            f"formula: floor(slots * delta / slot) = "
            f"floor({args.slots} * {args.delta:g} / {args.slot:g}) = {value}"
        )
        if args.slots == 2016 and abs(args.slot - 496e-6) < 1e-12 \
                and abs(args.delta - 10e-6) < 1e-12:
            print(
                "note: a widely published figure for this configuration is 45 "
                "new slots; the floor arithmetic above gives 40 "
                "(2016 * 10us / 496us = 40.645...), so 45 is not reproducible "
                "from the stated slot counts"
            )
    return EXIT_OK


def cmd_report(args) -> int:
    scn = _apply_overrides(_resolve_scenario(args.scenario), args)
    art = run(scn, args.outdir)
    if args.format == "json":
        _print_json({
            "scenario": art.scenario_name,
            "outdir": str(art.outdir),
            "files": list(art.files),
        })
    else:
        print(f"Scenario '{art.scenario_name}' complete; "
              f"{len(art.files)} files in {art.outdir}:")
        for f in art.files:
            print(f"  {f}")
    return EXIT_OK


def _add_common(p, seed=True, outdir=True, fmt=True):
    if seed:
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    if outdir:
        p.add_argument("--outdir", default=_default_outdir(),
                       help=f"output directory (default: ${OUTDIR_ENV} or .)")
    if fmt:
        p.add_argument("--format", choices=("table", "json", "csv"),
                       default="table", help="stdout format")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vanetsync",
        description="Deterministic simulations of satellite-time and in-band "
                    "message synchronization for vehicle networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_av = sub.add_parser("availability", help="sky visibility and solution availability")
    p_av.add_argument("scenario", help="scenario file or preset name")
    p_av.add_argument("--duration-hours", type=float, default=None)
    p_av.add_argument("--gdop-threshold", type=float, default=None)
    _add_common(p_av)
    p_av.set_defaults(func=cmd_availability)

    p_pps = sub.add_parser("pps", help="pulse-per-second error simulation/analysis")
    pps_sub = p_pps.add_subparsers(dest="mode", required=True, metavar="MODE")

    p_sim = pps_sub.add_parser("simulate", help="simulate a receiver pairing")
    p_sim.add_argument("--preset", choices=PPS_PRESET_NAMES, required=True)
    p_sim.add_argument("--hours", type=float, default=24.0)
    p_sim.add_argument("--rate-hz", type=float, default=1.0)
    p_sim.add_argument("--window", type=parse_time, default=7200.0,
                       help="moving-average window, unit-suffixed (default 2h -> 7200s)")
    p_sim.add_argument("--seed", type=int, default=7)
    p_sim.add_argument("--outdir", default=_default_outdir())
    p_sim.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p_sim.set_defaults(func=cmd_pps_simulate)

    p_an = pps_sub.add_parser("analyze", help="analyze a t_s,offset_ns CSV")
    p_an.add_argument("csv", help="offset series CSV path")
    p_an.add_argument("--window", type=parse_time, default=7200.0)
    p_an.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p_an.set_defaults(func=cmd_pps_analyze)

    p_sync = sub.add_parser("sync", help="compare synchronization protocols")
    p_sync.add_argument("scenario", help="scenario file or preset name")
    _add_common(p_sync)
    p_sync.set_defaults(func=cmd_sync)

    p_calc = sub.add_parser("calc", help="requirement calculators")
    calc_sub = p_calc.add_subparsers(dest="which", required=True, metavar="WHICH")

    c_rng = calc_sub.add_parser("ranging", help="distance error of a timing error")
    c_rng.add_argument("time", type=parse_time, help="timing error, e.g. 10ns")
    c_rng.set_defaults(func=cmd_calc)

    c_rel = calc_sub.add_parser("relpos", help="relative position error at speed")
    c_rel.add_argument("speed", type=parse_speed, help="e.g. 110kmh")
    c_rel.add_argument("time", type=parse_time, help="e.g. 10ms")
    c_rel.set_defaults(func=cmd_calc)

    c_req = calc_sub.add_parser("required-timing",
                                help="timing accuracy needed for a position tolerance")
    c_req.add_argument("speed", type=parse_speed, help="e.g. 110kmh")
    c_req.add_argument("tolerance", type=parse_distance, help="e.g. 30cm")
    c_req.set_defaults(func=cmd_calc)

    c_grd = calc_sub.add_parser("guard", help="slots gained by shrinking a guard interval")
    c_grd.add_argument("--slots", type=int, required=True, help="slots per frame")
    c_grd.add_argument("--slot", type=parse_time, required=True, help="slot length, e.g. 496us")
    c_grd.add_argument("--delta", type=parse_time, required=True,
                       help="guard reduction per slot, e.g. 10us")
    c_grd.set_defaults(func=cmd_calc)

    p_rep = sub.add_parser("report", help="run a scenario's full output bundle")
    p_rep.add_argument("scenario", help="scenario file or preset name")
    _add_common(p_rep, fmt=True)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except ScenarioValidationError as exc:
        for err in exc.errors:
            print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigurationError, EmptyInputError, EmptyResultError,
            UndefinedRequirementError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
