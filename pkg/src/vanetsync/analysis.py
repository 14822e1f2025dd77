"""Offset-series statistics, moving-window means, and requirement calculators."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import (
    ConfigurationError,
    EmptyInputError,
    EmptyResultError,
    UndefinedRequirementError,
)

_SERIES_HEADER = ("t_s", "offset_ns")


@dataclass(frozen=True)
class OffsetSeries:
    """Timestamped clock-offset samples in nanoseconds."""

    times_s: np.ndarray
    offsets_ns: np.ndarray
    source: str = ""

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=float)
        x = np.asarray(self.offsets_ns, dtype=float)
        if t.ndim != 1 or x.ndim != 1 or t.shape != x.shape:
            raise ConfigurationError("series needs matching 1-D time/offset arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ConfigurationError("series timestamps must be strictly increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "offsets_ns", x)

    @property
    def n(self) -> int:
        return int(self.times_s.size)

    @property
    def span_s(self) -> float:
        if self.n < 1:
            return 0.0
        return float(self.times_s[-1] - self.times_s[0])


def save_offset_series_csv(series: OffsetSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SERIES_HEADER)
        for t, x in zip(series.times_s, series.offsets_ns):
            writer.writerow([f"{t:.9f}", f"{x:.6f}"])


def load_offset_series_csv(path, source: str | None = None) -> OffsetSeries:
    """Read a `t_s,offset_ns` CSV; `#` lines are comments; errors carry line numbers."""
    times, offsets = [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if tuple(fields) != _SERIES_HEADER:
                    raise ConfigurationError(
                        f"{path}: line {lineno}: expected header "
                        f"'{','.join(_SERIES_HEADER)}', got '{line}'"
                    )
                header_seen = True
                continue
            if len(fields) != 2:
                raise ConfigurationError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(fields)}"
                )
            try:
                times.append(float(fields[0]))
                offsets.append(float(fields[1]))
            except ValueError as exc:
                raise ConfigurationError(
                    f"{path}: line {lineno}: non-numeric value ({exc})"
                ) from None
    if not header_seen:
        raise ConfigurationError(
            f"{path}: missing header '{','.join(_SERIES_HEADER)}'"
        )
    return OffsetSeries(
        np.array(times), np.array(offsets), source=source or str(path)
    )


@dataclass(frozen=True)
class OffsetStats:
    """Population statistics of an offset series (rms^2 = mean^2 + std^2)."""

    n: int
    mean_ns: float
    std_ns: float
    rms_ns: float
    peak_abs_ns: float
    min_ns: float
    max_ns: float

    def __post_init__(self):
        lhs = self.rms_ns**2
        rhs = self.mean_ns**2 + self.std_ns**2
        if abs(lhs - rhs) > 1e-6 * max(lhs, rhs, 1e-30):
            raise ConfigurationError("rms^2 must equal mean^2 + std^2")
        if abs(self.mean_ns) > self.peak_abs_ns * (1 + 1e-12) + 1e-12:
            raise ConfigurationError("|mean| cannot exceed peak magnitude")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_ns": self.mean_ns,
            "std_ns": self.std_ns,
            "rms_ns": self.rms_ns,
            "peak_abs_ns": self.peak_abs_ns,
            "min_ns": self.min_ns,
            "max_ns": self.max_ns,
            "std_kind": "population",
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def offset_statistics(series: OffsetSeries) -> OffsetStats:
    if series.n < 1:
        raise EmptyInputError("cannot compute statistics of an empty series")
    x = series.offsets_ns
    mean = float(np.mean(x))
    std = float(np.std(x))
    rms = math.sqrt(mean * mean + std * std)
    return OffsetStats(
        n=series.n,
        mean_ns=mean,
        std_ns=std,
        rms_ns=rms,
        peak_abs_ns=float(np.max(np.abs(x))),
        min_ns=float(np.min(x)),
        max_ns=float(np.max(x)),
    )


def render_stats_table(rows: list) -> str:
    """Aligned text table of (label, OffsetStats) rows."""
    header = ("Series", "N", "Peak", "Mean", "STD", "RMS")
    lines = [header]
    for label, st in rows:
        lines.append(
            (
                str(label),
                str(st.n),
                f"{st.min_ns:+.2f}/{st.max_ns:+.2f}",
                f"{st.mean_ns:.2f}",
                f"{st.std_ns:.2f}",
                f"{st.rms_ns:.2f}",
            )
        )
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    out = []
    for idx, row in enumerate(lines):
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
        if idx == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


def moving_window_mean(
    series: OffsetSeries, window_s: float = 7200.0
) -> OffsetSeries:
    """Centered moving average; keeps timestamps whose full window is covered."""
    if window_s <= 0.0:
        raise ConfigurationError("window_s must be positive")
    if series.n < 1:
        raise EmptyInputError("cannot window an empty series")
    t = series.times_s
    half = 0.5 * window_s
    keep = (t - half >= t[0] - 1e-12) & (t + half <= t[-1] + 1e-12)
    if not np.any(keep):
        raise EmptyResultError(
            f"window of {window_s} s exceeds series span of {series.span_s} s"
        )
    cs = np.concatenate([[0.0], np.cumsum(series.offsets_ns)])
    tk = t[keep]
    lo = np.searchsorted(t, tk - half, side="left")
    hi = np.searchsorted(t, tk + half, side="right")
    means = (cs[hi] - cs[lo]) / (hi - lo)
    return OffsetSeries(tk, means, source=f"{series.source}|window={window_s:g}s")


def estimate_jitter_std_ns(series: OffsetSeries) -> float:
    """Recover the white pulse-to-pulse component from first differences.

    For offset = bias + slow drift + white jitter, consecutive differences are
    dominated by the jitter term, and std(diff)/sqrt(2) estimates its std.
    """
    if series.n < 2:
        raise EmptyInputError("jitter estimation needs at least 2 samples")
    d = np.diff(series.offsets_ns)
    return float(np.std(d) / math.sqrt(2.0))


def guard_interval_gain(
    frame_slots: int, slot_duration_s: float, delta_guard_s: float
) -> int:
    """Extra whole slots freed per frame by shaving delta_guard off each slot."""
    if frame_slots <= 0:
        raise ConfigurationError("frame_slots must be positive")
    if slot_duration_s <= 0.0:
        raise ConfigurationError("slot_duration_s must be positive")
    if delta_guard_s < 0.0:
        raise ConfigurationError("delta_guard_s must be non-negative")
    ratio = frame_slots * delta_guard_s / slot_duration_s
    return int(math.floor(ratio + 1e-9 * max(1.0, ratio)))


def ranging_error(timing_error_s: float) -> float:
    """Distance error equivalent of a timing error at the speed of light."""
    if timing_error_s < 0.0:
        raise ConfigurationError("timing_error_s must be non-negative")
    return SPEED_OF_LIGHT * timing_error_s


def relative_position_error(speed_m_per_s: float, timing_error_s: float) -> float:
    """Position uncertainty accrued at the given speed over a timing error."""
    if speed_m_per_s < 0.0:
        raise ConfigurationError("speed must be non-negative")
    if timing_error_s < 0.0:
        raise ConfigurationError("timing_error_s must be non-negative")
    return speed_m_per_s * timing_error_s


def required_timing_accuracy(
    speed_m_per_s: float, position_tolerance_m: float
) -> float:
    """Timing accuracy needed to hold a position tolerance at a given speed."""
    if speed_m_per_s <= 0.0:
        raise UndefinedRequirementError(
            "timing requirement is undefined at zero speed"
        )
    if position_tolerance_m < 0.0:
        raise ConfigurationError("position tolerance must be non-negative")
    return position_tolerance_m / speed_m_per_s
