"""Elevation masks, per-epoch satellite visibility, availability statistics.

Masks are azimuth-sectored elevation cutoffs. A street canyon is two low
cutoff sectors along the street axis and high wall sectors elsewhere; a drive
through a city is a schedule of such masks over time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import _kernels
from .constants import DEFAULT_ELEVATION_CUTOFF_RAD, DEFAULT_GDOP_THRESHOLD
from .constellation import OrbitElements, elements_array, elevation_azimuth
from .errors import ConfigurationError, EmptyInputError

TWO_PI = 2.0 * math.pi


class AvailabilityClass(str, Enum):
    """Satellite-count bins used by the availability tables."""

    GE4 = "GE4"
    ONE_TO_THREE = "ONE_TO_THREE"
    ZERO = "ZERO"


class VisibilitySector(NamedTuple):
    az_start_rad: float
    az_end_rad: float
    min_elevation_rad: float


@dataclass(frozen=True)
class VisibilityMask:
    """Azimuth-sectored elevation cutoffs covering the full horizon."""

    sectors: tuple[VisibilitySector, ...]
    base_cutoff_rad: float = DEFAULT_ELEVATION_CUTOFF_RAD

    def __post_init__(self):
        if not self.sectors:
            raise ConfigurationError("mask needs at least one sector")
        secs = tuple(sorted(self.sectors, key=lambda s: s.az_start_rad))
        object.__setattr__(self, "sectors", secs)
        tol = 1e-9
        if abs(secs[0].az_start_rad) > tol:
            raise ConfigurationError("sectors must start at azimuth 0")
        for prev, nxt in zip(secs, secs[1:]):
            if abs(prev.az_end_rad - nxt.az_start_rad) > tol:
                raise ConfigurationError(
                    "sectors must tile the horizon without gaps or overlap"
                )
        if abs(secs[-1].az_end_rad - TWO_PI) > tol:
            raise ConfigurationError("sectors must end at azimuth 2pi")
        for s in secs:
            if s.min_elevation_rad < self.base_cutoff_rad - 1e-12:
                raise ConfigurationError(
                    "sector minimum elevation below the base cutoff"
                )

    @classmethod
    def uniform(cls, cutoff_rad: float = DEFAULT_ELEVATION_CUTOFF_RAD):
        return cls(
            sectors=(VisibilitySector(0.0, TWO_PI, cutoff_rad),),
            base_cutoff_rad=cutoff_rad,
        )

    def min_elevation_at(self, az_rad: float) -> float:
        az = az_rad % TWO_PI
        for s in reversed(self.sectors):
            if s.az_start_rad <= az:
                return s.min_elevation_rad
        return self.sectors[0].min_elevation_rad

    def sector_arrays(self):
        starts = np.array([s.az_start_rad for s in self.sectors])
        ends = np.array([s.az_end_rad for s in self.sectors])
        mins = np.array([s.min_elevation_rad for s in self.sectors])
        return starts, ends, mins


def street_canyon(
    heading_rad: float,
    wall_elevation_rad: float,
    street_half_width_rad: float,
    base_cutoff_rad: float = DEFAULT_ELEVATION_CUTOFF_RAD,
) -> VisibilityMask:
    """Canyon mask: open corridor along the street axis, walls elsewhere.

    The corridor spans +-street_half_width around the heading and around the
    opposite direction; inside it the base cutoff applies, outside it the
    wall elevation does.
    """
    if not 0.0 < street_half_width_rad < math.pi / 2:
        raise ConfigurationError("street half width must be in (0, pi/2)")
    if wall_elevation_rad < base_cutoff_rad:
        raise ConfigurationError("wall elevation below base cutoff")

    h = heading_rad % TWO_PI
    w = street_half_width_rad
    bounds = sorted(
        {0.0}
        | {(h + d) % TWO_PI for d in (-w, w, math.pi - w, math.pi + w)}
    )

    def in_street(az):
        d = abs((az - h + math.pi / 2) % math.pi - math.pi / 2)
        return d <= w + 1e-12

    sectors = []
    for i, start in enumerate(bounds):
        end = bounds[i + 1] if i + 1 < len(bounds) else TWO_PI
        if end - start < 1e-12:
            continue
        mid = 0.5 * (start + end)
        min_el = base_cutoff_rad if in_street(mid) else wall_elevation_rad
        sectors.append(VisibilitySector(start, end, min_el))
    return VisibilityMask(sectors=tuple(sectors), base_cutoff_rad=base_cutoff_rad)


@dataclass(frozen=True)
class MaskSchedule:
    """Time-ordered sequence of masks, e.g. canyon legs alternating with
    open stretches along a drive."""

    entries: tuple[tuple[float, float, VisibilityMask], ...]

    def __post_init__(self):
        if not self.entries:
            raise ConfigurationError("schedule needs at least one entry")
        for s, e, _ in self.entries:
            if s >= e:
                raise ConfigurationError("schedule entries must be ordered")
        for (_, e0, _), (s1, _, _) in zip(self.entries, self.entries[1:]):
            if e0 > s1 + 1e-9:
                raise ConfigurationError("schedule entries must be ordered")

    def mask_at(self, t: float) -> VisibilityMask:
        for start, end, mask in self.entries:
            if start <= t < end:
                return mask
        return self.entries[-1][2]

    @property
    def t_end(self) -> float:
        return self.entries[-1][1]


def urban_canyon_schedule(
    duration_s: float,
    cycle_period_s: float = 1200.0,
    canyon_fraction: float = 0.24,
    wall_elevation_rad: float = math.radians(57.0),
    street_half_width_rad: float = math.radians(24.0),
    base_cutoff_rad: float = DEFAULT_ELEVATION_CUTOFF_RAD,
    headings_rad: tuple = (0.0, math.pi / 2, math.pi, 1.5 * math.pi),
) -> MaskSchedule:
    """Drive-cycle schedule: the first canyon_fraction of every cycle runs
    through a street canyon (heading rotating each cycle), the rest is open.

    The default parameters are the shipped calibrated city profile.
    """
    if not 0.0 <= canyon_fraction <= 1.0:
        raise ConfigurationError("canyon fraction must be within [0, 1]")
    open_mask = VisibilityMask.uniform(base_cutoff_rad)
    entries = []
    n_cycles = max(1, math.ceil(duration_s / cycle_period_s))
    for k in range(n_cycles):
        t0 = k * cycle_period_s
        t_split = t0 + canyon_fraction * cycle_period_s
        t1 = (k + 1) * cycle_period_s
        if canyon_fraction > 0.0:
            canyon = street_canyon(
                headings_rad[k % len(headings_rad)],
                wall_elevation_rad,
                street_half_width_rad,
                base_cutoff_rad,
            )
            entries.append((t0, min(t_split, duration_s), canyon))
        if t_split < duration_s and canyon_fraction < 1.0:
            entries.append((t_split, min(t1, duration_s), open_mask))
        if t1 >= duration_s:
            break
    return MaskSchedule(entries=tuple(entries))


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear earth-fixed receiver path."""

    times_s: np.ndarray
    positions_m: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=float)
        p = np.asarray(self.positions_m, dtype=float).reshape(-1, 3)
        if t.ndim != 1 or t.size == 0 or t.size != p.shape[0]:
            raise ConfigurationError("trajectory needs matching times/positions")
        if np.any(np.diff(t) <= 0.0) and t.size > 1:
            raise ConfigurationError("trajectory times must be increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "positions_m", p)

    @classmethod
    def static(cls, position_m, duration_s: float):
        p = np.asarray(position_m, dtype=float)
        return cls(
            times_s=np.array([0.0, duration_s]),
            positions_m=np.vstack([p, p]),
        )

    @property
    def t_start(self) -> float:
        return float(self.times_s[0])

    @property
    def t_end(self) -> float:
        return float(self.times_s[-1])

    def positions_at(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, 3))
        for k in range(3):
            out[:, k] = np.interp(ts, self.times_s, self.positions_m[:, k])
        return out


def load_trajectory_csv(path) -> Trajectory:
    """Read a trajectory CSV with header t_s,x_m,y_m,z_m."""
    times, poss = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t_s", "x_m", "y_m", "z_m"]:
            raise ConfigurationError("trajectory CSV must have header t_s,x_m,y_m,z_m")
        for lineno, row in enumerate(reader, start=2):
            if not row or row[0].startswith("#"):
                continue
            try:
                times.append(float(row[0]))
                poss.append([float(row[1]), float(row[2]), float(row[3])])
            except (ValueError, IndexError) as exc:
                raise ConfigurationError(f"line {lineno}: {exc}") from exc
    if not times:
        raise EmptyInputError("trajectory CSV contains no samples")
    return Trajectory(times_s=np.array(times), positions_m=np.array(poss))


@dataclass(frozen=True)
class AvailabilityRecord:
    """One epoch of the availability sweep."""

    t: float
    nsat: int
    visible_ids: tuple
    gdop: float | None
    cls: AvailabilityClass


@dataclass
class AvailabilityReport:
    """Aggregated availability percentages plus the GDOP validity split."""

    constellation: str
    epoch_count: int
    class_percent: dict
    gdop_breakdown: dict
    gdop_threshold: float
    records: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "constellation": self.constellation,
            "epoch_count": self.epoch_count,
            "class_percent": {k.value: v for k, v in self.class_percent.items()},
            "gdop_breakdown": dict(self.gdop_breakdown),
            "gdop_threshold": self.gdop_threshold,
        }


def classify_epoch(nsat: int) -> AvailabilityClass:
    """Bin a satellite count the way the availability tables do."""
    if nsat < 0:
        raise ConfigurationError("satellite count cannot be negative")
    if nsat >= 4:
        return AvailabilityClass.GE4
    if nsat >= 1:
        return AvailabilityClass.ONE_TO_THREE
    return AvailabilityClass.ZERO


def visible_satellites(states, rx_pos, mask: VisibilityMask) -> list:
    """Satellites whose elevation exceeds the mask minimum at their azimuth.

    states: iterable of (sat_id, EcefState).
    """
    out = []
    for sat_id, state in states:
        el, az = elevation_azimuth(state.position_m, rx_pos)
        if el > mask.min_elevation_at(az):
            out.append(sat_id)
    return out


def _epoch_grid(t_start: float, t_end: float, step: float) -> np.ndarray:
    n = int(math.floor((t_end - t_start) / step + 1e-9)) + 1
    return t_start + step * np.arange(n)


def availability_summary(
    elements: list[OrbitElements],
    trajectory: Trajectory,
    mask,
    epoch_step_s: float = 0.1,
    gdop_threshold: float = DEFAULT_GDOP_THRESHOLD,
    constellation_tag: str = "",
    keep_records: bool = True,
) -> AvailabilityReport:
    """Sweep the constellation over the trajectory and aggregate availability.

    mask may be a VisibilityMask or a MaskSchedule. GDOP is evaluated from the
    visible geometry at each epoch with at least four satellites.
    """
    if not elements:
        raise EmptyInputError("no satellites supplied")
    if epoch_step_s <= 0.0:
        raise ConfigurationError("epoch step must be positive")

    times = _epoch_grid(trajectory.t_start, trajectory.t_end, epoch_step_s)
    rx = trajectory.positions_at(times)
    elems = elements_array(elements)
    el, az = _kernels.sweep_elevations(elems, times, rx)

    vis = np.empty(el.shape, dtype=bool)
    if isinstance(mask, VisibilityMask):
        starts, ends, mins = mask.sector_arrays()
        vis[:] = _kernels.sector_visible(el, az, starts, ends, mins)
    elif isinstance(mask, MaskSchedule):
        done = np.zeros(times.size, dtype=bool)
        for start, end, m in mask.entries:
            sel = (~done) & (times >= start) & (times < end)
            if not np.any(sel):
                continue
            starts, ends, mins = m.sector_arrays()
            vis[sel] = _kernels.sector_visible(el[sel], az[sel], starts, ends, mins)
            done |= sel
        if not np.all(done):
            # epochs past the schedule end fall under its last mask
            m = mask.entries[-1][2]
            starts, ends, mins = m.sector_arrays()
            sel = ~done
            vis[sel] = _kernels.sector_visible(el[sel], az[sel], starts, ends, mins)
    else:
        raise ConfigurationError("mask must be a VisibilityMask or MaskSchedule")

    nsat, dops = _kernels.dop_accumulate(el, az, vis)
    gdop = dops[:, 0]

    total = times.size
    ge4 = int(np.count_nonzero(nsat >= 4))
    zero = int(np.count_nonzero(nsat == 0))
    onethree = total - ge4 - zero

    valid = (nsat >= 4) & np.isfinite(gdop) & (gdop <= gdop_threshold)
    n_valid = int(np.count_nonzero(valid))
    n_lt4 = total - ge4
    n_gt = total - n_lt4 - n_valid

    records = []
    if keep_records:
        ids = np.array([e.sat_id for e in elements])
        for i, t in enumerate(times):
            g = float(gdop[i]) if nsat[i] >= 4 and np.isfinite(gdop[i]) else None
            records.append(
                AvailabilityRecord(
                    t=float(t),
                    nsat=int(nsat[i]),
                    visible_ids=tuple(ids[vis[i]]),
                    gdop=g,
                    cls=classify_epoch(int(nsat[i])),
                )
            )

    pct = 100.0 / total
    return AvailabilityReport(
        constellation=constellation_tag,
        epoch_count=total,
        class_percent={
            AvailabilityClass.GE4: ge4 * pct,
            AvailabilityClass.ONE_TO_THREE: onethree * pct,
            AvailabilityClass.ZERO: zero * pct,
        },
        gdop_breakdown={
            "nsat_lt_4": n_lt4 * pct,
            "gdop_le_threshold": n_valid * pct,
            "gdop_gt_threshold": n_gt * pct,
        },
        gdop_threshold=gdop_threshold,
        records=records,
    )
