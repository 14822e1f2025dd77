"""Nominal GPS/BDS constellation generation and earth-fixed propagation.

Orbits are circular Keplerian with uniform earth rotation: accurate enough
for visibility and geometry statistics, which is all the rest of the package
needs from them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import (
    BDS_GEO_LONGITUDES_RAD,
    BDS_IGSO_CROSSING_LON_RAD,
    BDS_IGSO_INCLINATION_RAD,
    BDS_MEO_INCLINATION_RAD,
    BDS_MEO_PLANES,
    BDS_MEO_SEMI_MAJOR_AXIS_M,
    BDS_MEO_SLOTS_PER_PLANE,
    EARTH_RADIUS_M,
    EARTH_ROTATION_RATE,
    GEOSYNC_RADIUS_M,
    GM_EARTH,
    GPS_INCLINATION_RAD,
    GPS_PLANES,
    GPS_SEMI_MAJOR_AXIS_M,
    GPS_SLOTS_PER_PLANE,
)
from .errors import ConfigurationError, DegenerateGeometryError

TWO_PI = 2.0 * math.pi


class Constellation(str, Enum):
    """Per-satellite constellation tag."""

    GPS = "GPS"
    BDS_MEO = "BDS_MEO"
    BDS_IGSO = "BDS_IGSO"
    BDS_GEO = "BDS_GEO"


class ConstellationSet(str, Enum):
    """Selectable satellite sets for availability runs."""

    GPS = "GPS"
    BDS = "BDS"
    GPS_PLUS_BDS = "GPS_PLUS_BDS"


def norm_angle(x: float) -> float:
    """Normalize an angle to [0, 2pi)."""
    return x % TWO_PI


def mean_motion_for(semi_major_axis_m: float) -> float:
    """Keplerian mean motion for a circular orbit of the given radius."""
    return math.sqrt(GM_EARTH / semi_major_axis_m**3)


@dataclass(frozen=True)
class OrbitElements:
    """Circular orbit description for one satellite."""

    semi_major_axis_m: float
    eccentricity: float
    inclination_rad: float
    raan_rad: float
    arg_lat_at_epoch_rad: float
    mean_motion_rad_per_s: float
    sat_id: str
    constellation: Constellation

    def __post_init__(self):
        if self.semi_major_axis_m <= EARTH_RADIUS_M:
            raise ConfigurationError(
                f"{self.sat_id}: semi-major axis below earth surface"
            )
        if self.eccentricity != 0.0:
            raise ConfigurationError(
                f"{self.sat_id}: only circular orbits are modeled"
            )
        if not 0.0 <= self.inclination_rad <= math.pi:
            raise ConfigurationError(f"{self.sat_id}: inclination out of range")
        n_kepler = mean_motion_for(self.semi_major_axis_m)
        if abs(self.mean_motion_rad_per_s - n_kepler) > 1e-9 * n_kepler:
            raise ConfigurationError(
                f"{self.sat_id}: mean motion inconsistent with semi-major axis"
            )
        object.__setattr__(self, "raan_rad", norm_angle(self.raan_rad))
        object.__setattr__(
            self, "arg_lat_at_epoch_rad", norm_angle(self.arg_lat_at_epoch_rad)
        )

    @property
    def orbital_period_s(self) -> float:
        return TWO_PI / self.mean_motion_rad_per_s


@dataclass(frozen=True)
class EcefState:
    """Earth-fixed position/velocity snapshot."""

    position_m: np.ndarray
    velocity_m_per_s: np.ndarray
    t: float


@dataclass(frozen=True)
class SatelliteClock:
    """Residual satellite clock offset after broadcast corrections."""

    offset_s: float = 0.0


def _circular_element(a, inc, raan, arg_lat, sat_id, tag, epoch):
    n = mean_motion_for(a)
    return OrbitElements(
        semi_major_axis_m=a,
        eccentricity=0.0,
        inclination_rad=inc,
        raan_rad=raan,
        arg_lat_at_epoch_rad=arg_lat - n * epoch,
        mean_motion_rad_per_s=n,
        sat_id=sat_id,
        constellation=tag,
    )


def _build_gps(epoch: float) -> list[OrbitElements]:
    elems = []
    for plane in range(GPS_PLANES):
        raan = TWO_PI * plane / GPS_PLANES
        for slot in range(GPS_SLOTS_PER_PLANE):
            arg_lat = TWO_PI * (
                slot / GPS_SLOTS_PER_PLANE
                + plane / (GPS_PLANES * GPS_SLOTS_PER_PLANE)
            )
            sid = f"G{plane * GPS_SLOTS_PER_PLANE + slot + 1:02d}"
            elems.append(
                _circular_element(
                    GPS_SEMI_MAJOR_AXIS_M,
                    GPS_INCLINATION_RAD,
                    raan,
                    arg_lat,
                    sid,
                    Constellation.GPS,
                    epoch,
                )
            )
    return elems


def _build_bds(epoch: float) -> list[OrbitElements]:
    elems = []
    total_meo = BDS_MEO_PLANES * BDS_MEO_SLOTS_PER_PLANE
    for plane in range(BDS_MEO_PLANES):
        raan = TWO_PI * plane / BDS_MEO_PLANES
        for slot in range(BDS_MEO_SLOTS_PER_PLANE):
            arg_lat = TWO_PI * (slot / BDS_MEO_SLOTS_PER_PLANE + plane / total_meo)
            sid = f"C{plane * BDS_MEO_SLOTS_PER_PLANE + slot + 1:02d}"
            elems.append(
                _circular_element(
                    BDS_MEO_SEMI_MAJOR_AXIS_M,
                    BDS_MEO_INCLINATION_RAD,
                    raan,
                    arg_lat,
                    sid,
                    Constellation.BDS_MEO,
                    epoch,
                )
            )
    # IGSO: geosynchronous inclined orbits whose figure-eight ground tracks
    # share one crossing longitude, phased a third of a day apart.
    for k in range(3):
        phase = TWO_PI * k / 3.0
        raan = norm_angle(BDS_IGSO_CROSSING_LON_RAD + phase)
        elems.append(
            _circular_element(
                GEOSYNC_RADIUS_M,
                BDS_IGSO_INCLINATION_RAD,
                raan,
                -phase,
                f"C{total_meo + k + 1:02d}",
                Constellation.BDS_IGSO,
                epoch,
            )
        )
    # GEO: equatorial, pinned at fixed longitudes (raan + arg_lat - theta(t)
    # is constant because the mean motion equals the earth rotation rate).
    for k, lon in enumerate(BDS_GEO_LONGITUDES_RAD):
        elems.append(
            _circular_element(
                GEOSYNC_RADIUS_M,
                0.0,
                0.0,
                lon,
                f"C{total_meo + 3 + k + 1:02d}",
                Constellation.BDS_GEO,
                epoch,
            )
        )
    return elems


def build_nominal_constellation(
    kind: ConstellationSet | str, epoch: float = 0.0
) -> list[OrbitElements]:
    """Nominal 24-slot GPS and/or 24 MEO + 3 IGSO + 3 GEO BDS elements.

    The elements are referenced so the constellations hold their nominal
    layout at t = epoch.
    """
    kind = ConstellationSet(kind)
    if kind is ConstellationSet.GPS:
        return _build_gps(epoch)
    if kind is ConstellationSet.BDS:
        return _build_bds(epoch)
    return _build_gps(epoch) + _build_bds(epoch)


def elements_array(elems: list[OrbitElements]) -> np.ndarray:
    """Pack elements into the (N, 5) array consumed by the kernels."""
    out = np.empty((len(elems), 5))
    for i, e in enumerate(elems):
        out[i, 0] = e.semi_major_axis_m
        out[i, 1] = e.inclination_rad
        out[i, 2] = e.raan_rad
        out[i, 3] = e.arg_lat_at_epoch_rad
        out[i, 4] = e.mean_motion_rad_per_s
    return out


def propagate(el: OrbitElements, t: float) -> EcefState:
    """Earth-fixed state at time t for a circular orbit."""
    u = el.arg_lat_at_epoch_rad + el.mean_motion_rad_per_s * t
    a = el.semi_major_axis_m
    cu, su = math.cos(u), math.sin(u)
    ci, si = math.cos(el.inclination_rad), math.sin(el.inclination_rad)
    co, so = math.cos(el.raan_rad), math.sin(el.raan_rad)

    # inertial position and velocity on the circular orbit
    pi_ = np.array(
        [
            a * (cu * co - su * ci * so),
            a * (cu * so + su * ci * co),
            a * su * si,
        ]
    )
    n = el.mean_motion_rad_per_s
    vi = np.array(
        [
            a * n * (-su * co - cu * ci * so),
            a * n * (-su * so + cu * ci * co),
            a * n * cu * si,
        ]
    )

    theta = EARTH_ROTATION_RATE * t
    ct, st = math.cos(theta), math.sin(theta)
    rot = np.array([[ct, st, 0.0], [-st, ct, 0.0], [0.0, 0.0, 1.0]])
    pe = rot @ pi_
    # earth-fixed velocity includes the frame-rotation transport term
    ve = rot @ vi - np.cross(
        np.array([0.0, 0.0, EARTH_ROTATION_RATE]), pe
    )
    return EcefState(position_m=pe, velocity_m_per_s=ve, t=t)


def elevation_azimuth(sat_pos: np.ndarray, rx_pos: np.ndarray):
    """Elevation/azimuth of a satellite in the receiver's east-north-up frame.

    Returns (elevation_rad in [-pi/2, pi/2], azimuth_rad in [0, 2pi)).
    """
    sat_pos = np.asarray(sat_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    los = sat_pos - rx_pos
    rng = np.linalg.norm(los)
    if rng == 0.0:
        raise DegenerateGeometryError("satellite coincides with receiver")
    rxn = np.linalg.norm(rx_pos)
    if rxn == 0.0:
        raise DegenerateGeometryError("receiver at earth center")
    up = rx_pos / rxn
    east = np.array([-up[1], up[0], 0.0])
    en = np.linalg.norm(east)
    if en < 1e-12:
        raise DegenerateGeometryError("east-north-up frame undefined at pole")
    east /= en
    north = np.cross(up, east)
    el = math.asin(max(-1.0, min(1.0, float(los @ up) / rng)))
    az = math.atan2(float(los @ east), float(los @ north)) % TWO_PI
    return el, az


def lla_to_ecef(lat_deg: float, lon_deg: float, height_m: float = 0.0) -> np.ndarray:
    """Spherical-earth geographic to earth-fixed coordinates."""
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    r = EARTH_RADIUS_M + height_m
    return np.array(
        [
            r * math.cos(lat) * math.cos(lon),
            r * math.cos(lat) * math.sin(lon),
            r * math.sin(lat),
        ]
    )


_FILE_FIELDS = [
    "sat_id",
    "constellation",
    "semi_major_axis_m",
    "eccentricity",
    "inclination_rad",
    "raan_rad",
    "arg_lat_at_epoch_rad",
    "mean_motion_rad_per_s",
]


def load_constellation_file(path) -> list[OrbitElements]:
    """Read satellite elements from CSV (one record per satellite).

    Expected header: sat_id,constellation,semi_major_axis_m,eccentricity,
    inclination_rad,raan_rad,arg_lat_at_epoch_rad,mean_motion_rad_per_s.
    """
    elems = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _FILE_FIELDS:
            raise ConfigurationError(
                f"constellation file must have header {','.join(_FILE_FIELDS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                elems.append(
                    OrbitElements(
                        semi_major_axis_m=float(row["semi_major_axis_m"]),
                        eccentricity=float(row["eccentricity"]),
                        inclination_rad=float(row["inclination_rad"]),
                        raan_rad=float(row["raan_rad"]),
                        arg_lat_at_epoch_rad=float(row["arg_lat_at_epoch_rad"]),
                        mean_motion_rad_per_s=float(row["mean_motion_rad_per_s"]),
                        sat_id=row["sat_id"],
                        constellation=Constellation(row["constellation"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"line {lineno}: {exc}") from exc
    return elems
