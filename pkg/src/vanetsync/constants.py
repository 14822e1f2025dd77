"""Physical constants shared across the simulation."""

import math

# WGS-84 style earth parameters
GM_EARTH = 3.986004418e14          # m^3/s^2
EARTH_ROTATION_RATE = 7.2921151467e-5  # rad/s
EARTH_RADIUS_M = 6378137.0         # m

SPEED_OF_LIGHT = 299792458.0       # m/s

# Radius at which the Keplerian mean motion equals the earth rotation rate.
GEOSYNC_RADIUS_M = (GM_EARTH / EARTH_ROTATION_RATE**2) ** (1.0 / 3.0)

# Nominal constellation geometry
GPS_SEMI_MAJOR_AXIS_M = 26_560_000.0
GPS_INCLINATION_RAD = math.radians(55.0)
GPS_PLANES = 6
GPS_SLOTS_PER_PLANE = 4

BDS_MEO_SEMI_MAJOR_AXIS_M = 27_906_000.0
BDS_MEO_INCLINATION_RAD = math.radians(55.0)
BDS_MEO_PLANES = 3
BDS_MEO_SLOTS_PER_PLANE = 8

BDS_IGSO_INCLINATION_RAD = math.radians(55.0)
BDS_IGSO_CROSSING_LON_RAD = math.radians(118.0)
BDS_GEO_LONGITUDES_RAD = tuple(
    math.radians(lon) for lon in (80.0, 110.5, 140.0)
)

# GPS time currently leads UTC by the accumulated leap seconds.
DEFAULT_GPS_UTC_OFFSET_S = 18.0

# PVT validity rule: a fix needs at least 4 satellites and GDOP below this.
DEFAULT_GDOP_THRESHOLD = 6.0

# Default elevation cutoff for open-sky visibility.
DEFAULT_ELEVATION_CUTOFF_RAD = math.radians(10.0)
