"""Vectorized numpy implementation of the hot kernels.

Fallback path used when numba is unavailable or VANETSYNC_BACKEND=numpy.
Signatures mirror numba_impl exactly.
"""

import numpy as np

BACKEND_NAME = "numpy"

_EARTH_ROTATION_RATE = 7.2921151467e-5


def sweep_elevations(elems, times, rx_pos):
    """Elevation/azimuth of every satellite at every epoch.

    elems: (N, 5) float64 rows [a, inc, raan, arg_lat_at_epoch, mean_motion].
    times: (T,) epoch times in seconds.
    rx_pos: (T, 3) receiver positions in the earth-fixed frame.
    Returns (el, az) each (T, N); azimuth in [0, 2pi).
    """
    a = elems[:, 0]
    inc = elems[:, 1]
    raan = elems[:, 2]
    u0 = elems[:, 3]
    n = elems[:, 4]

    t = times[:, None]
    u = u0[None, :] + n[None, :] * t
    cu, su = np.cos(u), np.sin(u)
    ci, si = np.cos(inc), np.sin(inc)
    co, so = np.cos(raan), np.sin(raan)

    xo = a[None, :] * cu
    yo = a[None, :] * su
    xi = xo * co[None, :] - yo * (ci * so)[None, :]
    yi = xo * so[None, :] + yo * (ci * co)[None, :]
    zi = yo * si[None, :]

    theta = _EARTH_ROTATION_RATE * t
    ct, st = np.cos(theta), np.sin(theta)
    x = xi * ct + yi * st
    y = -xi * st + yi * ct
    z = zi

    rx_norm = np.linalg.norm(rx_pos, axis=1)
    up = rx_pos / rx_norm[:, None]
    east = np.empty_like(up)
    east[:, 0] = -up[:, 1]
    east[:, 1] = up[:, 0]
    east[:, 2] = 0.0
    east /= np.linalg.norm(east, axis=1)[:, None]
    north = np.cross(up, east)

    dx = x - rx_pos[:, 0][:, None]
    dy = y - rx_pos[:, 1][:, None]
    dz = z - rx_pos[:, 2][:, None]
    rng = np.sqrt(dx * dx + dy * dy + dz * dz)

    de = dx * east[:, 0][:, None] + dy * east[:, 1][:, None] + dz * east[:, 2][:, None]
    dn = dx * north[:, 0][:, None] + dy * north[:, 1][:, None] + dz * north[:, 2][:, None]
    du = dx * up[:, 0][:, None] + dy * up[:, 1][:, None] + dz * up[:, 2][:, None]

    el = np.arcsin(np.clip(du / rng, -1.0, 1.0))
    az = np.arctan2(de, dn) % (2.0 * np.pi)
    return el, az


def sector_visible(el, az, sec_start, sec_end, sec_min):
    """Apply an azimuth-sectored elevation mask.

    el, az: (T, N). Sectors sorted by start, covering [0, 2pi) contiguously.
    Returns bool (T, N), True where elevation strictly exceeds the sector
    minimum at that azimuth.
    """
    idx = np.searchsorted(sec_start, az, side="right") - 1
    idx = np.clip(idx, 0, len(sec_start) - 1)
    return el > sec_min[idx]


def dop_accumulate(el, az, vis):
    """Per-epoch DOP values from visible-satellite geometry.

    el, az, vis: (T, N); vis is the visibility mask.
    Returns (nsat (T,) int64, dops (T, 5) float64) with columns
    [gdop, pdop, tdop, hdop, vdop]; NaN rows where nsat < 4 or the
    normal matrix is singular.
    """
    T = el.shape[0]
    nsat = vis.sum(axis=1).astype(np.int64)
    dops = np.full((T, 5), np.nan)

    ce, se = np.cos(el), np.sin(el)
    rows = np.stack(
        [-ce * np.sin(az), -ce * np.cos(az), -se, np.ones_like(el)], axis=2
    )
    rows = np.where(vis[:, :, None], rows, 0.0)
    M = np.einsum("tni,tnj->tij", rows, rows)

    enough = nsat >= 4
    if not np.any(enough):
        return nsat, dops
    sub = M[enough]
    det = np.abs(np.linalg.det(sub))
    ok_local = det > 1e-10
    idx_global = np.flatnonzero(enough)[ok_local]
    if idx_global.size == 0:
        return nsat, dops
    Q = np.linalg.inv(M[idx_global])
    d = np.diagonal(Q, axis1=1, axis2=2)
    dops[idx_global, 0] = np.sqrt(d.sum(axis=1))
    dops[idx_global, 1] = np.sqrt(d[:, 0] + d[:, 1] + d[:, 2])
    dops[idx_global, 2] = np.sqrt(d[:, 3])
    dops[idx_global, 3] = np.sqrt(d[:, 0] + d[:, 1])
    dops[idx_global, 4] = np.sqrt(d[:, 2])
    return nsat, dops


def ar1_series(x0, phi, innovations):
    """First-order autoregressive series x[k] = phi*x[k-1] + innovations[k].

    x[-1] = x0. Innovations are pre-scaled by the caller. 0 <= phi < 1.
    Vectorized in chunks small enough that phi**-chunk stays finite.
    """
    n = innovations.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    if phi == 0.0:
        out[:] = innovations
        return out
    chunk = 1024
    log_phi = -np.log(phi)
    if log_phi > 0.0:
        chunk = max(1, min(chunk, int(690.0 / log_phi)))
    prev = x0
    for s in range(0, n, chunk):
        w = innovations[s : s + chunk]
        m = w.shape[0]
        k = np.arange(m)
        decay = phi ** (k + 1)
        grow = phi ** (-k)
        block = phi**k * np.cumsum(w * grow)
        out[s : s + m] = decay * prev + block
        prev = out[s + m - 1]
    return out
