"""Numba implementation of the hot kernels.

Loop-structured twins of numpy_impl with @njit(cache=True). No fastmath:
reproducibility matters more here than the last few percent of speed.
"""

import numpy as np
from numba import njit

BACKEND_NAME = "numba"

_EARTH_ROTATION_RATE = 7.2921151467e-5


@njit(cache=True)
def sweep_elevations(elems, times, rx_pos):
    """See numpy_impl.sweep_elevations."""
    T = times.shape[0]
    N = elems.shape[0]
    el = np.empty((T, N))
    az = np.empty((T, N))
    two_pi = 2.0 * np.pi

    for ti in range(T):
        t = times[ti]
        rx = rx_pos[ti]
        rxn = np.sqrt(rx[0] ** 2 + rx[1] ** 2 + rx[2] ** 2)
        ux, uy, uz = rx[0] / rxn, rx[1] / rxn, rx[2] / rxn
        en = np.sqrt(ux * ux + uy * uy)
        ex, ey = -uy / en, ux / en
        nx = -uz * ey
        ny = uz * ex
        nz = ux * ey - uy * ex

        theta = _EARTH_ROTATION_RATE * t
        ct, st = np.cos(theta), np.sin(theta)

        for si in range(N):
            a = elems[si, 0]
            inc = elems[si, 1]
            raan = elems[si, 2]
            u = elems[si, 3] + elems[si, 4] * t
            cu, su = np.cos(u), np.sin(u)
            ci, sdi = np.cos(inc), np.sin(inc)
            co, so = np.cos(raan), np.sin(raan)

            xo = a * cu
            yo = a * su
            xi = xo * co - yo * ci * so
            yi = xo * so + yo * ci * co
            zi = yo * sdi

            x = xi * ct + yi * st
            y = -xi * st + yi * ct
            z = zi

            dx, dy, dz = x - rx[0], y - rx[1], z - rx[2]
            rng = np.sqrt(dx * dx + dy * dy + dz * dz)
            de = dx * ex + dy * ey
            dn = dx * nx + dy * ny + dz * nz
            du = dx * ux + dy * uy + dz * uz

            s = du / rng
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            el[ti, si] = np.arcsin(s)
            azv = np.arctan2(de, dn) % two_pi
            az[ti, si] = azv
    return el, az


@njit(cache=True)
def sector_visible(el, az, sec_start, sec_end, sec_min):
    """See numpy_impl.sector_visible."""
    T, N = el.shape
    S = sec_start.shape[0]
    out = np.empty((T, N), dtype=np.bool_)
    for ti in range(T):
        for si in range(N):
            a = az[ti, si]
            idx = 0
            for k in range(S - 1, -1, -1):
                if sec_start[k] <= a:
                    idx = k
                    break
            out[ti, si] = el[ti, si] > sec_min[idx]
    return out


@njit(cache=True)
def _invert4(M, Q):
    """Gauss-Jordan inverse of a 4x4; returns False when singular."""
    A = np.empty((4, 8))
    for i in range(4):
        for j in range(4):
            A[i, j] = M[i, j]
            A[i, j + 4] = 1.0 if i == j else 0.0
    for col in range(4):
        piv = col
        best = abs(A[col, col])
        for r in range(col + 1, 4):
            v = abs(A[r, col])
            if v > best:
                best = v
                piv = r
        if best < 1e-12:
            return False
        if piv != col:
            for j in range(8):
                tmp = A[col, j]
                A[col, j] = A[piv, j]
                A[piv, j] = tmp
        pv = A[col, col]
        for j in range(8):
            A[col, j] /= pv
        for r in range(4):
            if r == col:
                continue
            f = A[r, col]
            if f != 0.0:
                for j in range(8):
                    A[r, j] -= f * A[col, j]
    for i in range(4):
        for j in range(4):
            Q[i, j] = A[i, j + 4]
    return True


@njit(cache=True)
def dop_accumulate(el, az, vis):
    """See numpy_impl.dop_accumulate."""
    T, N = el.shape
    nsat = np.zeros(T, dtype=np.int64)
    dops = np.full((T, 5), np.nan)
    M = np.empty((4, 4))
    Q = np.empty((4, 4))
    row = np.empty(4)

    for ti in range(T):
        cnt = 0
        for i in range(4):
            for j in range(4):
                M[i, j] = 0.0
        for si in range(N):
            if not vis[ti, si]:
                continue
            cnt += 1
            e = el[ti, si]
            a = az[ti, si]
            ce = np.cos(e)
            row[0] = -ce * np.sin(a)
            row[1] = -ce * np.cos(a)
            row[2] = -np.sin(e)
            row[3] = 1.0
            for i in range(4):
                for j in range(4):
                    M[i, j] += row[i] * row[j]
        nsat[ti] = cnt
        if cnt < 4:
            continue
        # same singularity screen as the numpy path: |det| must clear 1e-10
        det = (
            M[0, 0] * _minor3(M, 0)
            - M[0, 1] * _minor3(M, 1)
            + M[0, 2] * _minor3(M, 2)
            - M[0, 3] * _minor3(M, 3)
        )
        if abs(det) <= 1e-10:
            continue
        if not _invert4(M, Q):
            continue
        d0, d1, d2, d3 = Q[0, 0], Q[1, 1], Q[2, 2], Q[3, 3]
        dops[ti, 0] = np.sqrt(d0 + d1 + d2 + d3)
        dops[ti, 1] = np.sqrt(d0 + d1 + d2)
        dops[ti, 2] = np.sqrt(d3)
        dops[ti, 3] = np.sqrt(d0 + d1)
        dops[ti, 4] = np.sqrt(d2)
    return nsat, dops


@njit(cache=True)
def _minor3(M, skip_col):
    """3x3 minor of M with row 0 and one column removed."""
    cols = np.empty(3, dtype=np.int64)
    k = 0
    for c in range(4):
        if c != skip_col:
            cols[k] = c
            k += 1
    a, b, c = cols[0], cols[1], cols[2]
    return (
        M[1, a] * (M[2, b] * M[3, c] - M[2, c] * M[3, b])
        - M[1, b] * (M[2, a] * M[3, c] - M[2, c] * M[3, a])
        + M[1, c] * (M[2, a] * M[3, b] - M[2, b] * M[3, a])
    )


@njit(cache=True)
def ar1_series(x0, phi, innovations):
    """See numpy_impl.ar1_series."""
    n = innovations.shape[0]
    out = np.empty(n)
    prev = x0
    for k in range(n):
        prev = phi * prev + innovations[k]
        out[k] = prev
    return out
