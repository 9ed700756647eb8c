# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled occupancy kernel for annulus-intersection rasterization.

Must stay bit-identical to the numpy fallback in ``_py.py``: same cell-center
formula, same squared-distance expression, inclusive bounds on both radii.
Row cropping below is conservative (padded by one cell), so it can never
change which cells pass the exact per-cell test.
"""

from libc.math cimport sqrt, floor, ceil

import numpy as np

NAME = "native"


def annulus_occupancy(double[::1] cx, double[::1] cy,
                      double[::1] r_in, double[::1] r_out,
                      double x0, double y0, double cell,
                      Py_ssize_t nx, Py_ssize_t ny):
    """Occupancy grid: cell (j, i) is 1 iff its center lies in every annulus.

    Cell centers are at (x0 + (i + 0.5) * cell, y0 + (j + 0.5) * cell).
    Returns a uint8 array of shape (ny, nx).
    """
    cdef Py_ssize_t n = cx.shape[0]
    out = np.zeros((ny, nx), dtype=np.uint8)
    cdef unsigned char[:, ::1] occ = out
    ri2_arr = np.empty(n, dtype=np.float64)
    ro2_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] ri2 = ri2_arr
    cdef double[::1] ro2 = ro2_arr
    cdef Py_ssize_t i, j, k, i_lo, i_hi
    cdef double x, y, dx, dy, d2, w, lo_d, hi_d
    cdef bint row_dead, ok

    for k in range(n):
        ri2[k] = r_in[k] * r_in[k]
        ro2[k] = r_out[k] * r_out[k]

    for j in range(ny):
        y = y0 + (j + 0.5) * cell
        lo_d = 0.0
        hi_d = nx - 1.0
        row_dead = False
        for k in range(n):
            dy = y - cy[k]
            if dy * dy > ro2[k]:
                row_dead = True
                break
            w = sqrt(ro2[k] - dy * dy)
            lo_d = max(lo_d, floor((cx[k] - w - x0) / cell - 0.5) - 1.0)
            hi_d = min(hi_d, ceil((cx[k] + w - x0) / cell - 0.5) + 1.0)
        if row_dead or lo_d > hi_d:
            continue
        i_lo = <Py_ssize_t>lo_d if lo_d > 0.0 else 0
        i_hi = <Py_ssize_t>hi_d if hi_d < nx - 1.0 else nx - 1
        for i in range(i_lo, i_hi + 1):
            x = x0 + (i + 0.5) * cell
            ok = True
            for k in range(n):
                dx = x - cx[k]
                dy = y - cy[k]
                d2 = dx * dx + dy * dy
                if d2 < ri2[k] or d2 > ro2[k]:
                    ok = False
                    break
            if ok:
                occ[j, i] = 1
    return out
