"""Pure-Python (numpy) fallback for the occupancy kernel.

Mirrors ``_annulus.pyx`` operation for operation so both backends produce
bit-identical grids; the compiled kernel is only a speedup.
"""

import numpy as np

NAME = "python"


def annulus_occupancy(cx, cy, r_in, r_out, x0, y0, cell, nx, ny):
    """Occupancy grid: cell (j, i) is 1 iff its center lies in every annulus.

    Cell centers are at (x0 + (i + 0.5) * cell, y0 + (j + 0.5) * cell).
    Returns a uint8 array of shape (ny, nx).
    """
    cx = np.ascontiguousarray(cx, dtype=np.float64)
    cy = np.ascontiguousarray(cy, dtype=np.float64)
    r_in = np.ascontiguousarray(r_in, dtype=np.float64)
    r_out = np.ascontiguousarray(r_out, dtype=np.float64)
    ri2 = r_in * r_in
    ro2 = r_out * r_out
    out = np.zeros((ny, nx), dtype=np.uint8)
    xs = x0 + (np.arange(nx) + 0.5) * cell
    for j in range(ny):
        y = y0 + (j + 0.5) * cell
        dy = y - cy
        dy2 = dy * dy
        if np.any(dy2 > ro2):
            continue
        w = np.sqrt(ro2 - dy2)
        lo = max(0.0, np.max(np.floor((cx - w - x0) / cell - 0.5) - 1.0))
        hi = min(nx - 1.0, np.min(np.ceil((cx + w - x0) / cell - 0.5) + 1.0))
        if lo > hi:
            continue
        i_lo, i_hi = int(lo), int(hi)
        dx = xs[i_lo:i_hi + 1, None] - cx
        d2 = dx * dx + dy2
        ok = np.all((d2 >= ri2) & (d2 <= ro2), axis=1)
        out[j, i_lo:i_hi + 1] = ok
    return out
