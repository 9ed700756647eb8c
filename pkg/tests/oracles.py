"""Independent oracles used by the tests.

Everything here deliberately avoids the code paths it is used to check:
distances come from a high-precision spherical law of cosines instead of the
package haversine, and the least-squares oracle is a brute-force lattice
argmin instead of Gauss-Newton.
"""

import math

import mpmath
import numpy as np

EARTH_RADIUS_M = 6_371_008.8

# Reference experiment coordinates (victim + three vantage points).
KYOTO_VICTIM = (35.02350485, 135.77687703)
KYOTO_A1 = (35.03051251, 135.77327415)
KYOTO_A2 = (35.01598257, 135.78242585)
KYOTO_A3 = (35.02258561, 135.76493382)

# Frozen outputs of law_of_cosines_distance for (Ai, victim); regenerate with
# the function below if the coordinates ever change.
KYOTO_DISTANCES_M = (845.4611577285938, 977.2189373867408, 1092.3417607209112)


def law_of_cosines_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance via the spherical law of cosines at 40 digits."""
    with mpmath.workdps(40):
        p1, l1 = mpmath.radians(a[0]), mpmath.radians(a[1])
        p2, l2 = mpmath.radians(b[0]), mpmath.radians(b[1])
        c = mpmath.sin(p1) * mpmath.sin(p2) + mpmath.cos(p1) * mpmath.cos(p2) * mpmath.cos(l2 - l1)
        return float(mpmath.mpf(EARTH_RADIUS_M) * mpmath.acos(c))


def ls_objective_grid(xy: np.ndarray, vantages: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Sum of squared distance residuals at each query point (m, 2) array."""
    d = np.sqrt((xy[:, 0:1] - vantages[:, 0]) ** 2 + (xy[:, 1:2] - vantages[:, 1]) ** 2)
    return ((d - targets) ** 2).sum(axis=1)


def grid_argmin(vantages, targets, cell: float = 1.0,
                pad: float = 200.0) -> tuple[float, float]:
    """Brute-force lattice argmin of the distance least-squares objective.

    Two provable stages on one shared lattice: a coarse pass (every 16th
    lattice point) over the padded vantage bounding box yields an objective
    value F0; every point with objective <= F0 must lie within sqrt(F0) of
    each target circle, so the fine pass only needs the bounding box of
    those widened annuli.
    """
    vantages = np.asarray(vantages, dtype=float)
    targets = np.asarray(targets, dtype=float)
    x0 = math.floor(vantages[:, 0].min() - targets.max() - pad)
    y0 = math.floor(vantages[:, 1].min() - targets.max() - pad)
    x1 = math.ceil(vantages[:, 0].max() + targets.max() + pad)
    y1 = math.ceil(vantages[:, 1].max() + targets.max() + pad)

    def lattice(lo, hi, step):
        return np.arange(lo, hi + step / 2, step)

    coarse_step = 16 * cell
    cx, cy = np.meshgrid(lattice(x0, x1, coarse_step), lattice(y0, y1, coarse_step))
    pts = np.column_stack([cx.ravel(), cy.ravel()])
    f0 = ls_objective_grid(pts, vantages, targets).min()

    bound = math.sqrt(f0) + 2 * coarse_step
    fx0 = max(x0, math.floor((vantages[:, 0] - targets - bound).max()))
    fy0 = max(y0, math.floor((vantages[:, 1] - targets - bound).max()))
    fx1 = min(x1, math.ceil((vantages[:, 0] + targets + bound).min()))
    fy1 = min(y1, math.ceil((vantages[:, 1] + targets + bound).min()))
    # snap the fine window onto the shared lattice so the coarse points are a subset
    fx0 = x0 + math.floor((fx0 - x0) / cell) * cell
    fy0 = y0 + math.floor((fy0 - y0) / cell) * cell

    best = None
    best_f = math.inf
    for ys in np.array_split(lattice(fy0, fy1, cell), 32):
        if ys.size == 0:
            continue
        gx, gy = np.meshgrid(lattice(fx0, fx1, cell), ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        f = ls_objective_grid(pts, vantages, targets)
        i = int(f.argmin())
        if f[i] < best_f:
            best_f = float(f[i])
            best = (float(pts[i, 0]), float(pts[i, 1]))
    return best


def occupancy_reference(cx, cy, r_in, r_out, x0, y0, cell, nx, ny) -> np.ndarray:
    """Full-grid annulus occupancy with no cropping, for kernel equality checks."""
    cx = np.asarray(cx, dtype=float)
    cy = np.asarray(cy, dtype=float)
    r_in = np.asarray(r_in, dtype=float)
    r_out = np.asarray(r_out, dtype=float)
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    dx = xs[None, :, None] - cx
    dy = ys[:, None, None] - cy
    d2 = dx * dx + dy * dy
    ok = (d2 >= r_in * r_in) & (d2 <= r_out * r_out)
    return np.all(ok, axis=2).astype(np.uint8)
