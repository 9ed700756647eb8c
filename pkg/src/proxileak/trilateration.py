"""Position solvers for distance observations.

Three exact circles reduce to a 2x2 linear system by pairwise subtraction;
noisy or rounded observations go through a damped Gauss-Newton least-squares
fit. Both solvers are deterministic given their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .geo import LocalPoint

COLLINEARITY_AREA_M2 = 1.0
"""Vantage triangles below this area (m^2) are treated as collinear."""

CONSISTENCY_TOL_M = 1e-6
"""Max per-circle residual for the exact solver before the inputs are
declared inconsistent."""


class CollinearVantages(ValueError):
    """The vantage points do not span a usable triangle."""


class InconsistentDistances(ValueError):
    """No point satisfies all circle equations within tolerance."""


@dataclass(frozen=True)
class Exact:
    """A distance known exactly."""

    distance: float

    def __post_init__(self):
        if not math.isfinite(self.distance) or self.distance < 0:
            raise ValueError(f"distance must be finite and >= 0, got {self.distance}")


@dataclass(frozen=True)
class Quantized:
    """A displayed distance rounded to a step; true value within +/- step/2."""

    displayed: float
    step: float

    def __post_init__(self):
        if not math.isfinite(self.displayed) or self.displayed < 0:
            raise ValueError(f"displayed distance must be finite and >= 0, got {self.displayed}")
        if not math.isfinite(self.step) or self.step < 0:
            raise ValueError(f"step must be finite and >= 0, got {self.step}")


@dataclass(frozen=True)
class Interval:
    """A distance known only to lie in [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval bounds must be finite")
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"need 0 <= lo <= hi, got [{self.lo}, {self.hi}]")


Kind = Exact | Quantized | Interval


@dataclass(frozen=True)
class DistanceObservation:
    """One vantage point plus what is known about the distance from it."""

    vantage: LocalPoint
    kind: Kind

    @classmethod
    def exact(cls, vantage: LocalPoint, distance: float) -> "DistanceObservation":
        return cls(vantage, Exact(distance))

    @classmethod
    def quantized(cls, vantage: LocalPoint, displayed: float, step: float) -> "DistanceObservation":
        return cls(vantage, Quantized(displayed, step))

    @classmethod
    def interval(cls, vantage: LocalPoint, lo: float, hi: float) -> "DistanceObservation":
        return cls(vantage, Interval(lo, hi))

    def center(self) -> float:
        """Point target for least squares (interval midpoint)."""
        k = self.kind
        if isinstance(k, Exact):
            return k.distance
        if isinstance(k, Quantized):
            return k.displayed
        return (k.lo + k.hi) / 2.0

    def bounds(self) -> tuple[float, float]:
        """Sound distance interval for region constraints."""
        k = self.kind
        if isinstance(k, Exact):
            return k.distance, k.distance
        if isinstance(k, Quantized):
            return max(0.0, k.displayed - k.step / 2.0), k.displayed + k.step / 2.0
        return k.lo, k.hi


@dataclass(frozen=True)
class SolveResult:
    estimate: LocalPoint
    residual_rms: float
    iterations: int
    converged: bool


def _triangle_area(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> float:
    return abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2.0


def _check_vantage_spread(vantages: Sequence[LocalPoint]) -> None:
    if max(_triangle_area(a, b, c) for a, b, c in combinations(vantages, 3)) < COLLINEARITY_AREA_M2:
        raise CollinearVantages(
            f"all vantage triangles have area < {COLLINEARITY_AREA_M2} m^2"
        )


def solve_exact_three_circles(obs: Sequence[DistanceObservation],
                              consistency_tol: float = CONSISTENCY_TOL_M) -> LocalPoint:
    """Solve three exact circle equations for their common point.

    Subtracting the first circle equation from the other two cancels the
    quadratic terms and leaves a 2x2 linear system. Raises CollinearVantages
    for degenerate geometry and InconsistentDistances when the linear
    solution violates any circle equation by more than ``consistency_tol``.
    """
    if len(obs) != 3 or not all(isinstance(o.kind, Exact) for o in obs):
        raise ValueError("exact solver needs exactly three Exact observations")
    _check_vantage_spread([o.vantage for o in obs])

    (x1, y1), (x2, y2), (x3, y3) = ((o.vantage.x, o.vantage.y) for o in obs)
    d1, d2, d3 = (o.kind.distance for o in obs)
    a = np.array([[2.0 * (x2 - x1), 2.0 * (y2 - y1)],
                  [2.0 * (x3 - x1), 2.0 * (y3 - y1)]])
    b = np.array([d1 ** 2 - d2 ** 2 + x2 ** 2 - x1 ** 2 + y2 ** 2 - y1 ** 2,
                  d1 ** 2 - d3 ** 2 + x3 ** 2 - x1 ** 2 + y3 ** 2 - y1 ** 2])
    x, y = np.linalg.solve(a, b)
    p = LocalPoint(float(x), float(y))

    for o in obs:
        err = abs(p.distance_to(o.vantage) - o.kind.distance)
        if err > consistency_tol:
            raise InconsistentDistances(
                f"circle equation violated by {err:.3e} m (> {consistency_tol:.0e} m)"
            )
    return p


def ls_residuals(p: LocalPoint, obs: Sequence[DistanceObservation]) -> np.ndarray:
    """Per-observation residuals of the least-squares objective at p."""
    return np.array([p.distance_to(o.vantage) - o.center() for o in obs])


def ls_jacobian(p: LocalPoint, obs: Sequence[DistanceObservation]) -> np.ndarray:
    """Analytic Jacobian of :func:`ls_residuals` with respect to (x, y)."""
    rows = []
    for o in obs:
        dx, dy = p.x - o.vantage.x, p.y - o.vantage.y
        d = math.hypot(dx, dy)
        rows.append((dx / d, dy / d) if d > 1e-12 else (0.0, 0.0))
    return np.array(rows)


def _objective(xy: np.ndarray, vx: np.ndarray, vy: np.ndarray, targets: np.ndarray) -> float:
    r = np.hypot(xy[0] - vx, xy[1] - vy) - targets
    return float(r @ r)


def solve_least_squares(obs: Sequence[DistanceObservation],
                        initial: LocalPoint | None = None,
                        tol: float = 1e-6,
                        max_iter: int = 50) -> SolveResult:
    """Gauss-Newton fit of a position to n >= 3 distance observations.

    Minimizes the sum of squared residuals against each observation's point
    target (interval midpoints). Each step is damped by halving while the
    objective increases (at most 20 halvings); iteration stops when the step
    length drops below ``tol`` meters. Hitting ``max_iter`` first returns the
    best iterate flagged as non-converged.
    """
    if len(obs) < 3:
        raise ValueError(f"need at least 3 observations, got {len(obs)}")
    _check_vantage_spread([o.vantage for o in obs])

    vx = np.array([o.vantage.x for o in obs])
    vy = np.array([o.vantage.y for o in obs])
    targets = np.array([o.center() for o in obs])
    if initial is None:
        initial = LocalPoint(float(vx.mean()), float(vy.mean()))
    p = np.array([initial.x, initial.y])

    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        point = LocalPoint(p[0], p[1])
        r = ls_residuals(point, obs)
        jac = ls_jacobian(point, obs)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        try:
            step = np.linalg.solve(jtj, -jtr)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]

        f0 = float(r @ r)
        for _ in range(20):
            if _objective(p + step, vx, vy, targets) <= f0:
                break
            step = step / 2.0
        p = p + step
        if float(np.hypot(*step)) < tol:
            converged = True
            break

    estimate = LocalPoint(float(p[0]), float(p[1]))
    return SolveResult(estimate, residual_rms(estimate, obs), iterations, converged)


def residual_rms(p: LocalPoint, obs: Sequence[DistanceObservation]) -> float:
    """Root-mean-square residual of ``p`` against the observations.

    Exact and quantized observations contribute |distance - target|; interval
    observations contribute zero anywhere inside [lo, hi] and the distance to
    the nearer bound outside.
    """
    if not obs:
        raise ValueError("observation list is empty")
    sq = 0.0
    for o in obs:
        d = p.distance_to(o.vantage)
        if isinstance(o.kind, Interval):
            lo, hi = o.kind.lo, o.kind.hi
            r = 0.0 if lo <= d <= hi else (lo - d if d < lo else d - hi)
        else:
            r = d - o.center()
        sq += r * r
    return math.sqrt(sq / len(obs))
