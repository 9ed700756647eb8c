"""Feasible-region geometry: intersect annulus constraints on a raster grid.

Each constraint is a ring of admissible distances around a vantage point.
The intersection of all rings is the set of locations consistent with every
observation; its raster is the attack output when no point estimate exists.
A Monte Carlo estimator provides an independent area cross-check, and the
occupied cells can be exported as GeoJSON for map rendering.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from shapely.geometry import box as shapely_box
from shapely.geometry import MultiPolygon, Polygon
from shapely.ops import unary_union

from . import _kernels
from .geo import GeoPoint, LocalPoint, Projection


@dataclass(frozen=True)
class Annulus:
    """Points whose distance to ``center`` lies in [r_inner, r_outer]."""

    center: LocalPoint
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (math.isfinite(self.r_inner) and math.isfinite(self.r_outer)):
            raise ValueError("annulus radii must be finite")
        if self.r_inner < 0:
            raise ValueError(f"inner radius {self.r_inner} < 0")
        if self.r_outer < self.r_inner:
            raise ValueError(f"outer radius {self.r_outer} < inner radius {self.r_inner}")

    def contains(self, p: LocalPoint) -> bool:
        d = p.distance_to(self.center)
        return self.r_inner <= d <= self.r_outer

    def bbox(self) -> "Rect":
        return Rect(self.center.x - self.r_outer, self.center.y - self.r_outer,
                    self.center.x + self.r_outer, self.center.y + self.r_outer)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in local meters."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def union(self, other: "Rect") -> "Rect":
        return Rect(min(self.xmin, other.xmin), min(self.ymin, other.ymin),
                    max(self.xmax, other.xmax), max(self.ymax, other.ymax))

    def intersection(self, other: "Rect") -> "Rect | None":
        r = Rect(max(self.xmin, other.xmin), max(self.ymin, other.ymin),
                 min(self.xmax, other.xmax), min(self.ymax, other.ymax))
        if r.xmin >= r.xmax or r.ymin >= r.ymax:
            return None
        return r

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


class CellStatus(enum.Enum):
    OCCUPIED = "occupied"
    EMPTY = "empty"
    OUT_OF_BOUNDS = "out_of_bounds"


@dataclass(frozen=True)
class FeasibleRegion:
    """Occupancy raster over a rectangle of local space.

    ``origin`` is the lower-left corner of cell (0, 0); ``occupancy`` holds
    one flag per cell (row-major, row j = northing). Area is exactly
    ``cell_count * cell_size**2``; the centroid is the mean of occupied cell
    centers and is undefined for an empty region.
    """

    origin: LocalPoint
    cell_size: float
    occupancy: np.ndarray  # bool/uint8, shape (ny, nx)

    @cached_property
    def cell_count(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    @property
    def area_m2(self) -> float:
        return self.cell_count * self.cell_size ** 2

    @cached_property
    def centroid(self) -> LocalPoint | None:
        if self.cell_count == 0:
            return None
        rows, cols = np.nonzero(self.occupancy)
        x = self.origin.x + (cols.mean() + 0.5) * self.cell_size
        y = self.origin.y + (rows.mean() + 0.5) * self.cell_size
        return LocalPoint(float(x), float(y))

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape  # (ny, nx)

    def locate(self, p: LocalPoint) -> CellStatus:
        """Status of the cell containing ``p``; distinguishes out-of-bounds."""
        ny, nx = self.occupancy.shape
        i = math.floor((p.x - self.origin.x) / self.cell_size)
        j = math.floor((p.y - self.origin.y) / self.cell_size)
        if not (0 <= i < nx and 0 <= j < ny):
            return CellStatus.OUT_OF_BOUNDS
        return CellStatus.OCCUPIED if self.occupancy[j, i] else CellStatus.EMPTY

    def contains(self, p: LocalPoint) -> bool:
        return self.locate(p) is CellStatus.OCCUPIED


def region_contains(region: FeasibleRegion, p: LocalPoint) -> bool:
    """True iff the cell containing ``p`` is occupied (False when out of bounds)."""
    return region.contains(p)


def _covering_bounds(constraints: Sequence[Annulus], bounds: Rect | None) -> Rect:
    cover = constraints[0].bbox()
    for a in constraints[1:]:
        cover = cover.union(a.bbox())
    if bounds is not None:
        cover = cover.union(bounds)
    return cover


def rasterize_intersection(constraints: Sequence[Annulus], cell_size: float,
                           bounds: Rect | None = None) -> FeasibleRegion:
    """Rasterize the intersection of annulus constraints.

    A cell is occupied iff its center satisfies every constraint (both radius
    bounds inclusive). The grid covers ``bounds`` expanded, if necessary, to
    contain every annulus's outer circle. A degenerate annulus (zero width)
    selects cells whose center distance matches the radius within half a cell
    diagonal, so it keeps a one-cell-thick circle instead of vanishing.
    """
    if not constraints:
        raise ValueError("at least one annulus constraint is required")
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    cover = _covering_bounds(constraints, bounds)
    nx = max(1, math.ceil((cover.xmax - cover.xmin) / cell_size))
    ny = max(1, math.ceil((cover.ymax - cover.ymin) / cell_size))

    half_diag = cell_size * math.sqrt(2.0) / 2.0
    cx = np.array([a.center.x for a in constraints], dtype=np.float64)
    cy = np.array([a.center.y for a in constraints], dtype=np.float64)
    r_in = np.array([a.r_inner if a.r_outer > a.r_inner
                     else max(0.0, a.r_inner - half_diag) for a in constraints],
                    dtype=np.float64)
    r_out = np.array([a.r_outer if a.r_outer > a.r_inner
                      else a.r_outer + half_diag for a in constraints],
                     dtype=np.float64)

    occupancy = _kernels.annulus_occupancy(cx, cy, r_in, r_out,
                                           cover.xmin, cover.ymin, cell_size, nx, ny)
    return FeasibleRegion(LocalPoint(cover.xmin, cover.ymin), cell_size, occupancy)


def monte_carlo_area(constraints: Sequence[Annulus], samples: int, seed: int) -> float:
    """Unbiased rejection-sampling area estimate of the annulus intersection.

    Samples uniformly over the tightest covering rectangle (the intersection
    of the per-annulus bounding boxes) with a seeded generator. Kept
    independent of the rasterization kernel so the two area computations can
    cross-check each other.
    """
    if not constraints:
        raise ValueError("at least one annulus constraint is required")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rect: Rect | None = constraints[0].bbox()
    for a in constraints[1:]:
        rect = rect.intersection(a.bbox())
        if rect is None:
            return 0.0

    rng = np.random.default_rng(seed)
    xs = rng.uniform(rect.xmin, rect.xmax, samples)
    ys = rng.uniform(rect.ymin, rect.ymax, samples)
    inside = np.ones(samples, dtype=bool)
    for a in constraints:
        d2 = (xs - a.center.x) ** 2 + (ys - a.center.y) ** 2
        inside &= (d2 >= a.r_inner ** 2) & (d2 <= a.r_outer ** 2)
    return rect.area * float(np.count_nonzero(inside)) / samples


def _row_runs(occupancy: np.ndarray) -> Iterable[tuple[int, int, int]]:
    """Yield (row, col_start, col_stop) for maximal runs of occupied cells."""
    for j in range(occupancy.shape[0]):
        row = occupancy[j]
        if not row.any():
            continue
        padded = np.diff(np.concatenate(([0], row.astype(np.int8), [0])))
        starts = np.nonzero(padded == 1)[0]
        stops = np.nonzero(padded == -1)[0]
        for a, b in zip(starts, stops):
            yield j, int(a), int(b)


def _region_multipolygon(region: FeasibleRegion) -> MultiPolygon:
    cell = region.cell_size
    x0, y0 = region.origin.x, region.origin.y
    boxes = [shapely_box(x0 + a * cell, y0 + j * cell, x0 + b * cell, y0 + (j + 1) * cell)
             for j, a, b in _row_runs(region.occupancy)]
    merged = unary_union(boxes)
    if merged.is_empty:
        return MultiPolygon([])
    if isinstance(merged, Polygon):
        return MultiPolygon([merged])
    return MultiPolygon(sorted(merged.geoms, key=lambda g: (g.bounds[0], g.bounds[1])))


def export_geojson(region: FeasibleRegion, projection: Projection,
                   points: Sequence[tuple[str, GeoPoint]] = (),
                   precision: int = 7) -> str:
    """Render the region (and optional labeled points) as a GeoJSON string.

    The occupied cells are merged into a MultiPolygon, unprojected to WGS84
    lon/lat (GeoJSON axis order), with coordinates rounded to ``precision``
    decimal places. An empty region yields a FeatureCollection whose only
    contents are the optional point features.
    """
    def unproject_ring(ring) -> list[list[float]]:
        out = []
        for x, y in ring.coords:
            g = projection.to_geo(LocalPoint(x, y))
            out.append([round(g.lon, precision), round(g.lat, precision)])
        return out

    features = []
    multi = _region_multipolygon(region)
    if not multi.is_empty:
        coords = [[unproject_ring(poly.exterior)] + [unproject_ring(r) for r in poly.interiors]
                  for poly in multi.geoms]
        features.append({
            "type": "Feature",
            "geometry": {"type": "MultiPolygon", "coordinates": coords},
            "properties": {
                "kind": "feasible_region",
                "area_m2": round(region.area_m2, 3),
                "cell_size_m": region.cell_size,
                "cell_count": region.cell_count,
            },
        })
    for label, g in points:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point",
                         "coordinates": [round(g.lon, precision), round(g.lat, precision)]},
            "properties": {"kind": "point", "label": label},
        })
    return json.dumps({"type": "FeatureCollection", "features": features},
                      sort_keys=True, separators=(",", ":"))
