"""Attack strategies against the proximity server.

Four strategies, all driven purely through the query interface an ordinary
account would have:

* classic trilateration: read the victim's displayed distance from three
  vantage points and solve the circle system;
* passive neighbor bounding: when the victim hides the distance, the entries
  ranked just before and behind them still bracket it, one annulus per
  vantage;
* colluding bisection: plant a fake account and binary-search the victim's
  distance by comparing ranks, which needs no displayed distances at all;
* remote vantage placement: stand between a dense area and the suspected
  region so the crowd supplies usable neighbors for an isolated victim.

Region rasters are built from the collected bounds with each annulus widened
by half a cell diagonal. That guard makes the cell-center raster an outer
approximation, so whenever the distance bounds themselves are sound the true
victim's cell is occupied regardless of grid resolution.

An attack owns its server instance for its duration: the colluding search
mutates the registry (plants and removes the fake account). Independent
attacks on independent servers can run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .geo import GeoPoint, LocalPoint, Projection, haversine_distance
from .region import Annulus, FeasibleRegion, Rect, rasterize_intersection
from .server import OrderingPolicy, ProximityResponse, ProximityServer, ServerConfig, UserProfile
from .trilateration import DistanceObservation, solve_least_squares

DEFAULT_CELL_SIZE_M = 2.0


class AttackError(Exception):
    """An attack could not proceed against the current server state."""


class VictimHidden(AttackError):
    """The victim hides the displayed distance, blocking the classic attack."""


class VictimNotVisible(AttackError):
    """The victim is absent from a proximity response."""


@dataclass(frozen=True)
class NeighborBounds:
    """Distance bracket for the victim as seen from one vantage point."""

    vantage: LocalPoint
    lower: float
    upper: float

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError(f"need 0 <= lower <= upper, got [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass
class AttackReport:
    """What an attack produced plus the budget it consumed.

    ``error_m`` is the distance from the estimate to the true victim; the
    attacker cannot know it, so it stays None until the measurement harness
    fills it in.
    """

    estimate: GeoPoint | None
    region: FeasibleRegion
    queries_used: int
    account_moves: int
    converged: bool
    bounds: tuple[NeighborBounds, ...] = ()
    observations: tuple[DistanceObservation, ...] = ()
    error_m: float | None = None

    @property
    def region_area_m2(self) -> float:
        return self.region.area_m2


@dataclass(frozen=True)
class BisectionResult:
    """Outcome of one colluding-account distance search."""

    bounds: NeighborBounds
    iterations: int
    queries_used: int
    converged: bool


def vantage_projection(vantages: Sequence[GeoPoint]) -> Projection:
    """Shared local frame for an attack: tangent plane at the vantage centroid."""
    lat = sum(v.lat for v in vantages) / len(vantages)
    lon = sum(v.lon for v in vantages) / len(vantages)
    return Projection(GeoPoint(lat, lon))


def _region_from_bounds(bounds: Sequence[NeighborBounds], cell_size: float,
                        raster_bounds: Rect | None = None) -> FeasibleRegion:
    guard = cell_size * math.sqrt(2.0) / 2.0
    annuli = [Annulus(b.vantage, max(0.0, b.lower - guard), b.upper + guard) for b in bounds]
    return rasterize_intersection(annuli, cell_size, raster_bounds)


def _centroid_estimate(region: FeasibleRegion, projection: Projection) -> GeoPoint | None:
    c = region.centroid
    return None if c is None else projection.to_geo(c)


def classic_trilateration_attack(server: ProximityServer, victim_id: str,
                                 vantages: Sequence[GeoPoint], now: float = 0.0,
                                 cell_size: float = DEFAULT_CELL_SIZE_M) -> AttackReport:
    """Read the victim's displayed distance from three vantages and solve.

    Raises VictimHidden when the distance is not displayed and
    VictimNotVisible when the victim is missing from any response. The
    report's region is the intersection of the three display-rounding
    annuli, so it stays meaningful under quantized display.
    """
    if len(vantages) != 3:
        raise ValueError(f"classic trilateration needs exactly 3 vantages, got {len(vantages)}")
    projection = vantage_projection(vantages)
    step = server.config.quantization_step

    observations = []
    bounds = []
    for vantage in vantages:
        response = server.proximity_query(vantage, now)
        entry = response.entry_for(victim_id)
        if entry is None:
            raise VictimNotVisible(f"victim {victim_id!r} absent from response at {vantage}")
        if entry.displayed_distance is None:
            raise VictimHidden(f"victim {victim_id!r} hides the distance")
        local = projection.to_local(vantage)
        observations.append(DistanceObservation.quantized(local, entry.displayed_distance, step))
        lo, hi = observations[-1].bounds()
        bounds.append(NeighborBounds(local, lo, hi))

    solve = solve_least_squares(observations)
    region = _region_from_bounds(bounds, cell_size)
    return AttackReport(
        estimate=projection.to_geo(solve.estimate),
        region=region,
        queries_used=3,
        account_moves=3,
        converged=solve.converged,
        bounds=tuple(bounds),
        observations=tuple(observations),
    )


def extract_neighbor_bounds(response: ProximityResponse, victim_id: str,
                            config: ServerConfig,
                            vantage: LocalPoint = LocalPoint(0.0, 0.0)) -> NeighborBounds:
    """Bracket the victim's distance with the adjacent visible entries.

    Scans outward from the victim's rank to the nearest preceding and
    following entries that display a distance; each displayed value is
    widened by half the quantization step so the bracket stays sound. With
    no visible neighbor on a side, the bound falls back to 0 or max_range.
    """
    ranked = response.entries
    victim_rank = response.rank_of(victim_id)
    if victim_rank is None:
        raise VictimNotVisible(f"victim {victim_id!r} absent from response")

    half = config.quantization_step / 2.0
    lower = 0.0
    for entry in reversed(ranked[:victim_rank]):
        if entry.displayed_distance is not None:
            lower = max(0.0, entry.displayed_distance - half)
            break
    upper = config.max_range
    for entry in ranked[victim_rank + 1:]:
        if entry.displayed_distance is not None:
            upper = entry.displayed_distance + half
            break
    return NeighborBounds(vantage, lower, upper)


def neighbor_bound_attack(server: ProximityServer, victim_id: str,
                          vantages: Sequence[GeoPoint], now: float = 0.0,
                          cell_size: float = DEFAULT_CELL_SIZE_M,
                          raster_bounds: Rect | None = None) -> AttackReport:
    """Passive attack: one neighbor-bound annulus per vantage, intersected.

    Works identically whether or not the victim displays a distance; only
    the victim's rank and the neighbors' displayed values are read. The
    estimate is the region centroid (absent when the region is empty, which
    is flagged through ``converged``).
    """
    if not vantages:
        raise ValueError("at least one vantage is required")
    projection = vantage_projection(vantages)

    bounds = []
    for vantage in vantages:
        response = server.proximity_query(vantage, now)
        bounds.append(extract_neighbor_bounds(response, victim_id, server.config,
                                              projection.to_local(vantage)))

    region = _region_from_bounds(bounds, cell_size, raster_bounds)
    return AttackReport(
        estimate=_centroid_estimate(region, projection),
        region=region,
        queries_used=len(vantages),
        account_moves=len(vantages),
        converged=region.cell_count > 0,
        bounds=tuple(bounds),
    )


def colluding_distance_search(server: ProximityServer, victim_id: str,
                              vantage: GeoPoint, epsilon: float,
                              max_iter: int = 64, now: float = 0.0,
                              projection: Projection | None = None,
                              colluder_id: str | None = None) -> BisectionResult:
    """Binary-search the victim's distance with one movable fake account.

    Maintains [lo, hi] starting at (0, max_range). Each iteration plants the
    colluder at planar distance (lo+hi)/2 due north of the vantage, queries,
    and keeps the half-interval consistent with the observed rank order.
    Stops when the width reaches ``epsilon`` (true-distance ordering) or
    ``max(epsilon, quantization_step)`` (quantized ordering, where rank
    comparisons cannot resolve below one step). Returns current bounds
    flagged non-converged if ``max_iter`` runs out first. The colluder is
    always removed afterwards.

    The colluder id is chosen to sort after the victim's id, so ties in the
    ranking never demote the victim. Under true-distance ordering the bracket
    then always contains the true distance. Under quantized ordering the
    lower bound stays exact but the upper bound can undershoot by at most
    one quantization step (a tie within the victim's display bucket), which
    callers must widen for when they need a sound constraint.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    cfg = server.config
    if projection is None:
        projection = Projection(vantage)
    vantage_local = projection.to_local(vantage)
    colluder_frame = Projection(vantage)
    if colluder_id is None:
        colluder_id = f"{victim_id}~colluder"  # strict suffix: sorts after the victim
    while server.has_user(colluder_id):
        colluder_id += "+"

    queries = 1
    if server.proximity_query(vantage, now).rank_of(victim_id) is None:
        raise VictimNotVisible(f"victim {victim_id!r} not visible from {vantage}")

    threshold = epsilon
    if cfg.ordering is OrderingPolicy.QUANTIZED_THEN_ID:
        threshold = max(epsilon, cfg.quantization_step)

    lo, hi = 0.0, cfg.max_range
    iterations = 0
    try:
        while hi - lo > threshold and iterations < max_iter:
            iterations += 1
            mid = (lo + hi) / 2.0
            server.upsert_user(UserProfile(
                id=colluder_id,
                true_location=colluder_frame.to_geo(LocalPoint(0.0, mid)),
                last_login=now,
            ))
            response = server.proximity_query(vantage, now)
            queries += 1
            victim_rank = response.rank_of(victim_id)
            colluder_rank = response.rank_of(colluder_id)
            if victim_rank is None and colluder_rank is None:
                raise VictimNotVisible(f"victim {victim_id!r} vanished during the search")
            # a truncated colluder ranks behind every shown entry, and a
            # truncated victim can only have been displaced by the colluder
            colluder_first = colluder_rank is not None and (
                victim_rank is None or colluder_rank < victim_rank)
            if colluder_first:
                lo = mid
            else:
                hi = mid
    finally:
        server.remove_user(colluder_id)

    return BisectionResult(
        bounds=NeighborBounds(vantage_local, lo, hi),
        iterations=iterations,
        queries_used=queries,
        converged=hi - lo <= threshold,
    )


def hidden_full_attack(server: ProximityServer, victim_id: str,
                       vantages: Sequence[GeoPoint], epsilon: float,
                       max_iter: int = 64, now: float = 0.0,
                       cell_size: float = DEFAULT_CELL_SIZE_M) -> AttackReport:
    """Locate a victim even when every account hides its distance.

    Runs one colluding bisection per vantage, then treats the three brackets
    as interval observations: least squares on the midpoints for the point
    estimate, annulus intersection for the region. Under quantized ordering
    each region annulus is widened upward by one quantization step, the
    bisection's worst-case undershoot, so the region stays sound at the
    granularity the server leaks.
    """
    if len(vantages) != 3:
        raise ValueError(f"hidden-full attack needs exactly 3 vantages, got {len(vantages)}")
    projection = vantage_projection(vantages)

    searches = [
        colluding_distance_search(server, victim_id, vantage, epsilon, max_iter, now,
                                  projection=projection)
        for vantage in vantages
    ]
    observations = tuple(
        DistanceObservation.interval(s.bounds.vantage, s.bounds.lower, s.bounds.upper)
        for s in searches
    )
    solve = solve_least_squares(observations)
    slack = (server.config.quantization_step
             if server.config.ordering is OrderingPolicy.QUANTIZED_THEN_ID else 0.0)
    region = _region_from_bounds(
        [NeighborBounds(s.bounds.vantage, s.bounds.lower, s.bounds.upper + slack)
         for s in searches],
        cell_size)
    return AttackReport(
        estimate=projection.to_geo(solve.estimate),
        region=region,
        queries_used=sum(s.queries_used for s in searches),
        account_moves=sum(s.iterations for s in searches),
        converged=all(s.converged for s in searches) and solve.converged
        and region.cell_count > 0,
        bounds=tuple(s.bounds for s in searches),
        observations=observations,
    )


def select_remote_vantage(dense_center: GeoPoint, suspected_region_center: GeoPoint,
                          fraction: float) -> GeoPoint:
    """Point part-way from a high-density area toward the suspected region.

    Positions the adversary so that crowd members bracket an isolated
    victim's distance. Heuristic only; computed along the planar segment in
    the local projection at ``dense_center``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    projection = Projection(dense_center)
    target = projection.to_local(suspected_region_center)
    if target.x == 0.0 and target.y == 0.0:
        raise ValueError("dense_center and suspected_region_center coincide")
    return projection.to_geo(LocalPoint(target.x * fraction, target.y * fraction))


def fill_true_error(report: AttackReport, victim_true_location: GeoPoint) -> AttackReport:
    """Harness step: measure the estimate against the true victim location."""
    error = None if report.estimate is None else haversine_distance(
        report.estimate, victim_true_location)
    return replace(report, error_m=error)
