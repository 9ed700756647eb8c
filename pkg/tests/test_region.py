import json
import math

import numpy as np
import pytest
from shapely.geometry import shape

from proxileak.geo import GeoPoint, LocalPoint, Projection
from proxileak.region import (
    Annulus,
    CellStatus,
    Rect,
    export_geojson,
    monte_carlo_area,
    rasterize_intersection,
    region_contains,
)


def disk(cx, cy, r):
    return Annulus(LocalPoint(cx, cy), 0.0, r)


def ring(cx, cy, r_in, r_out):
    return Annulus(LocalPoint(cx, cy), r_in, r_out)


def random_annuli(rng, n, with_target=False):
    """2-4 annuli arranged to share at least one common point."""
    target = rng.uniform(-500, 500, size=2)
    annuli = []
    for _ in range(n):
        center = rng.uniform(-2000, 2000, size=2)
        d = math.dist(center, target)
        lo = max(0.0, d - rng.uniform(20, 150))
        hi = d + rng.uniform(20, 150)
        annuli.append(Annulus(LocalPoint(*center), lo, hi))
    if with_target:
        return annuli, LocalPoint(*target)
    return annuli


def test_annulus_validation():
    with pytest.raises(ValueError):
        Annulus(LocalPoint(0, 0), -1.0, 10.0)
    with pytest.raises(ValueError):
        Annulus(LocalPoint(0, 0), 20.0, 10.0)


def test_disk_area_closed_form():
    region = rasterize_intersection([disk(0, 0, 200)], 1.0)
    assert region.area_m2 == pytest.approx(math.pi * 200 ** 2, rel=0.01)
    assert region.area_m2 == region.cell_count * region.cell_size ** 2


def test_ring_area_closed_form():
    region = rasterize_intersection([ring(0, 0, 100, 200)], 1.0)
    assert region.area_m2 == pytest.approx(math.pi * (200 ** 2 - 100 ** 2), rel=0.01)


def test_disjoint_supports_empty_region():
    region = rasterize_intersection([disk(0, 0, 100), disk(10_000, 0, 100)], 2.0)
    assert region.cell_count == 0
    assert region.area_m2 == 0.0
    assert region.centroid is None


def test_contains_semantics():
    region = rasterize_intersection([disk(0, 0, 200)], 1.0)
    assert region.contains(LocalPoint(0, 0))
    assert region_contains(region, LocalPoint(0, 0))

    hole = rasterize_intersection([ring(0, 0, 100, 200)], 1.0)
    assert not hole.contains(LocalPoint(0, 0))
    assert hole.locate(LocalPoint(0, 0)) is CellStatus.EMPTY
    assert hole.locate(LocalPoint(10_000, 0)) is CellStatus.OUT_OF_BOUNDS
    assert not hole.contains(LocalPoint(10_000, 0))


def test_disk_centroid_at_center():
    region = rasterize_intersection([disk(50, -30, 150)], 1.0)
    assert region.centroid.x == pytest.approx(50, abs=1.0)
    assert region.centroid.y == pytest.approx(-30, abs=1.0)


def test_degenerate_annulus_keeps_circle_band():
    region = rasterize_intersection([ring(0, 0, 100, 100)], 2.0)
    assert region.cell_count > 0
    half_diag = 2.0 * math.sqrt(2) / 2
    rows, cols = np.nonzero(region.occupancy)
    xs = region.origin.x + (cols + 0.5) * region.cell_size
    ys = region.origin.y + (rows + 0.5) * region.cell_size
    assert np.all(np.abs(np.hypot(xs, ys) - 100.0) <= half_diag + 1e-9)


def test_bounds_auto_expand_to_cover_annuli():
    small = Rect(-10, -10, 10, 10)
    region = rasterize_intersection([disk(0, 0, 200)], 1.0, bounds=small)
    assert region.area_m2 == pytest.approx(math.pi * 200 ** 2, rel=0.01)
    ny, nx = region.shape
    assert nx >= 400 and ny >= 400


def test_monotone_in_constraints_exact(rng):
    for _ in range(20):
        annuli = random_annuli(rng, 3)
        cover = annuli[0].bbox()
        for a in annuli[1:]:
            cover = cover.union(a.bbox())
        first = rasterize_intersection(annuli[:2], 4.0, bounds=cover)
        second = rasterize_intersection(annuli, 4.0, bounds=cover)
        # same grid, so monotonicity must hold cell-wise, not just on areas
        assert first.shape == second.shape
        assert np.all(second.occupancy <= first.occupancy)
        assert second.area_m2 <= first.area_m2


def test_soundness_inside_margin(rng):
    # points satisfying every constraint analytically, at least cell*sqrt(2)
    # from each boundary circle, must land in an occupied cell
    cell = 3.0
    margin = cell * math.sqrt(2)
    checked = 0
    for _ in range(60):
        annuli, point = random_annuli(rng, int(rng.integers(2, 5)), with_target=True)
        ok = all(a.r_inner + margin <= point.distance_to(a.center) <= a.r_outer - margin
                 for a in annuli)
        if not ok:
            continue
        region = rasterize_intersection(annuli, cell)
        assert region.contains(point)
        checked += 1
    assert checked >= 50


def test_monte_carlo_disk():
    area = monte_carlo_area([disk(0, 0, 200)], 1_000_000, seed=7)
    assert area == pytest.approx(math.pi * 200 ** 2, rel=0.02)


def test_monte_carlo_empty():
    assert monte_carlo_area([disk(0, 0, 100), disk(10_000, 0, 100)], 1000, seed=1) == 0.0


def test_monte_carlo_deterministic():
    annuli = [ring(0, 0, 50, 300), disk(100, 50, 400)]
    a = monte_carlo_area(annuli, 100_000, seed=42)
    b = monte_carlo_area(annuli, 100_000, seed=42)
    assert a == b


def test_raster_and_monte_carlo_agree(rng):
    for _ in range(20):
        annuli = random_annuli(rng, int(rng.integers(2, 5)))
        raster = rasterize_intersection(annuli, 2.0).area_m2
        mc = monte_carlo_area(annuli, 4_000_000, seed=int(rng.integers(1 << 31)))
        if raster == 0.0:
            assert mc <= 200.0
        else:
            assert abs(mc - raster) <= 0.05 * raster


def test_refinement_between_4m_and_2m_cells():
    from proxileak.scenario import kyoto_scenario, run

    scn = kyoto_scenario("neighbor_bound")
    bounds = run(scn).report.bounds
    annuli = [Annulus(b.vantage, b.lower, b.upper) for b in bounds]
    coarse = rasterize_intersection(annuli, 4.0).area_m2
    fine = rasterize_intersection(annuli, 2.0).area_m2
    assert abs(fine - coarse) <= 0.05 * fine


def test_geojson_empty_region():
    region = rasterize_intersection([disk(0, 0, 100), disk(10_000, 0, 100)], 2.0)
    doc = json.loads(export_geojson(region, Projection(GeoPoint(35.0, 135.0))))
    assert doc == {"type": "FeatureCollection", "features": []}


def test_geojson_single_cell_closed_square():
    projection = Projection(GeoPoint(35.0, 135.0))
    region = rasterize_intersection([ring(0, 0, 0.0, 0.0)], 2.0)
    assert region.cell_count == 1
    doc = json.loads(export_geojson(region, projection))
    (feature,) = doc["features"]
    assert feature["geometry"]["type"] == "MultiPolygon"
    (polygon,) = feature["geometry"]["coordinates"]
    exterior = polygon[0]
    assert len(exterior) == 5
    assert exterior[0] == exterior[-1]


def test_geojson_coordinates_rounded_to_seven_places():
    projection = Projection(GeoPoint(35.0, 135.0))
    region = rasterize_intersection([disk(0, 0, 30)], 2.0)
    doc = json.loads(export_geojson(region, projection))
    for polygon in doc["features"][0]["geometry"]["coordinates"]:
        for ring_coords in polygon:
            for lon, lat in ring_coords:
                assert round(lon, 7) == lon
                assert round(lat, 7) == lat


def test_geojson_parse_back_area_matches():
    projection = Projection(GeoPoint(35.02, 135.77))
    region = rasterize_intersection([ring(0, 0, 150, 220), ring(300, 100, 100, 260)], 2.0)
    doc = json.loads(export_geojson(region, projection))
    (feature,) = [f for f in doc["features"]
                  if f["properties"].get("kind") == "feasible_region"]
    geom = shape(feature["geometry"])
    # back-project each vertex to local meters and take the polygon area
    area = 0.0
    for poly in geom.geoms:
        def ring_to_local(coords):
            return [(projection.to_local(GeoPoint(lat, lon)).x,
                     projection.to_local(GeoPoint(lat, lon)).y) for lon, lat in coords]
        from shapely.geometry import Polygon
        area += Polygon(ring_to_local(poly.exterior.coords),
                        [ring_to_local(r.coords) for r in poly.interiors]).area
    assert abs(area - region.area_m2) <= region.cell_size ** 2 + 0.05 * region.area_m2


def test_geojson_points_included():
    projection = Projection(GeoPoint(35.0, 135.0))
    region = rasterize_intersection([disk(0, 0, 20)], 2.0)
    doc = json.loads(export_geojson(region, projection,
                                    points=[("vantage-1", GeoPoint(35.001, 135.0))]))
    kinds = [f["properties"]["kind"] for f in doc["features"]]
    assert kinds.count("point") == 1
    point = [f for f in doc["features"] if f["properties"]["kind"] == "point"][0]
    assert point["properties"]["label"] == "vantage-1"


def test_rasterize_rejects_bad_inputs():
    with pytest.raises(ValueError):
        rasterize_intersection([], 1.0)
    with pytest.raises(ValueError):
        rasterize_intersection([disk(0, 0, 10)], 0.0)
    with pytest.raises(ValueError):
        monte_carlo_area([disk(0, 0, 10)], 0, seed=1)
