"""Coordinate types, great-circle distance, and a local planar projection.

All attack geometry runs in planar meters. A single Earth radius constant is
shared by the distance function and the projection so that the two distance
notions agree at city scale (see the tolerance tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_008.8
"""Mean Earth radius in meters (IUGG mean radius R1)."""

METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0
"""Arc length of one degree of latitude, derived from ``EARTH_RADIUS_M``."""


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84-style geodetic coordinate in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"coordinates must be finite, got ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class LocalPoint:
    """A point in the local tangent plane: meters east (x) / north (y) of the origin."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"local coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "LocalPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points.

    Symmetric and non-negative; exact zero for identical points. This is the
    "displayed distance" of the simulated service (the difference between the
    geodesic and planar distance is below display quantization at city scale).
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.asin(min(1.0, math.sqrt(s)))


@dataclass(frozen=True)
class Projection:
    """Equirectangular projection onto the tangent plane at ``origin``.

    x = (lon - lon0) * K * cos(lat0),  y = (lat - lat0) * K, with K the
    meters-per-degree-latitude constant. Exactly invertible. Documented
    validity radius: 50 km around the origin; the stated planar-vs-geodesic
    error budget (<= 0.1% + 0.5 m within 10 km) holds for mid-latitude
    origins (|lat| <= ~35 deg); distortion grows as tan(lat) beyond that.
    """

    origin: GeoPoint
    validity_radius_m: float = 50_000.0

    def to_local(self, g: GeoPoint) -> LocalPoint:
        """Project a geodetic point to local planar meters.

        Raises ValueError for points beyond the validity radius.
        """
        d = haversine_distance(self.origin, g)
        if d > self.validity_radius_m:
            raise ValueError(
                f"point is {d:.0f} m from the projection origin, "
                f"beyond the {self.validity_radius_m:.0f} m validity radius"
            )
        x = (g.lon - self.origin.lon) * METERS_PER_DEG_LAT * math.cos(math.radians(self.origin.lat))
        y = (g.lat - self.origin.lat) * METERS_PER_DEG_LAT
        return LocalPoint(x, y)

    def to_geo(self, p: LocalPoint) -> GeoPoint:
        """Invert :meth:`to_local`. Exact algebraic inverse."""
        if math.hypot(p.x, p.y) > self.validity_radius_m:
            raise ValueError(
                f"local point {math.hypot(p.x, p.y):.0f} m from origin, "
                f"beyond the {self.validity_radius_m:.0f} m validity radius"
            )
        lat = self.origin.lat + p.y / METERS_PER_DEG_LAT
        lon = self.origin.lon + p.x / (METERS_PER_DEG_LAT * math.cos(math.radians(self.origin.lat)))
        return GeoPoint(lat, lon)
