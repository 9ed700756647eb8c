"""proxileak: attack and defense toolkit for distance-sorting location services."""

__version__ = "0.1.0"

from .geo import GeoPoint, LocalPoint, Projection, haversine_distance
from .region import Annulus, FeasibleRegion, monte_carlo_area, rasterize_intersection
from .server import OrderingPolicy, ProximityServer, ServerConfig, UserProfile, quantize_distance
from .trilateration import DistanceObservation, SolveResult, solve_exact_three_circles, solve_least_squares

__all__ = [
    "__version__",
    "GeoPoint", "LocalPoint", "Projection", "haversine_distance",
    "Annulus", "FeasibleRegion", "monte_carlo_area", "rasterize_intersection",
    "OrderingPolicy", "ProximityServer", "ServerConfig", "UserProfile", "quantize_distance",
    "DistanceObservation", "SolveResult", "solve_exact_three_circles", "solve_least_squares",
]
