"""In-process simulation of a distance-sorting proximity service.

The server keeps a user registry and answers proximity queries with a list
sorted by distance. Users who hide their distance are still ranked, which is
the ordering side channel the attack toolkit exploits. Displayed distances
can be rounded to a configurable step, and profiles drop out of query
results after a visibility window since their last login.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .geo import GeoPoint, haversine_distance


class OrderingPolicy(str, enum.Enum):
    """How the result list is sorted.

    TRUE_DISTANCE matches observed app behavior: exact distance order even
    for users who hide the displayed value. QUANTIZED_THEN_ID models a
    hardened server that only sorts by the rounded distance, which caps what
    rank comparisons can leak.
    """

    TRUE_DISTANCE = "true_distance"
    QUANTIZED_THEN_ID = "quantized_then_id"


@dataclass(frozen=True)
class ServerConfig:
    quantization_step: float = 0.0      # 0 = display exact distances
    visibility_window: float = 7200.0   # seconds since last login
    max_results: int = 100
    max_range: float = 20000.0          # meters
    ordering: OrderingPolicy = OrderingPolicy.TRUE_DISTANCE

    def __post_init__(self):
        if self.quantization_step < 0 or not math.isfinite(self.quantization_step):
            raise ValueError(f"quantization_step must be finite and >= 0, got {self.quantization_step}")
        if self.visibility_window < 0:
            raise ValueError(f"visibility_window must be >= 0, got {self.visibility_window}")
        if self.max_results < 1:
            raise ValueError(f"max_results must be >= 1, got {self.max_results}")
        if self.max_range < 0:
            raise ValueError(f"max_range must be >= 0, got {self.max_range}")


@dataclass(frozen=True)
class UserProfile:
    """A registered account.

    ``reported_location`` is what the device tells the server (shifted by a
    defense policy, if any); ``true_location`` is where the user really is
    and is only ever read by the measurement harness.
    """

    id: str
    true_location: GeoPoint
    reported_location: GeoPoint | None = None
    hide_distance: bool = False
    last_login: float = 0.0

    def __post_init__(self):
        if self.reported_location is None:
            object.__setattr__(self, "reported_location", self.true_location)

    def moved_to(self, reported: GeoPoint) -> "UserProfile":
        return replace(self, reported_location=reported)


@dataclass(frozen=True)
class ProximityEntry:
    user_id: str
    rank: int
    displayed_distance: float | None  # None = user hides the distance


@dataclass(frozen=True)
class ProximityResponse:
    entries: tuple[ProximityEntry, ...]
    query_serial: int

    def entry_for(self, user_id: str) -> ProximityEntry | None:
        for e in self.entries:
            if e.user_id == user_id:
                return e
        return None

    def rank_of(self, user_id: str) -> int | None:
        e = self.entry_for(user_id)
        return None if e is None else e.rank


def quantize_distance(d: float, step: float) -> float:
    """Round ``d`` to the nearest multiple of ``step`` (ties away from zero).

    A step of zero displays the exact distance.
    """
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    if step == 0:
        return d
    return math.floor(d / step + 0.5) * step


@dataclass
class ProximityServer:
    """Registry plus query engine.

    Single-writer contract: callers serialize mutations, any number of
    queries may run between them. ``proximity_query`` itself only bumps the
    response serial.
    """

    config: ServerConfig = field(default_factory=ServerConfig)

    def __post_init__(self):
        self._users: dict[str, UserProfile] = {}
        self._mutations = 0
        self._queries = 0

    @property
    def user_ids(self) -> tuple[str, ...]:
        return tuple(self._users)

    @property
    def mutation_count(self) -> int:
        return self._mutations

    @property
    def query_count(self) -> int:
        return self._queries

    def get_user(self, user_id: str) -> UserProfile:
        return self._users[user_id]

    def has_user(self, user_id: str) -> bool:
        return user_id in self._users

    def upsert_user(self, profile: UserProfile) -> None:
        """Insert or fully replace the profile with the same id."""
        profile.true_location.validate()
        profile.reported_location.validate()
        self._users[profile.id] = profile
        self._mutations += 1

    def remove_user(self, user_id: str) -> None:
        if self._users.pop(user_id, None) is not None:
            self._mutations += 1

    def true_distance(self, viewer: GeoPoint, user_id: str) -> float:
        """Exact distance from viewer to a user's reported location.

        Harness/test helper for soundness assertions; not part of what an
        attacker can observe.
        """
        return haversine_distance(viewer, self._users[user_id].reported_location)

    def proximity_query(self, viewer_location: GeoPoint, now: float = 0.0) -> ProximityResponse:
        """Distance-sorted visible users within range, nearest first.

        Visibility requires ``now - last_login <= visibility_window`` and a
        reported location within ``max_range``. Ties break by id ascending.
        The list is truncated to ``max_results``; hidden users keep their
        rank but display no distance.
        """
        cfg = self.config
        candidates = []
        for user_id, profile in self._users.items():
            if now - profile.last_login > cfg.visibility_window:
                continue
            d = haversine_distance(viewer_location, profile.reported_location)
            if d > cfg.max_range:
                continue
            candidates.append((d, user_id, profile))

        if cfg.ordering is OrderingPolicy.TRUE_DISTANCE:
            candidates.sort(key=lambda c: (c[0], c[1]))
        else:
            candidates.sort(key=lambda c: (quantize_distance(c[0], cfg.quantization_step), c[1]))

        self._queries += 1
        entries = tuple(
            ProximityEntry(
                user_id=user_id,
                rank=rank,
                displayed_distance=None if profile.hide_distance
                else quantize_distance(d, cfg.quantization_step),
            )
            for rank, (d, user_id, profile) in enumerate(candidates[:cfg.max_results])
        )
        return ProximityResponse(entries=entries, query_serial=self._queries)
