"""User-side countermeasures and their utility cost.

Policies shift the location a device reports (fake-GPS style) and/or hide
the displayed distance. The spoofed location is drawn once and held fixed,
matching how fake-GPS apps are actually used; per-query noise is a different
defense and out of scope. Utility is measured as the displayed-distance
error experienced by honest nearby viewers, so attack error vs. utility loss
becomes a concrete trade-off curve.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geo import GeoPoint, LocalPoint, Projection, haversine_distance
from .server import UserProfile


@dataclass(frozen=True)
class FixedShift:
    """Report a location displaced by a fixed bearing/distance."""

    bearing_deg: float
    distance_m: float

    def __post_init__(self):
        if not 0.0 <= self.bearing_deg < 360.0:
            raise ValueError(f"bearing must be in [0, 360), got {self.bearing_deg}")
        if self.distance_m < 0 or not math.isfinite(self.distance_m):
            raise ValueError(f"shift distance must be finite and >= 0, got {self.distance_m}")


@dataclass(frozen=True)
class Jitter:
    """Report a location drawn uniformly from a disk around the true one."""

    radius_m: float
    seed: int

    def __post_init__(self):
        if self.radius_m < 0 or not math.isfinite(self.radius_m):
            raise ValueError(f"jitter radius must be finite and >= 0, got {self.radius_m}")


Shift = FixedShift | Jitter


@dataclass(frozen=True)
class DefensePolicy:
    """Optional distance hiding composed with an optional location shift."""

    hide_distance: bool = False
    shift: Shift | None = None

    @property
    def label(self) -> str:
        parts = []
        if self.hide_distance:
            parts.append("hide")
        if isinstance(self.shift, FixedShift):
            parts.append(f"shift{self.shift.distance_m:g}m@{self.shift.bearing_deg:g}")
        elif isinstance(self.shift, Jitter):
            parts.append(f"jitter{self.shift.radius_m:g}m")
        return "+".join(parts) if parts else "none"


NO_DEFENSE = DefensePolicy()


def _stable_id_hash(user_id: str) -> int:
    return int.from_bytes(hashlib.sha256(user_id.encode()).digest()[:4], "big")


def _shift_vector(shift: Shift, user_id: str) -> tuple[float, float]:
    if isinstance(shift, FixedShift):
        bearing = math.radians(shift.bearing_deg)
        return shift.distance_m * math.sin(bearing), shift.distance_m * math.cos(bearing)
    # unit-disk draw scaled by the radius, so the same seed gives the same
    # direction at every radius (paired comparisons stay monotone)
    rng = np.random.default_rng(np.random.SeedSequence([shift.seed, _stable_id_hash(user_id)]))
    r = math.sqrt(rng.random())
    theta = rng.random() * 2.0 * math.pi
    return shift.radius_m * r * math.sin(theta), shift.radius_m * r * math.cos(theta)


def apply_policy(profile: UserProfile, policy: DefensePolicy) -> UserProfile:
    """Return the profile as the server will see it under ``policy``.

    Never touches ``true_location``. Shifts displace the reported location
    in the tangent plane at the true location; a displacement that leaves
    valid coordinate ranges raises ValueError.
    """
    reported = profile.true_location
    if policy.shift is not None:
        dx, dy = _shift_vector(policy.shift, profile.id)
        reported = Projection(profile.true_location).to_geo(LocalPoint(dx, dy))
    return UserProfile(
        id=profile.id,
        true_location=profile.true_location,
        reported_location=reported,
        hide_distance=profile.hide_distance or policy.hide_distance,
        last_login=profile.last_login,
    )


def utility_distortion(policy: DefensePolicy, true_location: GeoPoint,
                       viewer_samples: int, seed: int,
                       profile_id: str = "victim") -> float:
    """Mean displayed-distance error for honest viewers near the user.

    Viewers are drawn uniformly from a 5 km disk around the true location
    with a seeded generator; each contributes |d(viewer, reported) -
    d(viewer, true)|. This is the ranking-relevant distance error, so it is
    zero for pure distance hiding.
    """
    if viewer_samples < 1:
        raise ValueError(f"viewer_samples must be >= 1, got {viewer_samples}")
    defended = apply_policy(UserProfile(profile_id, true_location), policy)
    projection = Projection(true_location)
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(viewer_samples):
        r = 5000.0 * math.sqrt(rng.random())
        theta = rng.random() * 2.0 * math.pi
        viewer = projection.to_geo(LocalPoint(r * math.sin(theta), r * math.cos(theta)))
        total += abs(haversine_distance(viewer, defended.reported_location)
                     - haversine_distance(viewer, defended.true_location))
    return total / viewer_samples


@dataclass(frozen=True)
class TradeoffCell:
    """One (policy, seed) evaluation."""

    policy_label: str
    seed: int
    error_m: float          # nan when the attack failed
    region_area_m2: float   # nan when the attack failed
    utility_m: float
    failure: str | None = None


@dataclass(frozen=True)
class TradeoffSummary:
    policy_label: str
    median_error_m: float
    median_region_area_m2: float
    mean_utility_m: float


def _policy_for_repetition(policy: DefensePolicy, i: int) -> DefensePolicy:
    """Redraw jitter per repetition while keeping the policy identity."""
    if isinstance(policy.shift, Jitter):
        return DefensePolicy(policy.hide_distance,
                             Jitter(policy.shift.radius_m, policy.shift.seed + i))
    return policy


def evaluate_tradeoff(scenario, policies: Sequence[DefensePolicy], seeds: int,
                      utility_samples: int = 200, attack=None,
                      ) -> tuple[list[TradeoffSummary], list[TradeoffCell]]:
    """Run an attack against each policy over paired seeds.

    Uses the scenario's attack unless ``attack`` (an AttackSpec) overrides
    it. Seed i perturbs the scenario's named seeds (and any jitter draw)
    identically for every policy, so rows pair across policies. Attack-level
    failures (e.g. the classic attack against a hidden victim) are recorded
    in the cell, not raised. Returns (per-policy summaries, all cells);
    medians ignore failed cells.
    """
    from dataclasses import replace

    from . import scenario as scenario_mod
    from .adversary import AttackError

    if attack is not None:
        scenario = replace(scenario, attack=attack)
    cells = []
    for policy in policies:
        for i in range(seeds):
            cell_policy = _policy_for_repetition(policy, i)
            variant = scenario_mod.with_seed_offset(scenario, i)
            variant = scenario_mod.with_defense(variant, cell_policy)
            utility = utility_distortion(cell_policy, variant.victim_location(),
                                         utility_samples, seed=10_000 + i)
            try:
                outcome = scenario_mod.run(variant)
                error = math.nan if outcome.report.error_m is None else outcome.report.error_m
                cells.append(TradeoffCell(policy.label, i, error,
                                          outcome.report.region_area_m2, utility))
            except AttackError as exc:
                cells.append(TradeoffCell(policy.label, i, math.nan, math.nan, utility,
                                          failure=type(exc).__name__))

    summaries = []
    for policy in policies:
        rows = [c for c in cells if c.policy_label == policy.label]
        errors = np.array([c.error_m for c in rows])
        areas = np.array([c.region_area_m2 for c in rows])
        with np.errstate(all="ignore"):
            summaries.append(TradeoffSummary(
                policy_label=policy.label,
                median_error_m=float(np.nanmedian(errors)) if not np.all(np.isnan(errors)) else math.nan,
                median_region_area_m2=float(np.nanmedian(areas)) if not np.all(np.isnan(areas)) else math.nan,
                mean_utility_m=float(np.mean([c.utility_m for c in rows])),
            ))
    return summaries, cells


TRADEOFF_CSV_HEADER = ("policy", "seed", "error_m", "region_area_m2", "utility_m")


def tradeoff_csv(cells: Sequence[TradeoffCell]) -> str:
    """Serialize trade-off cells with the fixed header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRADEOFF_CSV_HEADER)
    for c in cells:
        writer.writerow([c.policy_label, c.seed, repr(c.error_m),
                         repr(c.region_area_m2), repr(c.utility_m)])
    return buf.getvalue()
