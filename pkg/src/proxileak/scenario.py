"""Declarative experiment scenarios: schema, loading, and the run harness.

A scenario file is one JSON document naming the server configuration, the
user population (explicit profiles and/or a seeded random population), the
victim, the vantage points, the attack, and an optional defense. Unknown
fields are rejected so a typo cannot silently change an experiment, and
every random draw flows from a seed named in the file.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import adversary
from .defense import DefensePolicy, FixedShift, Jitter, apply_policy
from .geo import GeoPoint, LocalPoint, Projection
from .region import Rect
from .server import OrderingPolicy, ProximityServer, ServerConfig, UserProfile


class ScenarioError(ValueError):
    """Invalid scenario document; message names the offending field."""


_GEOPOINT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lat", "lon"],
    "properties": {
        "lat": {"type": "number", "minimum": -90, "maximum": 90},
        "lon": {"type": "number", "minimum": -180, "maximum": 180},
    },
}

_BBOX_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lat_min", "lat_max", "lon_min", "lon_max"],
    "properties": {
        "lat_min": {"type": "number"}, "lat_max": {"type": "number"},
        "lon_min": {"type": "number"}, "lon_max": {"type": "number"},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "users", "victim_id", "vantages", "attack"],
    "properties": {
        "schema_version": {"const": 1},
        "server": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quantization_step": {"type": "number", "minimum": 0},
                "visibility_window": {"type": "number", "minimum": 0},
                "max_results": {"type": "integer", "minimum": 1},
                "max_range": {"type": "number", "minimum": 0},
                "ordering": {"enum": ["true_distance", "quantized_then_id"]},
            },
        },
        "users": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "explicit": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["id", "lat", "lon"],
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "lat": {"type": "number"},
                            "lon": {"type": "number"},
                            "hide_distance": {"type": "boolean"},
                            "last_login": {"type": "number"},
                        },
                    },
                },
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["count", "seed"],
                    "properties": {
                        "count": {"type": "integer", "minimum": 0},
                        "seed": {"type": "integer", "minimum": 0},
                        "center": _GEOPOINT_SCHEMA,
                        "radius_m": {"type": "number", "exclusiveMinimum": 0},
                        "bbox": _BBOX_SCHEMA,
                        "hide_distance": {"type": "boolean"},
                        "last_login": {"type": "number"},
                    },
                },
            },
        },
        "victim_id": {"type": "string", "minLength": 1},
        "vantages": {"type": "array", "minItems": 1, "items": _GEOPOINT_SCHEMA},
        "attack": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["classic", "neighbor_bound", "hidden_full"]},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "defense": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hide_distance": {"type": "boolean"},
                "shift": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["fixed", "jitter"]},
                        "bearing_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 360},
                        "distance_m": {"type": "number", "minimum": 0},
                        "radius_m": {"type": "number", "minimum": 0},
                        "seed": {"type": "integer", "minimum": 0},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cell_size": {"type": "number", "exclusiveMinimum": 0},
                "bounds": _BBOX_SCHEMA,
            },
        },
        "now": {"type": "number"},
        "sweep_seed": {"type": "integer", "minimum": 0},
    },
}

RANDOM_USER_PREFIX = "bg-"


@dataclass(frozen=True)
class RandomPopulation:
    count: int
    seed: int
    center: GeoPoint | None = None   # disk placement
    radius_m: float | None = None
    bbox: tuple[float, float, float, float] | None = None  # lat_min, lat_max, lon_min, lon_max
    hide_distance: bool = False
    last_login: float = 0.0


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    epsilon: float = 2.0
    max_iter: int = 64


@dataclass(frozen=True)
class Scenario:
    doc: dict[str, Any]  # validated source document (echoed into reports)
    server: ServerConfig
    explicit_users: tuple[UserProfile, ...]
    random_users: RandomPopulation | None
    victim_id: str
    vantages: tuple[GeoPoint, ...]
    attack: AttackSpec
    defense: DefensePolicy
    cell_size: float
    bounds: tuple[float, float, float, float] | None
    now: float
    sweep_seed: int

    def victim_location(self) -> GeoPoint:
        for u in self.explicit_users:
            if u.id == self.victim_id:
                return u.true_location
        raise ScenarioError(f"victim_id: {self.victim_id!r} not among explicit users")


def _parse_geopoint(obj: dict) -> GeoPoint:
    return GeoPoint(obj["lat"], obj["lon"])


def parse_scenario(doc: dict[str, Any]) -> Scenario:
    """Validate a scenario document and bind it to domain objects."""
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"{exc.json_path}: {exc.message}") from exc

    server_doc = doc.get("server", {})
    server = ServerConfig(
        quantization_step=server_doc.get("quantization_step", 0.0),
        visibility_window=server_doc.get("visibility_window", 7200.0),
        max_results=server_doc.get("max_results", 100),
        max_range=server_doc.get("max_range", 20000.0),
        ordering=OrderingPolicy(server_doc.get("ordering", "true_distance")),
    )

    users_doc = doc["users"]
    explicit = tuple(
        UserProfile(
            id=u["id"],
            true_location=GeoPoint(u["lat"], u["lon"]),
            hide_distance=u.get("hide_distance", False),
            last_login=u.get("last_login", 0.0),
        )
        for u in users_doc.get("explicit", [])
    )
    seen = set()
    for u in explicit:
        if u.id in seen:
            raise ScenarioError(f"$.users.explicit: duplicate id {u.id!r}")
        if u.id.startswith(RANDOM_USER_PREFIX) and "random" in users_doc:
            raise ScenarioError(
                f"$.users.explicit: id prefix {RANDOM_USER_PREFIX!r} collides "
                "with the random population")
        seen.add(u.id)

    random_users = None
    if "random" in users_doc:
        r = users_doc["random"]
        has_disk = "center" in r or "radius_m" in r
        has_bbox = "bbox" in r
        if has_disk == has_bbox:
            raise ScenarioError("$.users.random: give either center+radius_m or bbox")
        if has_disk and ("center" not in r or "radius_m" not in r):
            raise ScenarioError("$.users.random: disk placement needs both center and radius_m")
        bbox = None
        if has_bbox:
            b = r["bbox"]
            if b["lat_min"] >= b["lat_max"] or b["lon_min"] >= b["lon_max"]:
                raise ScenarioError("$.users.random.bbox: min must be < max")
            bbox = (b["lat_min"], b["lat_max"], b["lon_min"], b["lon_max"])
        random_users = RandomPopulation(
            count=r["count"],
            seed=r["seed"],
            center=_parse_geopoint(r["center"]) if has_disk else None,
            radius_m=r.get("radius_m"),
            bbox=bbox,
            hide_distance=r.get("hide_distance", False),
            last_login=r.get("last_login", 0.0),
        )
    if not explicit and random_users is None:
        raise ScenarioError("$.users: at least one of explicit or random is required")

    victim_id = doc["victim_id"]
    if victim_id not in seen:
        raise ScenarioError(f"$.victim_id: {victim_id!r} not among explicit users")

    attack_doc = doc["attack"]
    attack = AttackSpec(
        kind=attack_doc["kind"],
        epsilon=attack_doc.get("epsilon", 2.0),
        max_iter=attack_doc.get("max_iter", 64),
    )
    vantages = tuple(_parse_geopoint(v) for v in doc["vantages"])
    if attack.kind in ("classic", "hidden_full") and len(vantages) != 3:
        raise ScenarioError(
            f"$.vantages: attack {attack.kind!r} needs exactly 3 vantages, got {len(vantages)}")

    defense = DefensePolicy()
    if "defense" in doc:
        d = doc["defense"]
        shift = None
        if "shift" in d:
            s = d["shift"]
            if s["kind"] == "fixed":
                if "bearing_deg" not in s or "distance_m" not in s:
                    raise ScenarioError("$.defense.shift: fixed shift needs bearing_deg and distance_m")
                shift = FixedShift(s["bearing_deg"], s["distance_m"])
            else:
                if "radius_m" not in s or "seed" not in s:
                    raise ScenarioError("$.defense.shift: jitter needs radius_m and seed")
                shift = Jitter(s["radius_m"], s["seed"])
        defense = DefensePolicy(hide_distance=d.get("hide_distance", False), shift=shift)

    output_doc = doc.get("output", {})
    bounds = None
    if "bounds" in output_doc:
        b = output_doc["bounds"]
        bounds = (b["lat_min"], b["lat_max"], b["lon_min"], b["lon_max"])

    return Scenario(
        doc=copy.deepcopy(doc),
        server=server,
        explicit_users=explicit,
        random_users=random_users,
        victim_id=victim_id,
        vantages=vantages,
        attack=attack,
        defense=defense,
        cell_size=output_doc.get("cell_size", adversary.DEFAULT_CELL_SIZE_M),
        bounds=bounds,
        now=doc.get("now", 0.0),
        sweep_seed=doc.get("sweep_seed", 0),
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("$: scenario must be a JSON object")
    return parse_scenario(doc)


def generate_random_users(spec: RandomPopulation) -> list[UserProfile]:
    """Seeded background population, uniform over the disk or box."""
    rng = np.random.default_rng(spec.seed)
    users = []
    for i in range(spec.count):
        if spec.bbox is not None:
            lat_min, lat_max, lon_min, lon_max = spec.bbox
            lat = lat_min + rng.random() * (lat_max - lat_min)
            lon = lon_min + rng.random() * (lon_max - lon_min)
            location = GeoPoint(lat, lon)
        else:
            r = spec.radius_m * math.sqrt(rng.random())
            theta = rng.random() * 2.0 * math.pi
            location = Projection(spec.center).to_geo(
                LocalPoint(r * math.sin(theta), r * math.cos(theta)))
        users.append(UserProfile(
            id=f"{RANDOM_USER_PREFIX}{i:04d}",
            true_location=location,
            hide_distance=spec.hide_distance,
            last_login=spec.last_login,
        ))
    return users


def registry_to_users_doc(server: ProximityServer) -> dict[str, Any]:
    """Snapshot a server registry as the scenario file's ``users`` section.

    Captures the server-observable state: each profile's *reported* location
    becomes the user's location, so any defense shift is baked in and a
    re-materialized server answers queries identically.
    """
    return {
        "explicit": [
            {
                "id": profile.id,
                "lat": profile.reported_location.lat,
                "lon": profile.reported_location.lon,
                "hide_distance": profile.hide_distance,
                "last_login": profile.last_login,
            }
            for profile in (server.get_user(i) for i in sorted(server.user_ids))
        ]
    }


def build_server(scenario: Scenario, seed_override: int | None = None,
                 ) -> tuple[ProximityServer, UserProfile]:
    """Materialize the registry; the defense policy is applied to the victim."""
    server = ProximityServer(scenario.server)
    victim = None
    for profile in scenario.explicit_users:
        if profile.id == scenario.victim_id:
            profile = apply_policy(profile, scenario.defense)
            victim = profile
        server.upsert_user(profile)
    if victim is None:
        raise ScenarioError(f"$.victim_id: {scenario.victim_id!r} not among explicit users")
    if scenario.random_users is not None:
        spec = scenario.random_users
        if seed_override is not None:
            spec = replace(spec, seed=seed_override)
        for profile in generate_random_users(spec):
            server.upsert_user(profile)
    return server, victim


@dataclass(frozen=True)
class RunOutcome:
    scenario: Scenario
    report: adversary.AttackReport
    victim: UserProfile

    @property
    def projection(self):
        return adversary.vantage_projection(self.scenario.vantages)


def _raster_bounds(scenario: Scenario) -> Rect | None:
    if scenario.bounds is None:
        return None
    lat_min, lat_max, lon_min, lon_max = scenario.bounds
    projection = adversary.vantage_projection(scenario.vantages)
    corners = [projection.to_local(GeoPoint(lat, lon))
               for lat in (lat_min, lat_max) for lon in (lon_min, lon_max)]
    return Rect(min(c.x for c in corners), min(c.y for c in corners),
                max(c.x for c in corners), max(c.y for c in corners))


def run(scenario: Scenario, seed_override: int | None = None) -> RunOutcome:
    """Execute the scenario's attack and measure it against ground truth."""
    server, victim = build_server(scenario, seed_override)
    a = scenario.attack
    if a.kind == "classic":
        report = adversary.classic_trilateration_attack(
            server, scenario.victim_id, scenario.vantages, scenario.now, scenario.cell_size)
    elif a.kind == "neighbor_bound":
        report = adversary.neighbor_bound_attack(
            server, scenario.victim_id, scenario.vantages, scenario.now, scenario.cell_size,
            raster_bounds=_raster_bounds(scenario))
    elif a.kind == "hidden_full":
        report = adversary.hidden_full_attack(
            server, scenario.victim_id, scenario.vantages, a.epsilon, a.max_iter,
            scenario.now, scenario.cell_size)
    else:
        raise ScenarioError(f"$.attack.kind: unknown attack {a.kind!r}")
    report = adversary.fill_true_error(report, victim.true_location)
    return RunOutcome(scenario=scenario, report=report, victim=victim)


def with_seed_offset(scenario: Scenario, offset: int) -> Scenario:
    """Shift the population seed for paired-seed experiment repetitions."""
    if scenario.random_users is None or offset == 0:
        return scenario
    spec = replace(scenario.random_users, seed=scenario.random_users.seed + offset)
    return replace(scenario, random_users=spec)


def with_defense(scenario: Scenario, policy: DefensePolicy) -> Scenario:
    return replace(scenario, defense=policy)


# --- built-in demo: the four coordinate pairs of the reference experiment ---

KYOTO_VICTIM = GeoPoint(35.02350485, 135.77687703)       # university laboratory
KYOTO_VANTAGES = (
    GeoPoint(35.03051251, 135.77327415),                 # Demachi-yanagi Station
    GeoPoint(35.01598257, 135.78242585),                 # Heian Shrine
    GeoPoint(35.02258561, 135.76493382),                 # Kyoto Imperial Palace
)
KYOTO_POPULATION_SEED = 20160418


def kyoto_scenario_doc(attack_kind: str, quantization_step: float = 100.0) -> dict[str, Any]:
    """Built-in demo scenario document for one attack kind.

    Victim plus 50 seeded background users in a 3 km disk, 100 m display
    quantization by default. Who hides the distance depends on the attack:
    nobody for the classic attack, the victim for the passive neighbor-bound
    attack, and everybody for the colluding-account attack.
    """
    if attack_kind not in ("classic", "neighbor_bound", "hidden_full"):
        raise ValueError(f"unknown attack kind {attack_kind!r}")
    victim_hides = attack_kind != "classic"
    everyone_hides = attack_kind == "hidden_full"
    doc: dict[str, Any] = {
        "schema_version": 1,
        "server": {
            "quantization_step": quantization_step,
            "visibility_window": 7200.0,
            "max_results": 100,
            "max_range": 20000.0,
            "ordering": "true_distance",
        },
        "users": {
            "explicit": [{
                "id": "victim",
                "lat": KYOTO_VICTIM.lat,
                "lon": KYOTO_VICTIM.lon,
                "hide_distance": victim_hides,
                "last_login": 0.0,
            }],
            "random": {
                "count": 50,
                "center": {"lat": KYOTO_VICTIM.lat, "lon": KYOTO_VICTIM.lon},
                "radius_m": 3000.0,
                "seed": KYOTO_POPULATION_SEED,
                "hide_distance": everyone_hides,
            },
        },
        "victim_id": "victim",
        "vantages": [{"lat": v.lat, "lon": v.lon} for v in KYOTO_VANTAGES],
        "attack": {"kind": attack_kind},
        "output": {"cell_size": 2.0},
        "now": 0.0,
    }
    if attack_kind == "hidden_full":
        doc["attack"] = {"kind": "hidden_full", "epsilon": 2.0, "max_iter": 64}
    return doc


def kyoto_scenario(attack_kind: str, quantization_step: float = 100.0) -> Scenario:
    return parse_scenario(kyoto_scenario_doc(attack_kind, quantization_step))
