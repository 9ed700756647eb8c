"""Command-line experiment runner.

Subcommands:

* ``run <scenario.json> [--seed N] [--out DIR]``: execute one scenario,
  write ``report.json`` and ``region.geojson``, print a one-line summary.
* ``demo-kyoto [--out DIR]``: materialize the built-in demo scenario and
  run all three attacks against it.
* ``sweep <scenario.json> --axis NAME --values v1,v2,... --seeds N --out F``:
  rerun the scenario across one parameter axis, one CSV row per cell.

Exit codes: 0 success, 1 invalid input, 2 attack-level failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, scenario as scenario_mod
from .adversary import AttackError, AttackReport, vantage_projection
from .defense import DefensePolicy, Jitter
from .geo import GeoPoint
from .region import export_geojson
from .scenario import Scenario, ScenarioError
from .trilateration import CollinearVantages, InconsistentDistances

SWEEP_AXES = ("population_count", "quantization_step", "jitter_radius", "epsilon")
SWEEP_CSV_HEADER = ("value", "seed", "error_m", "region_area_m2",
                    "queries_used", "account_moves")

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_ATTACK_FAILED = 2


def report_document(scenario: Scenario, report: AttackReport) -> dict:
    est = report.estimate
    return {
        "tool": {"name": "proxileak", "version": __version__},
        "scenario": scenario.doc,
        "report": {
            "attack": scenario.attack.kind,
            "estimate": None if est is None else {"lat": est.lat, "lon": est.lon},
            "error_m": report.error_m,
            "region_area_m2": report.region_area_m2,
            "region_cell_count": report.region.cell_count,
            "region_cell_size_m": report.region.cell_size,
            "queries_used": report.queries_used,
            "account_moves": report.account_moves,
            "converged": report.converged,
            "bounds": [
                {"vantage_x_m": b.vantage.x, "vantage_y_m": b.vantage.y,
                 "lower_m": b.lower, "upper_m": b.upper}
                for b in report.bounds
            ],
        },
    }


def _geojson_points(scenario: Scenario, report: AttackReport,
                    victim_true: GeoPoint) -> list[tuple[str, GeoPoint]]:
    points = [(f"vantage-{i + 1}", v) for i, v in enumerate(scenario.vantages)]
    if report.estimate is not None:
        points.append(("estimate", report.estimate))
    points.append(("victim-true", victim_true))
    return points


def write_outcome(outcome: scenario_mod.RunOutcome, out_dir: Path,
                  prefix: str = "") -> tuple[Path, Path]:
    """Write report JSON + region GeoJSON; returns the two paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / f"{prefix}report.json"
    region_path = out_dir / f"{prefix}region.geojson"
    doc = report_document(outcome.scenario, outcome.report)
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    projection = vantage_projection(outcome.scenario.vantages)
    region_path.write_text(export_geojson(
        outcome.report.region, projection,
        points=_geojson_points(outcome.scenario, outcome.report,
                               outcome.victim.true_location)) + "\n")
    return report_path, region_path


def _summary_line(name: str, report: AttackReport) -> str:
    err = "n/a" if report.error_m is None else f"{report.error_m:.2f}"
    return (f"{name}: error_m={err} area_m2={report.region_area_m2:.1f} "
            f"queries={report.queries_used} moves={report.account_moves} "
            f"converged={report.converged}")


def cmd_run(args) -> int:
    try:
        scn = scenario_mod.load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    try:
        outcome = scenario_mod.run(scn, seed_override=args.seed)
    except (AttackError, CollinearVantages, InconsistentDistances) as exc:
        print(f"attack failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ATTACK_FAILED
    write_outcome(outcome, Path(args.out))
    print(_summary_line(scn.attack.kind, outcome.report))
    return EXIT_OK


def cmd_demo_kyoto(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind in ("classic", "neighbor_bound", "hidden_full"):
        doc = scenario_mod.kyoto_scenario_doc(kind)
        scenario_path = out_dir / f"kyoto_{kind}.scenario.json"
        scenario_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        outcome = scenario_mod.run(scenario_mod.parse_scenario(doc))
        write_outcome(outcome, out_dir, prefix=f"kyoto_{kind}.")
        print(_summary_line(f"kyoto_{kind}", outcome.report))
    return EXIT_OK


def _apply_axis(base: Scenario, axis: str, value: float,
                population_seed: int, jitter_seed: int) -> Scenario:
    scn = base
    if scn.random_users is not None:
        scn = replace(scn, random_users=replace(scn.random_users, seed=population_seed))
    if axis == "population_count":
        if scn.random_users is None:
            raise ScenarioError("sweep axis population_count needs users.random")
        return replace(scn, random_users=replace(scn.random_users, count=int(value)))
    if axis == "quantization_step":
        return replace(scn, server=replace(scn.server, quantization_step=float(value)))
    if axis == "jitter_radius":
        defense = DefensePolicy(hide_distance=scn.defense.hide_distance,
                                shift=Jitter(float(value), jitter_seed))
        return replace(scn, defense=defense)
    if axis == "epsilon":
        return replace(scn, attack=replace(scn.attack, epsilon=float(value)))
    raise ScenarioError(f"unknown sweep axis {axis!r}")


def sweep_rows(base: Scenario, axis: str, values: list[float], seeds: int) -> list[tuple]:
    """One row per (value, repetition): the sweep CSV body, in order."""
    rows = []
    for vi, value in enumerate(values):
        for ri in range(seeds):
            ss = np.random.SeedSequence([base.sweep_seed, vi, ri])
            population_seed, jitter_seed = (int(s) for s in ss.generate_state(2))
            scn = _apply_axis(base, axis, value, population_seed, jitter_seed)
            try:
                outcome = scenario_mod.run(scn)
                report = outcome.report
                error = float("nan") if report.error_m is None else report.error_m
                rows.append((value, ri, error, report.region_area_m2,
                             report.queries_used, report.account_moves))
            except AttackError:
                rows.append((value, ri, float("nan"), float("nan"), 0, 0))
    return rows


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        print(f"unknown axis {args.axis!r}; choose from {', '.join(SWEEP_AXES)}",
              file=sys.stderr)
        return EXIT_INVALID_INPUT
    values = [v for v in args.values.split(",") if v.strip()]
    if not values:
        print("empty values list", file=sys.stderr)
        return EXIT_INVALID_INPUT
    try:
        parsed_values = [float(v) for v in values]
    except ValueError:
        print(f"values must be numbers, got {args.values!r}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    if args.seeds < 1:
        print("--seeds must be >= 1", file=sys.stderr)
        return EXIT_INVALID_INPUT

    try:
        base = scenario_mod.load_scenario(args.scenario)
        rows = sweep_rows(base, args.axis, parsed_values, args.seeds)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow([repr(c) if isinstance(c, float) else c for c in row])
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxileak",
        description="Simulate distance-sorting LBS attacks and defenses.")
    parser.add_argument("--version", action="version", version=f"proxileak {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario", help="path to scenario JSON")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the random-population seed")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_demo = sub.add_parser("demo-kyoto", help="run the built-in demo scenario")
    p_demo.add_argument("--out", default=".", help="output directory")
    p_demo.set_defaults(func=cmd_demo_kyoto)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter axis")
    p_sweep.add_argument("scenario", help="path to scenario JSON")
    p_sweep.add_argument("--axis", required=True,
                         help=f"one of: {', '.join(SWEEP_AXES)}")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", type=int, required=True, help="repetitions per value")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
