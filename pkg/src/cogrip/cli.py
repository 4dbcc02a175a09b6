"""Command-line entry points.

Exit codes: 0 success, 2 planning/verification failure, 3 input/parse failure.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import annotation, pipeline, stability_sim, synthetic
from .correspondence import FeatureMap
from .errors import CogripError, ParseError, PlanStageError
from .executor import run_closed_loop
from .memory_bank import load_manifest
from .stability_sim import BenchmarkResult, GripperParams, RigidObjectModel, grasp_outcome


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """CoG-aware grasp planning toolkit."""


@main.command()
@click.argument("lines_csv", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), default=None, help="Write annotations JSON here.")
def annotate(lines_csv, output):
    """Intersect suspension plumb lines from a CSV of line endpoints.

    CSV rows: image_id,x1,y1,x2,y2 — one row per suspension, two (or more)
    rows per image. Lines are intersected pairwise-first per image.
    """
    groups: dict[str, list] = {}
    try:
        with open(lines_csv, newline="") as f:
            for row in csv.reader(f):
                if not row or row[0].strip().startswith("#") or row[0].strip() == "image_id":
                    continue
                image_id = row[0].strip()
                x1, y1, x2, y2 = (float(c) for c in row[1:5])
                groups.setdefault(image_id, []).append(
                    annotation.PlumbLine.from_segment((x1, y1), (x2, y2))
                )
    except (OSError, ValueError, IndexError) as exc:
        _fail(3, f"{lines_csv}: {exc}")

    results = {}
    for image_id, lines in sorted(groups.items()):
        if len(lines) < 2:
            results[image_id] = {"error": "needs at least two suspension lines"}
            continue
        try:
            ann = annotation.plumb_intersection(lines[0], lines[1])
            results[image_id] = {
                "point": {"u": ann.point[0], "v": ann.point[1]},
                "method": ann.method.value,
                "residual": ann.residual,
            }
        except CogripError as exc:
            results[image_id] = {"error": str(exc)}
    text = json.dumps(results, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text)


@main.command("validate-dataset")
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--expected", type=click.Path(exists=True), default=None, help="JSON {category: count} table.")
def validate_dataset(manifest, expected):
    """Validate a dataset manifest (counts, files, annotation bounds)."""
    expected_counts = None
    if expected:
        try:
            expected_counts = json.loads(Path(expected).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            _fail(3, f"{expected}: {exc}")
    try:
        report = annotation.validate_dataset(manifest, expected_counts)
    except ParseError as exc:
        _fail(3, str(exc))
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if not report.ok:
        sys.exit(3)


@main.command("build-memory")
@click.option("--manifest", type=click.Path(exists=True), default=None, help="Existing manifest to load and normalize.")
@click.option("--synthetic", "use_synthetic", is_flag=True, help="Emit the built-in synthetic demo bank.")
@click.option("--seed", type=int, default=0)
@click.option("-o", "--out", "out_dir", type=click.Path(), required=True)
def build_memory(manifest, use_synthetic, seed, out_dir):
    """Build (or rebuild) a memory bank directory with a JSON manifest."""
    from .memory_bank import save_manifest

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if use_synthetic:
            bank_ctx = synthetic.build_synthetic_bank(seed=seed)
            path = synthetic.write_bank(bank_ctx, out)
        elif manifest:
            bank = load_manifest(manifest)
            path = out / "manifest.json"
            save_manifest(bank, path)
        else:
            _fail(3, "provide --manifest or --synthetic")
    except CogripError as exc:
        _fail(3, str(exc))
    click.echo(f"wrote {path}")


def _load_bank(bank_manifest):
    bank = load_manifest(bank_manifest)
    base = Path(bank_manifest).parent

    def resolver(entry):
        return FeatureMap.load(base / entry.featmap_path)

    return bank, resolver


def _plan_once(scene_dir, bank_manifest, instruction, config):
    scene = pipeline.load_scene(scene_dir)
    bank, resolver = _load_bank(bank_manifest)
    return pipeline.plan(scene, instruction, bank, resolver, config), scene


_config_options = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
    click.option("--k", type=int, default=None),
    click.option("--radius-px", type=float, default=None),
    click.option("--epsilon-px", type=float, default=None),
    click.option("--max-replans", type=int, default=None),
    click.option("--seed", type=int, default=None),
]


def _with_config(fn):
    for opt in reversed(_config_options):
        fn = opt(fn)
    return fn


def _build_config(config_path, k, radius_px, epsilon_px, max_replans, seed):
    return pipeline.PlanConfig.load(
        config_path,
        k=k,
        radius_px=radius_px,
        epsilon_px=epsilon_px,
        max_replans=max_replans,
        seed=seed,
    )


@main.command()
@click.argument("scene_dir", type=click.Path(exists=True))
@click.option("--bank", "bank_manifest", type=click.Path(exists=True), required=True)
@click.option("--instruction", required=True)
@click.option("-o", "--output", type=click.Path(), default=None)
@_with_config
def plan(scene_dir, bank_manifest, instruction, output, config_path, k, radius_px, epsilon_px, max_replans, seed):
    """Plan a grasp for one scene; print (or write) the serialized plan."""
    config = _build_config(config_path, k, radius_px, epsilon_px, max_replans, seed)
    try:
        grasp_plan, _ = _plan_once(scene_dir, bank_manifest, instruction, config)
    except ParseError as exc:
        _fail(3, str(exc))
    except PlanStageError as exc:
        _fail(2, str(exc))
    except CogripError as exc:
        _fail(2, str(exc))
    text = grasp_plan.to_json()
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text)


@main.command("verify-execute")
@click.argument("scene_dir", type=click.Path(exists=True))
@click.option("--bank", "bank_manifest", type=click.Path(exists=True), required=True)
@click.option("--instruction", required=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="Write JSONL transition trace here.")
@_with_config
def verify_execute(scene_dir, bank_manifest, instruction, trace_path, config_path, k, radius_px, epsilon_px, max_replans, seed):
    """Closed-loop run: plan, verify against tracked updates, replan on drift."""
    config = _build_config(config_path, k, radius_px, epsilon_px, max_replans, seed)
    try:
        scene = pipeline.load_scene(scene_dir)
        bank, resolver = _load_bank(bank_manifest)
        observations = [scene.track["reference"]] + list(scene.track.get("updates", []))

        def planner(cycle):
            return pipeline.plan(scene, instruction, bank, resolver, config)

        state, trace = run_closed_loop(
            planner,
            observations,
            cam=scene.intrinsics,
            epsilon_px=config.epsilon_px,
            max_replans=config.max_replans,
        )
    except ParseError as exc:
        _fail(3, str(exc))
    except CogripError as exc:
        _fail(2, str(exc))
    lines = "\n".join(rec.to_json() for rec in trace) + "\n"
    if trace_path:
        Path(trace_path).write_text(lines)
    else:
        click.echo(lines, nl=False)
    click.echo(f"final: {state.stage.value} (replans: {state.replan_count})")
    if state.stage.value != "Execute":
        sys.exit(2)


@main.command()
@click.argument("model_json", type=click.Path(exists=True))
@click.option("--grasp", nargs=2, type=float, required=True, help="Grasp point x y (object frame, meters).")
@click.option("--gripper", "gripper_json", type=click.Path(exists=True), default=None)
def simulate(model_json, grasp, gripper_json):
    """Adjudicate one grasp on a rigid object model."""
    try:
        model = RigidObjectModel.from_dict(json.loads(Path(model_json).read_text()))
        gripper = GripperParams(**json.loads(Path(gripper_json).read_text())) if gripper_json else GripperParams()
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        _fail(3, str(exc))
    try:
        outcome = grasp_outcome(model, grasp, gripper)
    except CogripError as exc:
        _fail(2, str(exc))
    click.echo(
        json.dumps(
            {
                "outcome": outcome.kind.value,
                "required_torque": outcome.required_torque,
                "required_force": outcome.required_force,
            },
            sort_keys=True,
        )
    )


@main.command()
@click.option("--trials", type=int, default=100, help="Trials per policy.")
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=click.Choice(["csv", "table"]), default="table")
@click.option("-o", "--output", type=click.Path(), default=None)
def bench(trials, seed, fmt, output):
    """Run the synthetic stability benchmark over the default policies."""
    result = stability_sim.run_benchmark(trials=trials, seed=seed)
    text = result.to_csv() if fmt == "csv" else pipeline.render_success_table(result)
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("results_csv", type=click.Path(exists=True))
def report(results_csv):
    """Render a benchmark CSV as the success-rate table."""
    try:
        rows = list(csv.DictReader(open(results_csv, newline="")))
    except (OSError, csv.Error) as exc:
        _fail(3, str(exc))
    if not rows:
        _fail(3, f"{results_csv}: no result rows")
    policies, categories = [], []
    result = BenchmarkResult(policies=policies, categories=categories)
    for row in rows:
        policy, category = row["policy"], row["category"]
        if policy not in policies:
            policies.append(policy)
        if category not in categories:
            categories.append(category)
        result.cells[(policy, category)] = [int(row["trials"]), int(row["successes"])]
    click.echo(pipeline.render_success_table(result), nl=False)


if __name__ == "__main__":
    main()
