"""Command-line interface mirroring the HTTP API."""

from __future__ import annotations

import json
import os
import time

import click
import numpy as np

from .config import WorkbenchConfig, load_config
from .data import ANGLE, VELOCITY, Task, grand_mean, load_dataset
from .demo import generate_demo_session
from .individuality import validate_dataset
from .replay import compare, replay_to_csv, replay_walk
from .session import (
    SessionStore,
    Workbench,
    export_bundle,
    import_bundle,
    load_sitstand_reference,
)
from .tuning import PARAM_NAMES, TuningProfile, build_bundle, preset_profile
from .tuning import regenerate as regenerate_bundle

STORAGE_ENV = "GAITTUNE_STORAGE"


def _load_cfg(config_path: str | None) -> WorkbenchConfig:
    return load_config(config_path) if config_path else WorkbenchConfig()


def _parse_task(raw: str) -> Task:
    speed, incline = (float(part) for part in raw.split(","))
    return Task(speed, incline)


def _storage_root(cli_value: str | None) -> str:
    root = cli_value or os.environ.get(STORAGE_ENV) or os.path.join(os.getcwd(), "session")
    os.makedirs(root, exist_ok=True)
    return root


@click.group()
def main():
    """Synthesize, tune, and replay continuous-phase prosthesis controllers."""


@main.command()
@click.argument("out_dir", type=click.Path())
@click.option("--subjects", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
def demo(out_dir, subjects, seed):
    """Generate a synthetic demo session (walking + sit-stand CSVs)."""
    paths = generate_demo_session(out_dir, n_subjects=subjects, seed=seed)
    click.echo(json.dumps(paths, indent=2))


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--sitstand", "sitstand_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--profile", "profile_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), help="Export the bundle archive here.")
def fit(dataset_path, sitstand_path, config_path, profile_path, out_path):
    """Fit a full model bundle from a dataset."""
    dataset = load_dataset(dataset_path)
    cfg = _load_cfg(config_path)
    sitstand = load_sitstand_reference(sitstand_path) if sitstand_path else None
    profile = TuningProfile.zero()
    if profile_path:
        with open(profile_path, "r", encoding="utf-8") as fh:
            profile = TuningProfile.from_dict(json.load(fh))
    bundle = build_bundle(dataset, profile, cfg, sitstand)
    click.echo(f"fitted {len(bundle.walking_impedance)} impedance models")
    for joint, value in sorted(bundle.vaf_per_joint.items()):
        click.echo(f"  vaf[{joint}] = {value:.4f}")
    if out_path:
        digest = export_bundle(bundle, out_path)
        click.echo(f"exported {out_path} ({digest[:12]})")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--baseline-speed", default=1.0, show_default=True)
@click.option("--baseline-incline", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path())
@click.option("--json", "json_path", type=click.Path())
def validate(dataset_path, baseline_speed, baseline_incline, seed, csv_path, json_path):
    """Cross-task validation of level-ground individuality on held-out strides."""
    dataset = load_dataset(dataset_path)
    report = validate_dataset(dataset, Task(baseline_speed, baseline_incline), seed)
    for joint, stats in sorted(report.joint_stats.items()):
        click.echo(
            f"{joint}: individualized {stats.mean_individualized:.4f} "
            f"vs untuned {stats.mean_untuned:.4f} N·m/kg "
            f"(improvement {stats.mean_improvement:+.4f}, p={stats.p_value:.4g})"
        )
    click.echo(f"improved pairs: {report.improved_fraction:.0%}")
    if csv_path:
        report.to_csv(csv_path)
        click.echo(f"wrote {csv_path}")
    if json_path:
        report.to_json(json_path)
        click.echo(f"wrote {json_path}")


@main.command()
@click.option("--param", required=True, type=click.Choice(PARAM_NAMES))
@click.option("--value", required=True, type=float)
@click.option("--profile", "profile_path", type=click.Path(), help="Profile JSON to edit.")
@click.option("--out", "out_path", type=click.Path(), help="Where to write; defaults to --profile.")
@click.option("--name", default=None, help="Rename the profile.")
def tune(param, value, profile_path, out_path, name):
    """Set one clinical parameter in a profile file (bounds enforced)."""
    if profile_path and os.path.exists(profile_path):
        with open(profile_path, "r", encoding="utf-8") as fh:
            base = TuningProfile.from_dict(json.load(fh))
    else:
        base = TuningProfile.zero()
    params = base.params()
    params[param] = value
    profile = TuningProfile(
        name=name or base.name,
        version=base.version + 1 if profile_path and os.path.exists(profile_path) else base.version,
        **params,
    )
    target = out_path or profile_path
    if not target:
        raise click.UsageError("provide --out or --profile to write the result")
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(profile.to_dict(), fh, indent=2)
    click.echo(f"{param} = {value} -> {target}")


@main.command()
@click.option("--param", required=True)
@click.option("--level", required=True, type=click.Choice(["HIGH", "LOW"], case_sensitive=False))
@click.option("--out", "out_path", type=click.Path())
def preset(param, level, out_path):
    """Print (or save) a preset profile at 80% of the parameter's half-range."""
    profile = preset_profile(param, level)
    blob = json.dumps(profile.to_dict(), indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(blob)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(blob)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--sitstand", "sitstand_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def regenerate(dataset_path, bundle_path, profile_path, sitstand_path, config_path, out_path):
    """Refit only the models affected by a profile change."""
    dataset = load_dataset(dataset_path)
    cfg = _load_cfg(config_path)
    bundle = import_bundle(bundle_path)
    with open(profile_path, "r", encoding="utf-8") as fh:
        profile = TuningProfile.from_dict(json.load(fh))
    sitstand = load_sitstand_reference(sitstand_path) if sitstand_path else None
    start = time.perf_counter()
    new_bundle = regenerate_bundle(bundle, profile, dataset, cfg, sitstand)
    wall = time.perf_counter() - start
    digest = export_bundle(new_bundle, out_path)
    click.echo(f"regenerated {list(new_bundle.last_regenerated)} in {wall:.2f}s")
    for joint, value in sorted(new_bundle.vaf_per_joint.items()):
        click.echo(f"  vaf[{joint}] = {value:.4f}")
    click.echo(f"exported {out_path} ({digest[:12]})")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--baseline-bundle", "baseline_path", type=click.Path(exists=True))
@click.option("--task", "task_str", required=True, help="speed,incline e.g. 1.0,0.0")
@click.option("--csv", "csv_path", type=click.Path())
@click.option("--json", "json_path", type=click.Path())
def simulate(dataset_path, bundle_path, baseline_path, task_str, csv_path, json_path):
    """Replay the dataset's mean stride through a bundle at one task."""
    dataset = load_dataset(dataset_path)
    bundle = import_bundle(bundle_path)
    task = _parse_task(task_str)
    stride = {
        joint: (
            grand_mean(dataset, task, joint, ANGLE),
            grand_mean(dataset, task, joint, VELOCITY),
        )
        for joint in bundle.kinematics
    }
    result = replay_walk(bundle, stride, task)
    for joint, torque in sorted(result.commanded_torque.items()):
        peak = float(np.max(np.abs(torque)))
        click.echo(f"{joint}: peak commanded torque {peak:.3f} N·m/kg")
    if csv_path:
        replay_to_csv([result], csv_path)
        click.echo(f"wrote {csv_path}")
    if baseline_path:
        baseline = import_bundle(baseline_path)
        report = compare([result], [replay_walk(baseline, stride, task)])
        blob = report.to_dict()
        click.echo(json.dumps(blob, indent=2))
        if json_path:
            with open(json_path, "w", encoding="utf-8") as fh:
                json.dump(blob, fh, indent=2)
            click.echo(f"wrote {json_path}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def export(bundle_path, out_path):
    """Re-export a bundle archive (verifies its digest on load)."""
    bundle = import_bundle(bundle_path)
    digest = export_bundle(bundle, out_path)
    click.echo(f"exported {out_path} ({digest[:12]})")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--sitstand", "sitstand_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--storage", "storage_path", type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(dataset_path, sitstand_path, config_path, storage_path, host, port):
    """Run the HTTP API for the tuning UI."""
    import uvicorn

    from .service import create_app

    dataset = load_dataset(dataset_path)
    cfg = _load_cfg(config_path)
    sitstand = load_sitstand_reference(sitstand_path) if sitstand_path else None
    store = SessionStore(_storage_root(storage_path))
    workbench = Workbench(dataset, cfg, sitstand, store)
    uvicorn.run(create_app(workbench), host=host, port=port)


if __name__ == "__main__":
    main()
