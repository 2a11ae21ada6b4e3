"""Workbench configuration: constraint profiles, calibration, thresholds.

Shipped defaults are deliberately conservative placeholders and everything
here can be overridden from a TOML or JSON file.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace

from .data import Task
from .impedance import ConstraintProfile

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WALKING_JOINTS = ("ankle", "knee")


def _default_constraints() -> dict:
    walking = ConstraintProfile.from_scalars(
        k_min=0.2, heel_strike_k_min=1.0, b_min=0.0, b_max=0.15
    )
    neutral_heel = ConstraintProfile.from_scalars(
        k_min=0.2, heel_strike_k_min=0.2, b_min=0.0, b_max=0.15
    )
    return {"ankle": walking, "knee": walking, "sitstand": neutral_heel}


@dataclass(frozen=True)
class WorkbenchConfig:
    baseline_task: Task = Task(1.0, 0.0)
    stance_end: float = 0.6
    constraints: dict = field(default_factory=_default_constraints)
    vaf_floors: dict = field(default_factory=lambda: {"ankle": 0.95, "knee": 0.85})
    relu_lo: float = 0.0
    relu_hi: float = 0.35
    thigh_sit: float = 1.4
    thigh_stand: float = 0.1
    spline_halfwidth: float = 0.12
    task_degrees: dict = field(
        default_factory=lambda: {"knee": (2, 3), "ankle": (2, 2), "hip": (2, 2)}
    )

    @property
    def stance_window(self) -> tuple[float, float]:
        return (0.0, self.stance_end)

    def constraint_profile(self, joint: str) -> ConstraintProfile:
        return self.constraints[joint]

    def with_constraints(self, joint: str, profile: ConstraintProfile) -> "WorkbenchConfig":
        updated = dict(self.constraints)
        updated[joint] = profile
        return replace(self, constraints=updated)


def _parse_constraint(entry: dict) -> ConstraintProfile:
    return ConstraintProfile.from_scalars(
        k_min=entry.get("k_min", 0.2),
        heel_strike_k_min=entry.get("heel_strike_k_min", entry.get("k_min", 0.2)),
        b_min=entry.get("b_min", 0.0),
        b_max=entry.get("b_max", 0.15),
        k_max=entry.get("k_max", 10.0),
    )


def load_config(path: str) -> WorkbenchConfig:
    """Load overrides from a TOML or JSON file on top of the defaults."""
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    cfg = WorkbenchConfig()
    kwargs: dict = {}
    if "baseline_task" in raw:
        bt = raw["baseline_task"]
        kwargs["baseline_task"] = Task(float(bt["speed"]), float(bt["incline"]))
    for key in (
        "stance_end",
        "relu_lo",
        "relu_hi",
        "thigh_sit",
        "thigh_stand",
        "spline_halfwidth",
    ):
        if key in raw:
            kwargs[key] = float(raw[key])
    if "vaf_floors" in raw:
        kwargs["vaf_floors"] = {k: float(v) for k, v in raw["vaf_floors"].items()}
    if "task_degrees" in raw:
        kwargs["task_degrees"] = {
            k: (int(v[0]), int(v[1])) for k, v in raw["task_degrees"].items()
        }
    if "constraints" in raw:
        profiles = dict(_default_constraints())
        for joint, entry in raw["constraints"].items():
            profiles[joint] = _parse_constraint(entry)
        kwargs["constraints"] = profiles
    return replace(cfg, **kwargs)
