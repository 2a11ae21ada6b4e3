"""Replay recorded motions through a model bundle and compare controllers.

Walking replays command impedance torque over the stance window and the
kinematic reference over swing, using the dataset's normalized phase as
ground truth. Comparison reports quantify tuned-vs-baseline differences in
peak torque, RMS torque, and peak timing.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import N_PHASE, PHASE_GRID, PhaseSeries, Task
from .errors import MissingModelError, OutOfHullWarning, UnmatchedPairsError
from .impedance import ImpedancePolynomials, impedance_torque, poly_eval
from .sitstand import blended_scale, eval_sitstand_torque, phase_from_thigh
from .tuning import ModelBundle


@dataclass(frozen=True, eq=False)
class ReplayResult:
    """Commanded controller outputs for one stride at one task.

    Torque arrays are zero outside the stance window and kinematic
    references are zero outside swing; the two windows partition the cycle
    at the bundle's toe-off phase.
    """

    task: Task
    commanded_torque: dict  # joint -> ndarray(150)
    kinematic_reference: dict  # joint -> ndarray(150)
    toe_off: float
    bundle_digest: str
    handoff_torque_step: dict = field(default_factory=dict)  # joint -> |tau| at toe-off


def _task_grid(tasks: list[Task]) -> tuple[np.ndarray, np.ndarray]:
    speeds = np.array(sorted({t.speed for t in tasks}))
    inclines = np.array(sorted({t.incline for t in tasks}))
    return speeds, inclines


def _bracket(grid: np.ndarray, value: float) -> tuple[int, int, float]:
    """Neighbor indices and interpolation weight, clamped to the grid hull."""
    if value <= grid[0]:
        return 0, 0, 0.0
    if value >= grid[-1]:
        return len(grid) - 1, len(grid) - 1, 0.0
    hi = int(np.searchsorted(grid, value))
    lo = hi - 1
    weight = (value - grid[lo]) / (grid[hi] - grid[lo])
    return lo, hi, float(weight)


def interpolate_impedance(
    bundle: ModelBundle, joint: str, task: Task
) -> ImpedancePolynomials:
    """Bilinear coefficient interpolation over the fitted task grid."""
    key = (joint, task)
    if key in bundle.walking_impedance:
        return bundle.walking_impedance[key]
    tasks = [t for j, t in bundle.walking_impedance if j == joint]
    if not tasks:
        raise MissingModelError(f"no impedance models fitted for joint {joint!r}")
    speeds, inclines = _task_grid(tasks)
    if (
        task.speed < speeds[0]
        or task.speed > speeds[-1]
        or task.incline < inclines[0]
        or task.incline > inclines[-1]
    ):
        warnings.warn(
            f"task {task.label()} outside the fitted grid; clamping",
            OutOfHullWarning,
            stacklevel=2,
        )
    s_lo, s_hi, ws = _bracket(speeds, task.speed)
    i_lo, i_hi, wi = _bracket(inclines, task.incline)

    def node(si: int, ii: int) -> ImpedancePolynomials:
        node_task = Task(float(speeds[si]), float(inclines[ii]))
        try:
            return bundle.walking_impedance[(joint, node_task)]
        except KeyError:
            raise MissingModelError(
                f"impedance grid incomplete: no model at {node_task.label()}/{joint}"
            ) from None

    corners = [
        ((1 - ws) * (1 - wi), node(s_lo, i_lo)),
        (ws * (1 - wi), node(s_hi, i_lo)),
        ((1 - ws) * wi, node(s_lo, i_hi)),
        (ws * wi, node(s_hi, i_hi)),
    ]
    k = sum(w * p.k for w, p in corners)
    e = sum(w * p.e for w, p in corners)
    b = sum(w * p.b for w, p in corners)
    return ImpedancePolynomials(k=k, e=e, b=b, task=task, joint=joint)


def replay_walk(bundle: ModelBundle, stride: dict, task: Task) -> ReplayResult:
    """Command one stride: impedance torque in stance, reference angle in swing.

    ``stride`` maps joint -> (angle PhaseSeries, velocity PhaseSeries).
    """
    stance = PHASE_GRID <= bundle.stance_end
    commanded: dict = {}
    references: dict = {}
    handoff: dict = {}
    for joint, (angle, velocity) in sorted(stride.items()):
        poly = interpolate_impedance(bundle, joint, task)
        K = poly_eval(poly.k, PHASE_GRID)
        E = poly_eval(poly.e, PHASE_GRID)
        B = poly_eval(poly.b, PHASE_GRID)
        torque = impedance_torque(K, E, B, angle.values, velocity.values)
        torque = np.where(stance, torque, 0.0)
        commanded[joint] = torque
        last_stance = int(np.flatnonzero(stance)[-1])
        handoff[joint] = float(abs(torque[last_stance]))
        if joint in bundle.kinematics:
            ref = bundle.kinematics[joint].predict_series(task)
            references[joint] = np.where(stance, 0.0, ref)
        else:
            raise MissingModelError(f"no kinematic model for joint {joint!r}")
    return ReplayResult(
        task=task,
        commanded_torque=commanded,
        kinematic_reference=references,
        toe_off=bundle.stance_end,
        bundle_digest=bundle.digest(),
        handoff_torque_step=handoff,
    )


def replay_sitstand(
    bundle: ModelBundle,
    thigh: np.ndarray,
    knee_angle: np.ndarray,
    knee_velocity: np.ndarray,
    direction: str,
) -> np.ndarray:
    """Commanded knee torque along a recorded sit-stand time series."""
    if bundle.sitstand_model is None:
        raise MissingModelError("bundle has no sit-stand model")
    thigh = np.asarray(thigh, dtype=float)
    knee_angle = np.asarray(knee_angle, dtype=float)
    knee_velocity = np.asarray(knee_velocity, dtype=float)
    out = np.empty(len(thigh))
    for i in range(len(thigh)):
        s = phase_from_thigh(thigh[i], bundle.thigh_sit, bundle.thigh_stand)
        torque = eval_sitstand_torque(
            bundle.sitstand_model, s, knee_angle[i], knee_velocity[i]
        )
        out[i] = torque * (1.0 + blended_scale(s, direction, bundle.schedule))
    return out


@dataclass(frozen=True)
class TaskJointChange:
    peak_torque_change_pct: float
    rms_torque_change: float
    phase_of_peak_shift: float


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Tuned-vs-baseline torque changes per (joint, task)."""

    changes: dict  # (joint, Task) -> TaskJointChange
    sitstand: dict = field(default_factory=dict)  # direction -> peak change pct

    def to_dict(self) -> dict:
        return {
            "walking": [
                {
                    "joint": joint,
                    "speed": task.speed,
                    "incline": task.incline,
                    "peak_torque_change_pct": c.peak_torque_change_pct,
                    "rms_torque_change": c.rms_torque_change,
                    "phase_of_peak_shift": c.phase_of_peak_shift,
                }
                for (joint, task), c in sorted(
                    self.changes.items(), key=lambda kv: (kv[0][0], kv[0][1])
                )
            ],
            "sitstand": {
                direction: {"peak_knee_torque_change_pct": pct}
                for direction, pct in self.sitstand.items()
            },
        }

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _circular_shift(s_new: float, s_old: float) -> float:
    """Phase difference wrapped to [-0.5, 0.5)."""
    return float((s_new - s_old + 0.5) % 1.0 - 0.5)


def compare(
    tuned: list[ReplayResult], baseline: list[ReplayResult]
) -> ComparisonReport:
    """Per-task mean torque changes between two replayed controller variants."""
    if len(tuned) != len(baseline):
        raise UnmatchedPairsError(
            f"{len(tuned)} tuned vs {len(baseline)} baseline replays"
        )
    per_key: dict = {}
    for t, b in zip(tuned, baseline):
        if t.task != b.task:
            raise UnmatchedPairsError(
                f"task mismatch {t.task.label()} vs {b.task.label()}"
            )
        stance = PHASE_GRID <= t.toe_off
        for joint in t.commanded_torque:
            if joint not in b.commanded_torque:
                raise UnmatchedPairsError(f"joint {joint!r} missing from baseline")
            tau_t = t.commanded_torque[joint][stance]
            tau_b = b.commanded_torque[joint][stance]
            peak_t = float(np.max(np.abs(tau_t)))
            peak_b = float(np.max(np.abs(tau_b)))
            peak_pct = 100.0 * (peak_t - peak_b) / peak_b if peak_b > 0 else 0.0
            rms = float(np.sqrt(np.mean((tau_t - tau_b) ** 2)))
            s_grid = PHASE_GRID[stance]
            shift = _circular_shift(
                float(s_grid[np.argmax(np.abs(tau_t))]),
                float(s_grid[np.argmax(np.abs(tau_b))]),
            )
            per_key.setdefault((joint, t.task), []).append((peak_pct, rms, shift))
    changes = {
        key: TaskJointChange(
            peak_torque_change_pct=float(np.mean([v[0] for v in vals])),
            rms_torque_change=float(np.mean([v[1] for v in vals])),
            phase_of_peak_shift=float(np.mean([v[2] for v in vals])),
        )
        for key, vals in per_key.items()
    }
    return ComparisonReport(changes=changes)


def compare_sitstand(tuned: dict, baseline: dict) -> dict:
    """Peak knee torque change per direction between two replayed series."""
    out = {}
    for direction in sorted(tuned):
        if direction not in baseline:
            raise UnmatchedPairsError(f"direction {direction!r} missing from baseline")
        peak_t = float(np.max(np.abs(np.asarray(tuned[direction]))))
        peak_b = float(np.max(np.abs(np.asarray(baseline[direction]))))
        out[direction] = 100.0 * (peak_t - peak_b) / peak_b if peak_b > 0 else 0.0
    return out


def replay_to_rows(result: ReplayResult) -> list[dict]:
    """Long-format rows (task, joint, phase, torque, reference angle)."""
    rows = []
    for joint in sorted(result.commanded_torque):
        torque = result.commanded_torque[joint]
        reference = result.kinematic_reference.get(joint, np.zeros(N_PHASE))
        for i in range(N_PHASE):
            rows.append(
                {
                    "speed": result.task.speed,
                    "incline": result.task.incline,
                    "joint": joint,
                    "phase": float(PHASE_GRID[i]),
                    "commanded_torque": float(torque[i]),
                    "kinematic_reference": float(reference[i]),
                }
            )
    return rows


def replay_to_csv(results: list[ReplayResult], path: str) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "speed",
                "incline",
                "joint",
                "phase",
                "commanded_torque",
                "kinematic_reference",
            ],
        )
        writer.writeheader()
        for result in results:
            writer.writerows(replay_to_rows(result))
