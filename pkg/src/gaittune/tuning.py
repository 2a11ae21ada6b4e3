"""Clinical tuning parameters and their mapping onto the fitted models.

Five bounded parameters drive everything: heel-strike stiffness scaling on
the knee constraint, a swing-flexion offset spline added to the knee
kinematic training data, a multiplicative push-off spline whose level-ground
effect is propagated additively to every walking task, and per-direction
sit-stand torque scaling. Regeneration diffs the profile and refits only
the affected models.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np

from .config import WALKING_JOINTS, WorkbenchConfig
from .data import (
    ANGLE,
    N_PHASE,
    PHASE_GRID,
    TORQUE,
    VELOCITY,
    Dataset,
    PhaseSeries,
    Stride,
    StrideSet,
    Task,
    grand_mean,
)
from .errors import (
    ConstraintClippedWarning,
    MissingBaselineTaskError,
    OutOfBoundsError,
    RegenerationRejectedError,
    ValidationFailedError,
)
from .impedance import ConstraintProfile, FitResult, ImpedancePolynomials, fit_impedance
from .kinematics import PhaseTaskKinematics, fit_kinematic_model
from .sitstand import ScalingSchedule, SitStandModel, fit_sitstand

PARAM_BOUNDS = {
    "stance_flexion_resistance_pct": (-50.0, 60.0),
    "swing_knee_flexion_deg": (-10.0, 30.0),
    "pushoff_pct": (-50.0, 60.0),
    "sit_to_stand_pct": (-50.0, 50.0),
    "stand_to_sit_pct": (-50.0, 50.0),
}
PARAM_NAMES = tuple(PARAM_BOUNDS)
MAX_SITSTAND_SEPARATION_PCT = 60.0

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"

DEFAULT_SPLINE_HALFWIDTH = 0.12


@dataclass(frozen=True)
class TuningProfile:
    """The five clinician-facing parameters plus persistence metadata."""

    stance_flexion_resistance_pct: float = 0.0
    swing_knee_flexion_deg: float = 0.0
    pushoff_pct: float = 0.0
    sit_to_stand_pct: float = 0.0
    stand_to_sit_pct: float = 0.0
    name: str = "untitled"
    version: int = 1
    created_at: str = ""

    def __post_init__(self):
        for param, (lo, hi) in PARAM_BOUNDS.items():
            value = getattr(self, param)
            if not lo <= value <= hi:
                raise ValidationFailedError(
                    f"{param}={value} outside bounds [{lo}, {hi}]"
                )
        gap = abs(self.sit_to_stand_pct - self.stand_to_sit_pct)
        if gap > MAX_SITSTAND_SEPARATION_PCT:
            raise ValidationFailedError(
                f"sit/stand separation {gap} exceeds {MAX_SITSTAND_SEPARATION_PCT}"
            )
        if not self.created_at:
            object.__setattr__(
                self, "created_at", datetime.now(timezone.utc).isoformat()
            )

    @classmethod
    def zero(cls, name: str = "baseline") -> "TuningProfile":
        return cls(name=name)

    def params(self) -> dict:
        return {param: getattr(self, param) for param in PARAM_NAMES}

    def is_zero(self) -> bool:
        return all(value == 0.0 for value in self.params().values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "created_at": self.created_at,
            "params": self.params(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TuningProfile":
        params = payload.get("params", {})
        unknown = set(params) - set(PARAM_NAMES)
        if unknown:
            raise ValidationFailedError(f"unknown parameters {sorted(unknown)}")
        return cls(
            name=payload.get("name", "untitled"),
            version=int(payload.get("version", 1)),
            created_at=payload.get("created_at", ""),
            **{k: float(v) for k, v in params.items()},
        )


@dataclass(frozen=True, eq=False)
class TuningSpline:
    """A phase-local bump: additive splines are 0 outside their window,
    multiplicative splines are 1."""

    kind: str
    values: np.ndarray
    window: tuple[float, float, float]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (N_PHASE,):
            raise ValueError(f"spline needs {N_PHASE} samples")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _raised_cosine(peak_phase: float, halfwidth: float) -> np.ndarray:
    """Unit bump on the grid: 1 at the peak, C1-smooth, exactly 0 outside."""
    inside = np.abs(PHASE_GRID - peak_phase) <= halfwidth
    bump = np.zeros(N_PHASE)
    bump[inside] = 0.5 * (
        1.0 + np.cos(np.pi * (PHASE_GRID[inside] - peak_phase) / halfwidth)
    )
    return bump


def _snap_to_grid(s: float) -> float:
    return float(PHASE_GRID[int(round(s * (N_PHASE - 1)))])


def build_flexion_spline(
    deg: float,
    peak_phase: float,
    halfwidth: float = DEFAULT_SPLINE_HALFWIDTH,
    swing_window: tuple[float, float] = (0.6, 1.0),
) -> TuningSpline:
    """Additive swing-flexion offset peaking at ``deg`` degrees (stored in rad)."""
    lo, hi = PARAM_BOUNDS["swing_knee_flexion_deg"]
    if not lo <= deg <= hi:
        raise OutOfBoundsError(f"flexion offset {deg} outside [{lo}, {hi}] degrees")
    if not swing_window[0] <= peak_phase <= swing_window[1]:
        raise OutOfBoundsError(
            f"flexion peak {peak_phase} outside the swing window {swing_window}"
        )
    peak = _snap_to_grid(peak_phase)
    values = np.radians(deg) * _raised_cosine(peak, halfwidth)
    return TuningSpline(
        kind=ADDITIVE, values=values, window=(peak - halfwidth, peak, peak + halfwidth)
    )


def build_pushoff_spline(
    pct: float,
    peak_phase: float,
    halfwidth: float = DEFAULT_SPLINE_HALFWIDTH,
) -> TuningSpline:
    """Multiplicative torque scaling peaking at 1 + pct/100; 1 elsewhere."""
    lo, hi = PARAM_BOUNDS["pushoff_pct"]
    if not lo <= pct <= hi:
        raise OutOfBoundsError(f"push-off change {pct} outside [{lo}, {hi}] percent")
    peak = _snap_to_grid(peak_phase)
    values = 1.0 + (pct / 100.0) * _raised_cosine(peak, halfwidth)
    return TuningSpline(
        kind=MULTIPLICATIVE,
        values=values,
        window=(peak - halfwidth, peak, peak + halfwidth),
    )


def propagate_pushoff(
    reference_torques: dict,
    spline: TuningSpline,
    baseline_task: Task,
) -> dict:
    """Scale the baseline torques, isolate the difference, add it to every task."""
    if baseline_task not in reference_torques:
        raise MissingBaselineTaskError(
            f"baseline task {baseline_task.label()} missing from references"
        )
    base = reference_torques[baseline_task]
    base_values = base.values if isinstance(base, PhaseSeries) else np.asarray(base)
    shift = base_values * spline.values - base_values
    out = {}
    for task, series in reference_torques.items():
        values = series.values if isinstance(series, PhaseSeries) else np.asarray(series)
        out[task] = PhaseSeries(values + shift, TORQUE)
    return out


def apply_stance_resistance(
    constraints: ConstraintProfile, pct: float
) -> ConstraintProfile:
    """Scale the heel-strike stiffness floor by (1 + pct/100)."""
    lo, hi = PARAM_BOUNDS["stance_flexion_resistance_pct"]
    if not lo <= pct <= hi:
        raise OutOfBoundsError(f"stance resistance {pct} outside [{lo}, {hi}] percent")
    scaled = constraints.heel_strike_k_min * (1.0 + pct / 100.0)
    if scaled < constraints.k_min[0]:
        warnings.warn(
            "tuned heel-strike floor fell below the general stiffness floor; clipping",
            ConstraintClippedWarning,
            stacklevel=2,
        )
        scaled = float(constraints.k_min[0])
    return constraints.with_heel_strike(scaled)


def preset_profile(param: str, level: str) -> TuningProfile:
    """Profile with one parameter at 80% of its half-range, others zero."""
    if param not in PARAM_BOUNDS:
        raise OutOfBoundsError(f"unknown parameter {param!r}")
    level = level.upper()
    if level not in ("HIGH", "LOW"):
        raise OutOfBoundsError(f"preset level must be HIGH or LOW, got {level!r}")
    lo, hi = PARAM_BOUNDS[param]
    value = 0.8 * (hi if level == "HIGH" else lo)
    return TuningProfile(
        name=f"preset-{param}-{level.lower()}",
        **{param: value},
    )


# --- the model bundle and its regeneration ----------------------------------

MODEL_IDS = (
    "impedance:ankle",
    "impedance:knee",
    "kinematics:ankle",
    "kinematics:knee",
    "sitstand",
)


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Complete exportable controller state for one tuning profile."""

    walking_impedance: dict  # (joint, Task) -> ImpedancePolynomials
    walking_fits: dict  # (joint, Task) -> FitResult
    kinematics: dict  # joint -> PhaseTaskKinematics
    sitstand_model: SitStandModel | None
    sitstand_fit: FitResult | None
    schedule: ScalingSchedule
    profile: TuningProfile
    vaf_per_joint: dict
    baseline_task: Task
    stance_end: float
    thigh_sit: float
    thigh_stand: float
    revision: int = 0
    last_regenerated: tuple = ()
    dirty_flags: frozenset = frozenset()

    def tasks(self) -> list[Task]:
        return sorted({task for _, task in self.walking_impedance})

    def content_payload(self) -> dict:
        """Everything the digest covers: coefficients plus parameter values."""
        impedance = {}
        for (joint, task), poly in sorted(
            self.walking_impedance.items(), key=lambda kv: (kv[0][0], kv[0][1])
        ):
            impedance[f"{joint}|{task.speed!r}|{task.incline!r}"] = {
                "k": poly.k.tolist(),
                "e": poly.e.tolist(),
                "b": poly.b.tolist(),
            }
        payload = {
            "walking_impedance": impedance,
            "kinematics": {
                joint: model.to_dict() for joint, model in sorted(self.kinematics.items())
            },
            "sitstand": None,
            "schedule": {
                "sit_to_stand_scale": self.schedule.sit_to_stand_scale,
                "stand_to_sit_scale": self.schedule.stand_to_sit_scale,
                "blend_width": self.schedule.blend_width,
            },
            "profile_params": self.profile.params(),
        }
        if self.sitstand_model is not None:
            m = self.sitstand_model
            payload["sitstand"] = {
                "k": m.k.tolist(),
                "b": m.b.tolist(),
                "e1": m.e1.tolist(),
                "e2": m.e2.tolist(),
                "joint": m.joint,
                "relu_lo": m.relu_lo,
                "relu_hi": m.relu_hi,
            }
        return payload

    def digest(self) -> str:
        blob = json.dumps(self.content_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _reference_strideset(
    dataset: Dataset, task: Task, joint: str, torque: PhaseSeries
) -> StrideSet:
    """One-stride set carrying the task's mean kinematics and a reference torque."""
    angle = grand_mean(dataset, task, joint, ANGLE)
    velocity = grand_mean(dataset, task, joint, VELOCITY)
    duration = dataset.stride_set(
        dataset.subjects_at(task, joint)[0], task, joint
    ).strides[0].duration_s
    stride = Stride(angle=angle, velocity=velocity, torque=torque, duration_s=duration)
    return StrideSet(subject="reference", task=task, joint=joint, strides=(stride,))


def _walking_tasks(dataset: Dataset, joint: str) -> list[Task]:
    return sorted(t for t in dataset.tasks if dataset.subjects_at(t, joint))


def reference_torques(dataset: Dataset, joint: str) -> dict:
    return {
        task: grand_mean(dataset, task, joint, TORQUE)
        for task in _walking_tasks(dataset, joint)
    }


def detect_pushoff_peak(
    dataset: Dataset, baseline_task: Task, stance_end: float, joint: str = "ankle"
) -> float:
    """Phase of the largest baseline torque magnitude inside stance."""
    torque = grand_mean(dataset, baseline_task, joint, TORQUE).values
    mask = PHASE_GRID <= stance_end
    idx = int(np.argmax(np.abs(torque[mask])))
    return float(PHASE_GRID[mask][idx])


def detect_flexion_peak(
    dataset: Dataset, baseline_task: Task, stance_end: float, joint: str = "knee"
) -> float:
    """Phase of peak mean knee flexion inside the swing window."""
    angle = grand_mean(dataset, baseline_task, joint, ANGLE).values
    mask = PHASE_GRID >= stance_end
    idx = int(np.argmax(np.abs(angle[mask])))
    return float(PHASE_GRID[mask][idx])


def _fit_walking_impedance(
    dataset: Dataset,
    joint: str,
    torques: dict,
    constraints: ConstraintProfile,
    stance_window: tuple[float, float],
) -> tuple[dict, dict]:
    polynomials: dict = {}
    fits: dict = {}
    for task in _walking_tasks(dataset, joint):
        sset = _reference_strideset(dataset, task, joint, torques[task])
        result = fit_impedance(sset, constraints, stance_window)
        polynomials[(joint, task)] = result.polynomials
        fits[(joint, task)] = result
    return polynomials, fits


def _schedule_from_profile(profile: TuningProfile) -> ScalingSchedule:
    return ScalingSchedule(
        sit_to_stand_scale=profile.sit_to_stand_pct / 100.0,
        stand_to_sit_scale=profile.stand_to_sit_pct / 100.0,
    )


def _flexion_overrides(
    dataset: Dataset, profile: TuningProfile, config: WorkbenchConfig
) -> dict | None:
    if profile.swing_knee_flexion_deg == 0.0:
        return None
    peak = detect_flexion_peak(dataset, config.baseline_task, config.stance_end)
    spline = build_flexion_spline(
        profile.swing_knee_flexion_deg,
        peak,
        halfwidth=config.spline_halfwidth,
        swing_window=(config.stance_end, 1.0),
    )
    return {task: spline.values for task in _walking_tasks(dataset, "knee")}


def _ankle_torques(
    dataset: Dataset, profile: TuningProfile, config: WorkbenchConfig
) -> dict:
    torques = reference_torques(dataset, "ankle")
    if profile.pushoff_pct == 0.0:
        return torques
    peak = detect_pushoff_peak(dataset, config.baseline_task, config.stance_end)
    spline = build_pushoff_spline(
        profile.pushoff_pct, peak, halfwidth=config.spline_halfwidth
    )
    return propagate_pushoff(torques, spline, config.baseline_task)


def _knee_constraints(profile: TuningProfile, config: WorkbenchConfig) -> ConstraintProfile:
    return apply_stance_resistance(
        config.constraint_profile("knee"), profile.stance_flexion_resistance_pct
    )


def _min_vaf(fits: dict, joint: str) -> float:
    vals = [fit.vaf for (j, _), fit in fits.items() if j == joint]
    return float(min(vals)) if vals else float("nan")


def build_bundle(
    dataset: Dataset,
    profile: TuningProfile,
    config: WorkbenchConfig | None = None,
    sitstand_strides: StrideSet | None = None,
) -> ModelBundle:
    """Fit every model for the given profile from scratch."""
    config = config or WorkbenchConfig()
    window = config.stance_window

    polynomials: dict = {}
    fits: dict = {}
    for joint in WALKING_JOINTS:
        if not _walking_tasks(dataset, joint):
            continue
        if joint == "ankle":
            torques = _ankle_torques(dataset, profile, config)
            constraints = config.constraint_profile("ankle")
        else:
            torques = reference_torques(dataset, joint)
            constraints = _knee_constraints(profile, config)
        poly, fit = _fit_walking_impedance(dataset, joint, torques, constraints, window)
        polynomials.update(poly)
        fits.update(fit)

    kinematics: dict = {}
    for joint in WALKING_JOINTS:
        if not _walking_tasks(dataset, joint):
            continue
        overrides = _flexion_overrides(dataset, profile, config) if joint == "knee" else None
        degrees = config.task_degrees.get(joint, (2, 2))
        kinematics[joint] = fit_kinematic_model(
            dataset,
            joint,
            training_overrides=overrides,
            speed_degree=degrees[0],
            incline_degree=degrees[1],
        )

    schedule = _schedule_from_profile(profile)
    sitstand_model = None
    sitstand_fit = None
    if sitstand_strides is not None:
        sitstand_model, sitstand_fit = fit_sitstand(
            sitstand_strides,
            config.constraint_profile("sitstand"),
            relu_lo=config.relu_lo,
            relu_hi=config.relu_hi,
        )

    vaf_per_joint = {j: _min_vaf(fits, j) for j in WALKING_JOINTS if _walking_tasks(dataset, j)}
    if sitstand_fit is not None:
        vaf_per_joint["sitstand"] = sitstand_fit.vaf

    return ModelBundle(
        walking_impedance=polynomials,
        walking_fits=fits,
        kinematics=kinematics,
        sitstand_model=sitstand_model,
        sitstand_fit=sitstand_fit,
        schedule=schedule,
        profile=profile,
        vaf_per_joint=vaf_per_joint,
        baseline_task=config.baseline_task,
        stance_end=config.stance_end,
        thigh_sit=config.thigh_sit,
        thigh_stand=config.thigh_stand,
    )


def changed_models(old: TuningProfile, new: TuningProfile) -> list[str]:
    """Model ids whose inputs differ between two profiles."""
    ids = []
    if old.stance_flexion_resistance_pct != new.stance_flexion_resistance_pct:
        ids.append("impedance:knee")
    if old.pushoff_pct != new.pushoff_pct:
        ids.append("impedance:ankle")
    if old.swing_knee_flexion_deg != new.swing_knee_flexion_deg:
        ids.append("kinematics:knee")
    if (
        old.sit_to_stand_pct != new.sit_to_stand_pct
        or old.stand_to_sit_pct != new.stand_to_sit_pct
    ):
        ids.append("sitstand")
    return ids


def regenerate(
    bundle: ModelBundle,
    new_profile: TuningProfile,
    dataset: Dataset,
    config: WorkbenchConfig | None = None,
    sitstand_strides: StrideSet | None = None,
) -> ModelBundle:
    """Refit only the models affected by the profile change.

    Untouched models are carried over bit-identically. Raises
    RegenerationRejectedError if any refit model's fit quality falls below
    the configured floor for its joint.
    """
    config = config or WorkbenchConfig()
    to_refit = changed_models(bundle.profile, new_profile)

    polynomials = dict(bundle.walking_impedance)
    fits = dict(bundle.walking_fits)
    kinematics = dict(bundle.kinematics)
    sitstand_model = bundle.sitstand_model
    sitstand_fit = bundle.sitstand_fit
    schedule = bundle.schedule

    for joint in WALKING_JOINTS:
        model_id = f"impedance:{joint}"
        if model_id not in to_refit or not _walking_tasks(dataset, joint):
            continue
        if joint == "ankle":
            torques = _ankle_torques(dataset, new_profile, config)
            constraints = config.constraint_profile("ankle")
        else:
            torques = reference_torques(dataset, joint)
            constraints = _knee_constraints(new_profile, config)
        poly, fit = _fit_walking_impedance(
            dataset, joint, torques, constraints, config.stance_window
        )
        polynomials.update(poly)
        fits.update(fit)
        floor = config.vaf_floors.get(joint)
        if floor is not None and _min_vaf(fit, joint) < floor:
            raise RegenerationRejectedError(
                f"{joint} impedance fit quality {_min_vaf(fit, joint):.3f} "
                f"fell below the {floor:.2f} floor"
            )

    if "kinematics:knee" in to_refit and _walking_tasks(dataset, "knee"):
        degrees = config.task_degrees.get("knee", (2, 2))
        kinematics["knee"] = fit_kinematic_model(
            dataset,
            "knee",
            training_overrides=_flexion_overrides(dataset, new_profile, config),
            speed_degree=degrees[0],
            incline_degree=degrees[1],
        )

    if "sitstand" in to_refit:
        schedule = _schedule_from_profile(new_profile)
        if sitstand_strides is not None:
            sitstand_model, sitstand_fit = fit_sitstand(
                sitstand_strides,
                config.constraint_profile("sitstand"),
                relu_lo=config.relu_lo,
                relu_hi=config.relu_hi,
            )

    vaf_per_joint = {
        j: _min_vaf(fits, j) for j in WALKING_JOINTS if _walking_tasks(dataset, j)
    }
    if sitstand_fit is not None:
        vaf_per_joint["sitstand"] = sitstand_fit.vaf

    return replace(
        bundle,
        walking_impedance=polynomials,
        walking_fits=fits,
        kinematics=kinematics,
        sitstand_model=sitstand_model,
        sitstand_fit=sitstand_fit,
        schedule=schedule,
        profile=new_profile,
        vaf_per_joint=vaf_per_joint,
        revision=bundle.revision + 1,
        last_regenerated=tuple(to_refit),
    )
