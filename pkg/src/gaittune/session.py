"""Session persistence and the workbench orchestrator.

Storage is plain files under a session directory: profiles as JSON, bundles
as digest-verified JSON archives, and an append-only JSONL session log. The
Workbench owns the current and baseline bundles, serializes regeneration
behind a lock, and computes preview series on demand.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass

import numpy as np

from .config import WorkbenchConfig
from .data import ANGLE, PHASE_GRID, VELOCITY, Dataset, Task, grand_mean, load_dataset
from .errors import (
    DigestMismatchError,
    DirtyBundleError,
    MissingModelError,
    NotFoundError,
    RegenerationInFlightError,
    ValidationFailedError,
    VersionUnsupportedError,
)
from .impedance import FitResult, ImpedancePolynomials
from .kinematics import PhaseTaskKinematics
from .replay import replay_walk
from .sitstand import ScalingSchedule, SitStandModel
from .tuning import (
    ModelBundle,
    TuningProfile,
    build_bundle,
    preset_profile,
    reference_torques,
    regenerate,
)
from .tuning import _ankle_torques  # reference targets for previews

ARCHIVE_FORMAT_VERSION = 1


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _payload_digest(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "profile"


class SessionStore:
    """File-backed storage for profiles and the session log."""

    def __init__(self, root: str):
        self.root = root
        self.profile_dir = os.path.join(root, "profiles")
        self.log_path = os.path.join(root, "session_log.jsonl")
        os.makedirs(self.profile_dir, exist_ok=True)

    # -- profiles -------------------------------------------------------

    def save_profile(self, profile: TuningProfile) -> str:
        profile_id = f"{_slug(profile.name)}-v{profile.version}"
        path = os.path.join(self.profile_dir, f"{profile_id}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(profile.to_dict(), fh, indent=2)
        return profile_id

    def load_profile(self, profile_id: str) -> TuningProfile:
        path = os.path.join(self.profile_dir, f"{profile_id}.json")
        if not os.path.exists(path):
            raise NotFoundError(f"no saved profile with id {profile_id!r}")
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return TuningProfile.from_dict(payload)

    def list_profiles(self) -> list[dict]:
        out = []
        for fname in sorted(os.listdir(self.profile_dir)):
            if not fname.endswith(".json"):
                continue
            with open(os.path.join(self.profile_dir, fname), "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            payload["id"] = fname[: -len(".json")]
            out.append(payload)
        return out

    # -- session log ----------------------------------------------------

    def append_log(self, entry: dict) -> None:
        last = self._last_timestamp()
        entry = dict(entry)
        entry["timestamp"] = max(float(entry.get("timestamp", time.time())), last)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    def read_log(self) -> list[dict]:
        if not os.path.exists(self.log_path):
            return []
        with open(self.log_path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def _last_timestamp(self) -> float:
        entries = self.read_log()
        return float(entries[-1]["timestamp"]) if entries else 0.0


# --- bundle archive ----------------------------------------------------------

def _bundle_payload(bundle: ModelBundle) -> dict:
    fit_metrics = {}
    for (joint, task), fit in sorted(
        bundle.walking_fits.items(), key=lambda kv: (kv[0][0], kv[0][1])
    ):
        fit_metrics[f"{joint}|{task.speed!r}|{task.incline!r}"] = {
            "vaf": fit.vaf,
            "residual_rms": fit.residual_rms,
            "constraint_violation_max": fit.constraint_violation_max,
            "kkt_residual": fit.kkt_residual,
            "n_iterations": fit.n_iterations,
            "ridge_applied": fit.ridge_applied,
        }
    sitstand_fit = None
    if bundle.sitstand_fit is not None:
        fit = bundle.sitstand_fit
        sitstand_fit = {
            "vaf": fit.vaf,
            "residual_rms": fit.residual_rms,
            "constraint_violation_max": fit.constraint_violation_max,
            "kkt_residual": fit.kkt_residual,
            "n_iterations": fit.n_iterations,
            "ridge_applied": fit.ridge_applied,
        }
    return {
        "content": bundle.content_payload(),
        "profile": bundle.profile.to_dict(),
        "vaf_per_joint": bundle.vaf_per_joint,
        "baseline_task": {
            "speed": bundle.baseline_task.speed,
            "incline": bundle.baseline_task.incline,
        },
        "stance_end": bundle.stance_end,
        "thigh_sit": bundle.thigh_sit,
        "thigh_stand": bundle.thigh_stand,
        "revision": bundle.revision,
        "fit_metrics": fit_metrics,
        "sitstand_fit": sitstand_fit,
    }


def export_bundle(bundle: ModelBundle, path: str) -> str:
    """Write a digest-verified archive; returns the archive digest."""
    if bundle.dirty_flags:
        raise DirtyBundleError(
            f"bundle has pending regeneration for {sorted(bundle.dirty_flags)}"
        )
    payload = _bundle_payload(bundle)
    digest = _payload_digest(payload)
    archive = {
        "format_version": ARCHIVE_FORMAT_VERSION,
        "digest": digest,
        "payload": payload,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_canonical(archive))
    return digest


def _parse_model_key(key: str) -> tuple[str, Task]:
    joint, speed, incline = key.split("|")
    return joint, Task(float(speed), float(incline))


def import_bundle(path: str) -> ModelBundle:
    """Load an archive, re-verify its digest, and rebuild the bundle."""
    if not os.path.exists(path):
        raise NotFoundError(f"no bundle archive at {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            archive = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DigestMismatchError(f"archive is not valid JSON: {exc}") from None
    version = archive.get("format_version")
    if version != ARCHIVE_FORMAT_VERSION:
        raise VersionUnsupportedError(
            f"archive format {version!r} unsupported; expected {ARCHIVE_FORMAT_VERSION}"
        )
    payload = archive.get("payload", {})
    if _payload_digest(payload) != archive.get("digest"):
        raise DigestMismatchError("archive digest does not match its payload")

    content = payload["content"]
    walking_impedance = {}
    walking_fits = {}
    for key, coeffs in content["walking_impedance"].items():
        joint, task = _parse_model_key(key)
        poly = ImpedancePolynomials(
            k=np.asarray(coeffs["k"]),
            e=np.asarray(coeffs["e"]),
            b=np.asarray(coeffs["b"]),
            task=task,
            joint=joint,
        )
        walking_impedance[(joint, task)] = poly
        metrics = payload["fit_metrics"].get(key)
        if metrics:
            walking_fits[(joint, task)] = FitResult(polynomials=poly, **metrics)

    kinematics = {
        joint: PhaseTaskKinematics.from_dict(entry)
        for joint, entry in content["kinematics"].items()
    }
    sitstand_model = None
    sitstand_fit = None
    if content["sitstand"] is not None:
        entry = content["sitstand"]
        sitstand_model = SitStandModel(
            k=np.asarray(entry["k"]),
            b=np.asarray(entry["b"]),
            e1=np.asarray(entry["e1"]),
            e2=np.asarray(entry["e2"]),
            joint=entry["joint"],
            relu_lo=entry["relu_lo"],
            relu_hi=entry["relu_hi"],
        )
        if payload["sitstand_fit"] is not None:
            sitstand_fit = FitResult(
                polynomials=ImpedancePolynomials(
                    k=sitstand_model.k,
                    e=sitstand_model.e1,
                    b=sitstand_model.b,
                    task=Task(0.0, 0.0),
                    joint=sitstand_model.joint,
                ),
                **payload["sitstand_fit"],
            )
    schedule = ScalingSchedule(
        sit_to_stand_scale=content["schedule"]["sit_to_stand_scale"],
        stand_to_sit_scale=content["schedule"]["stand_to_sit_scale"],
        blend_width=content["schedule"]["blend_width"],
    )
    return ModelBundle(
        walking_impedance=walking_impedance,
        walking_fits=walking_fits,
        kinematics=kinematics,
        sitstand_model=sitstand_model,
        sitstand_fit=sitstand_fit,
        schedule=schedule,
        profile=TuningProfile.from_dict(payload["profile"]),
        vaf_per_joint=payload["vaf_per_joint"],
        baseline_task=Task(
            payload["baseline_task"]["speed"], payload["baseline_task"]["incline"]
        ),
        stance_end=payload["stance_end"],
        thigh_sit=payload["thigh_sit"],
        thigh_stand=payload["thigh_stand"],
        revision=payload["revision"],
    )


def load_sitstand_reference(path: str):
    """Load a sit-stand reference CSV and return its single knee stride set."""
    dataset = load_dataset(path)
    keys = [key for key in dataset.strides if key[2] == "knee"]
    if len(keys) != 1:
        raise ValidationFailedError(
            f"sit-stand reference must hold exactly one knee stride set, found {len(keys)}"
        )
    return dataset.strides[keys[0]]


# --- the workbench -----------------------------------------------------------

@dataclass(frozen=True)
class RegenerationSummary:
    regenerated: tuple
    wall_time_s: float
    vaf_per_joint: dict
    digest: str
    revision: int


class Workbench:
    """Owns the dataset, config, bundles, and session state."""

    def __init__(
        self,
        dataset: Dataset,
        config: WorkbenchConfig | None = None,
        sitstand_strides=None,
        store: SessionStore | None = None,
    ):
        self.dataset = dataset
        self.config = config or WorkbenchConfig()
        self.sitstand_strides = sitstand_strides
        self.store = store
        self._lock = threading.Lock()
        self._preview_cache: dict = {}
        self.baseline_bundle = build_bundle(
            dataset, TuningProfile.zero(), self.config, sitstand_strides
        )
        self.current = self.baseline_bundle

    # -- regeneration ----------------------------------------------------

    def regenerate(self, profile: TuningProfile, note: str = "") -> RegenerationSummary:
        if not self._lock.acquire(blocking=False):
            raise RegenerationInFlightError("another regeneration is in flight")
        try:
            start = time.perf_counter()
            new_bundle = regenerate(
                self.current, profile, self.dataset, self.config, self.sitstand_strides
            )
            wall = time.perf_counter() - start
            self.current = new_bundle
            summary = RegenerationSummary(
                regenerated=new_bundle.last_regenerated,
                wall_time_s=wall,
                vaf_per_joint=dict(new_bundle.vaf_per_joint),
                digest=new_bundle.digest(),
                revision=new_bundle.revision,
            )
            if self.store is not None:
                self.store.append_log(
                    {
                        "timestamp": time.time(),
                        "profile": profile.to_dict(),
                        "regenerated": list(summary.regenerated),
                        "wall_time_s": wall,
                        "vaf_per_joint": summary.vaf_per_joint,
                        "note": note,
                    }
                )
            return summary
        finally:
            self._lock.release()

    # -- previews ---------------------------------------------------------

    def preview_torques(self, task: Task, joint: str) -> dict:
        """Reference and commanded torque series, tuned vs baseline."""
        if task not in self.dataset.tasks:
            raise NotFoundError(f"task {task.label()} is not in the dataset grid")
        if joint not in self.current.kinematics:
            raise MissingModelError(f"no models for joint {joint!r}")
        key = (self.current.digest(), task, joint)
        if key in self._preview_cache:
            return self._preview_cache[key]

        if joint == "ankle":
            tuned_ref = _ankle_torques(self.dataset, self.current.profile, self.config)[task]
        else:
            tuned_ref = reference_torques(self.dataset, joint)[task]
        baseline_ref = reference_torques(self.dataset, joint)[task]

        stride = {
            joint: (
                grand_mean(self.dataset, task, joint, ANGLE),
                grand_mean(self.dataset, task, joint, VELOCITY),
            )
        }
        tuned_replay = replay_walk(self.current, stride, task)
        baseline_replay = replay_walk(self.baseline_bundle, stride, task)
        payload = {
            "task": {"speed": task.speed, "incline": task.incline},
            "joint": joint,
            "phase": PHASE_GRID.tolist(),
            "reference": {
                "baseline": baseline_ref.values.tolist(),
                "tuned": tuned_ref.values.tolist(),
            },
            "commanded": {
                "baseline": baseline_replay.commanded_torque[joint].tolist(),
                "tuned": tuned_replay.commanded_torque[joint].tolist(),
            },
        }
        self._preview_cache[key] = payload
        return payload

    # -- profiles and presets ----------------------------------------------

    def save_profile(self, profile: TuningProfile) -> str:
        self._require_store()
        return self.store.save_profile(profile)

    def load_profile(self, profile_id: str) -> TuningProfile:
        self._require_store()
        return self.store.load_profile(profile_id)

    def list_profiles(self) -> list[dict]:
        self._require_store()
        return self.store.list_profiles()

    def preset(self, param: str, level: str) -> TuningProfile:
        return preset_profile(param, level)

    def session_log(self) -> list[dict]:
        self._require_store()
        return self.store.read_log()

    def export_current(self, path: str) -> str:
        return export_bundle(self.current, path)

    def _require_store(self):
        if self.store is None:
            raise ValidationFailedError("workbench has no session store configured")
