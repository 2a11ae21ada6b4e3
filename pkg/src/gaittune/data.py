"""Phase-normalized stride data: loading, validation, averaging, splitting.

All trajectories live on a fixed 150-point phase grid. Angles are stored in
radians and torques in N·m/kg; the CSV interchange format uses degrees, so
the loader converts on the way in and the writer converts back on the way
out.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    EmptyInputError,
    InsufficientStridesError,
    InsufficientSubjectsError,
    KindMismatchError,
    MissingFileError,
    NonFiniteSampleError,
    SchemaMismatchError,
)

N_PHASE = 150
PHASE_GRID = np.linspace(0.0, 1.0, N_PHASE)
PHASE_STEP = 1.0 / (N_PHASE - 1)

ANGLE = "angle"
VELOCITY = "velocity"
TORQUE = "torque"
SIGNAL_KINDS = (ANGLE, VELOCITY, TORQUE)

JOINTS = ("ankle", "knee", "hip")

CSV_COLUMNS = [
    "subject",
    "task_speed_mps",
    "task_incline_deg",
    "joint",
    "stride_id",
    "stride_duration_s",
    "phase_index",
    "angle_deg",
    "velocity_deg_s",
    "torque_nm_kg",
]

SCHEMA_VERSION = 1


def _freeze(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PhaseSeries:
    """One signal sampled on the canonical 150-point phase grid."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        arr = _freeze(self.values)
        if arr.shape != (N_PHASE,):
            raise ValueError(
                f"expected {N_PHASE} phase samples, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteSampleError(f"non-finite sample at phase index {bad + 1}")
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, order=True)
class Task:
    """A point in the continuous (walking speed, ground incline) task space."""

    speed: float
    incline: float

    def label(self) -> str:
        return f"{self.speed:g}mps_{self.incline:g}deg"


@dataclass(frozen=True, eq=False)
class Stride:
    angle: PhaseSeries
    velocity: PhaseSeries
    torque: PhaseSeries
    duration_s: float
    # original CSV cell values, kept so save_dataset() round-trips bit-exactly
    source_deg: tuple | None = field(default=None, repr=False)

    def series(self, signal: str) -> PhaseSeries:
        if signal not in SIGNAL_KINDS:
            raise KindMismatchError(f"unknown signal kind {signal!r}")
        return getattr(self, signal)


@dataclass(frozen=True, eq=False)
class StrideSet:
    subject: str
    task: Task
    joint: str
    strides: tuple[Stride, ...]

    def __len__(self) -> int:
        return len(self.strides)

    def series(self, signal: str) -> list[PhaseSeries]:
        return [stride.series(signal) for stride in self.strides]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable collection of stride sets keyed by (subject, task, joint)."""

    subjects: tuple[str, ...]
    tasks: tuple[Task, ...]
    strides: dict
    mass_normalized: bool = True

    def stride_set(self, subject: str, task: Task, joint: str) -> StrideSet:
        return self.strides[(subject, task, joint)]

    def get(self, subject: str, task: Task, joint: str) -> StrideSet | None:
        return self.strides.get((subject, task, joint))

    def subjects_at(self, task: Task, joint: str) -> list[str]:
        return [s for s in self.subjects if (s, task, joint) in self.strides]

    def joints(self) -> list[str]:
        present = {key[2] for key in self.strides}
        return [j for j in JOINTS if j in present]


def mean_trajectory(strides: list[PhaseSeries]) -> PhaseSeries:
    """Pointwise arithmetic mean of same-kind series across strides."""
    if not strides:
        raise EmptyInputError("cannot average an empty stride list")
    kind = strides[0].kind
    for s in strides[1:]:
        if s.kind != kind:
            raise KindMismatchError(f"mixed signal kinds {kind!r} and {s.kind!r}")
    stacked = np.stack([s.values for s in strides])
    return PhaseSeries(stacked.mean(axis=0), kind)


def subject_mean(
    dataset: Dataset, subject: str, task: Task, joint: str, signal: str = TORQUE
) -> PhaseSeries:
    """Mean trajectory over one subject's strides at (task, joint)."""
    sset = dataset.get(subject, task, joint)
    if sset is None:
        raise EmptyInputError(f"no strides for {subject} at {task.label()}/{joint}")
    return mean_trajectory(sset.series(signal))


def loo_mean(
    dataset: Dataset,
    exclude_subject: str,
    task: Task,
    joint: str,
    signal: str = TORQUE,
) -> PhaseSeries:
    """Mean of per-subject mean trajectories over everyone but one subject."""
    present = dataset.subjects_at(task, joint)
    if len(present) < 2:
        raise InsufficientSubjectsError(
            f"need at least 2 subjects at {task.label()}/{joint}, found {len(present)}"
        )
    remaining = [s for s in present if s != exclude_subject]
    if not remaining:
        raise InsufficientSubjectsError(
            f"excluding {exclude_subject!r} leaves no subjects at {task.label()}/{joint}"
        )
    per_subject = [subject_mean(dataset, s, task, joint, signal) for s in remaining]
    return mean_trajectory(per_subject)


def grand_mean(
    dataset: Dataset, task: Task, joint: str, signal: str = TORQUE
) -> PhaseSeries:
    """Mean of per-subject mean trajectories over all subjects at (task, joint)."""
    present = dataset.subjects_at(task, joint)
    if not present:
        raise EmptyInputError(f"no subjects at {task.label()}/{joint}")
    per_subject = [subject_mean(dataset, s, task, joint, signal) for s in present]
    return mean_trajectory(per_subject)


def split_strides(strideset: StrideSet, seed: int) -> tuple[StrideSet, StrideSet]:
    """Seeded partition into two disjoint halves; the larger half comes first."""
    n = len(strideset)
    if n < 2:
        raise InsufficientStridesError(f"need at least 2 strides to split, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_first = math.ceil(n / 2)
    first = sorted(perm[:n_first].tolist())
    second = sorted(perm[n_first:].tolist())
    make = lambda idx: StrideSet(
        subject=strideset.subject,
        task=strideset.task,
        joint=strideset.joint,
        strides=tuple(strideset.strides[i] for i in idx),
    )
    return make(first), make(second)


def _central_difference_velocity(angle_rad: np.ndarray, duration_s: float) -> np.ndarray:
    """Phase-grid central differences scaled to rad/s by the stride duration."""
    v = np.gradient(angle_rad, PHASE_STEP)
    return v / duration_s


def load_dataset(path: str, schema_version: int = SCHEMA_VERSION) -> Dataset:
    """Load a phase-normalized stride dataset from its CSV interchange file.

    Angles and angular velocities are converted from degrees to radians on
    load. Strides with an entirely empty velocity column get velocities from
    central differences of the angle over the phase grid, scaled by the
    stride duration.

    Raises
    ------
    MissingFileError
        If ``path`` does not exist.
    SchemaMismatchError
        On an unsupported schema version, wrong column set, or any stride
        without exactly one sample per phase index 1..150.
    NonFiniteSampleError
        If a required numeric cell is NaN or infinite.
    """
    if schema_version != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"unsupported schema version {schema_version}; expected {SCHEMA_VERSION}"
        )
    if not os.path.exists(path):
        raise MissingFileError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise SchemaMismatchError(f"empty dataset file: {path}") from None
    if list(frame.columns) != CSV_COLUMNS:
        raise SchemaMismatchError(
            f"expected columns {CSV_COLUMNS}, found {list(frame.columns)}"
        )
    if len(frame) == 0:
        raise SchemaMismatchError(f"dataset file has a header but no rows: {path}")

    strides: dict = {}
    subjects: list[str] = []
    tasks: set[Task] = set()
    grouped = frame.groupby(
        ["subject", "task_speed_mps", "task_incline_deg", "joint", "stride_id"],
        sort=True,
    )
    collected: dict = {}
    for (subject, speed, incline, joint, stride_id), rows in grouped:
        subject = str(subject)
        label = f"{subject}/{speed:g}mps/{incline:g}deg/{joint}/stride {stride_id}"
        if joint not in JOINTS:
            raise SchemaMismatchError(f"unknown joint {joint!r} in {label}")
        rows = rows.sort_values("phase_index")
        idx = rows["phase_index"].to_numpy()
        if len(rows) != N_PHASE or not np.array_equal(idx, np.arange(1, N_PHASE + 1)):
            raise SchemaMismatchError(
                f"{label}: expected phase indices 1..{N_PHASE}, got {len(rows)} rows"
            )
        for col in ("stride_duration_s", "angle_deg", "torque_nm_kg"):
            vals = rows[col].to_numpy(dtype=float)
            if not np.all(np.isfinite(vals)):
                bad = int(np.flatnonzero(~np.isfinite(vals))[0])
                raise NonFiniteSampleError(
                    f"{label}: non-finite {col} at phase index {bad + 1}"
                )
        duration = float(rows["stride_duration_s"].iloc[0])
        if duration <= 0:
            raise SchemaMismatchError(f"{label}: non-positive stride duration")
        angle_deg = rows["angle_deg"].to_numpy(dtype=float)
        torque = rows["torque_nm_kg"].to_numpy(dtype=float)
        velocity_deg = rows["velocity_deg_s"].to_numpy(dtype=float)
        angle_rad = np.radians(angle_deg)
        if np.all(np.isnan(velocity_deg)):
            velocity_rad = _central_difference_velocity(angle_rad, duration)
            source_velocity = None
        elif np.all(np.isfinite(velocity_deg)):
            velocity_rad = np.radians(velocity_deg)
            source_velocity = velocity_deg
        else:
            bad = int(np.flatnonzero(~np.isfinite(velocity_deg))[0])
            raise NonFiniteSampleError(
                f"{label}: non-finite velocity_deg_s at phase index {bad + 1}"
            )
        stride = Stride(
            angle=PhaseSeries(angle_rad, ANGLE),
            velocity=PhaseSeries(velocity_rad, VELOCITY),
            torque=PhaseSeries(torque, TORQUE),
            duration_s=duration,
            source_deg=(angle_deg, source_velocity),
        )
        task = Task(speed=float(speed), incline=float(incline))
        tasks.add(task)
        if subject not in subjects:
            subjects.append(subject)
        collected.setdefault((subject, task, joint), []).append(stride)

    for key, stride_list in collected.items():
        subject, task, joint = key
        strides[key] = StrideSet(
            subject=subject, task=task, joint=joint, strides=tuple(stride_list)
        )
    return Dataset(
        subjects=tuple(sorted(subjects)),
        tasks=tuple(sorted(tasks)),
        strides=strides,
        mass_normalized=True,
    )


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write a dataset back to the CSV interchange format.

    Strides that came from a CSV keep their original degree-valued cells, so
    load → save → load reproduces the dataset bit-identically. Synthetic
    strides are converted from radians on the way out.
    """
    keys = sorted(dataset.strides.keys(), key=lambda k: (k[0], k[1], k[2]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for key in keys:
            sset = dataset.strides[key]
            subject, task, joint = key
            for stride_idx, stride in enumerate(sset.strides):
                if stride.source_deg is not None:
                    angle_deg, velocity_deg = stride.source_deg
                else:
                    angle_deg = np.degrees(stride.angle.values)
                    velocity_deg = np.degrees(stride.velocity.values)
                for i in range(N_PHASE):
                    vel_cell = "" if velocity_deg is None else repr(float(velocity_deg[i]))
                    writer.writerow(
                        [
                            subject,
                            repr(task.speed),
                            repr(task.incline),
                            joint,
                            stride_idx + 1,
                            repr(stride.duration_s),
                            i + 1,
                            repr(float(angle_deg[i])),
                            vel_cell,
                            repr(float(stride.torque.values[i])),
                        ]
                    )
