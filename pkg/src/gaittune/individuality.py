"""Per-subject deviations from population means and their cross-task transfer.

A subject's individual contribution at a task is the pointwise difference
between their mean trajectory and the leave-one-out population mean. The
level-ground contribution, added to any other task's population mean,
predicts that subject's trajectory there; this module quantifies how well
that prediction holds on held-out strides.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import (
    ANGLE,
    N_PHASE,
    TORQUE,
    Dataset,
    PhaseSeries,
    Task,
    loo_mean,
    mean_trajectory,
    split_strides,
)
from .errors import (
    InsufficientSamplesError,
    KindMismatchError,
    LengthMismatchError,
)

KINEMATIC = "kinematic"
KINETIC = "kinetic"

_KIND_TO_SIGNAL_KIND = {ANGLE: KINEMATIC, TORQUE: KINETIC}


@dataclass(frozen=True, eq=False)
class IndividualContribution:
    """A subject's pointwise deviation from the leave-one-out mean."""

    contribution: PhaseSeries
    subject: str
    task: Task
    joint: str

    @property
    def signal_kind(self) -> str:
        return _KIND_TO_SIGNAL_KIND[self.contribution.kind]


def individual_contribution(
    subject_mean: PhaseSeries,
    loo_mean: PhaseSeries,
    subject: str = "",
    task: Task = Task(0.0, 0.0),
    joint: str = "",
) -> IndividualContribution:
    """Pointwise difference between a subject's mean and the LOO mean."""
    if subject_mean.kind != loo_mean.kind:
        raise KindMismatchError(
            f"cannot subtract {loo_mean.kind!r} from {subject_mean.kind!r}"
        )
    if subject_mean.kind not in _KIND_TO_SIGNAL_KIND:
        raise KindMismatchError(
            f"contributions are defined for angle or torque, not {subject_mean.kind!r}"
        )
    diff = subject_mean.values - loo_mean.values
    return IndividualContribution(
        contribution=PhaseSeries(diff, subject_mean.kind),
        subject=subject,
        task=task,
        joint=joint,
    )


def individualize(
    loo_mean_at_task: PhaseSeries, baseline: IndividualContribution
) -> PhaseSeries:
    """Add the level-ground contribution to another task's LOO mean."""
    if loo_mean_at_task.kind != baseline.contribution.kind:
        raise KindMismatchError(
            f"cannot add {baseline.contribution.kind!r} contribution to "
            f"{loo_mean_at_task.kind!r} mean"
        )
    return PhaseSeries(
        loo_mean_at_task.values + baseline.contribution.values,
        loo_mean_at_task.kind,
    )


def rmse(predicted, observed) -> float:
    """Root mean squared pointwise difference over the phase grid."""
    p = predicted.values if isinstance(predicted, PhaseSeries) else np.asarray(predicted, float)
    o = observed.values if isinstance(observed, PhaseSeries) else np.asarray(observed, float)
    if p.shape != o.shape:
        raise LengthMismatchError(f"shape mismatch {p.shape} vs {o.shape}")
    return float(np.sqrt(np.mean((p - o) ** 2)))


# --- Student-t lower-tail CDF via the regularized incomplete beta -----------

_FPMIN = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz method)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _beta_cf(a, b, x) / a
    return 1.0 - bt * _beta_cf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    half_tail = 0.5 * _reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
    return half_tail if t < 0 else 1.0 - half_tail


def paired_t_one_tailed(a, b) -> tuple[float, float]:
    """Paired t-test of mean(a) < mean(b); returns (t, lower-tail p).

    Zero-variance differences short-circuit by sign: all-identical pairs
    give (0, 0.5), a constant non-zero difference gives p of 0 or 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatchError(f"paired samples differ in shape {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean_d = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        if mean_d == 0.0:
            return 0.0, 0.5
        return (-math.inf, 0.0) if mean_d < 0 else (math.inf, 1.0)
    t = mean_d / (sd / math.sqrt(n))
    return t, student_t_cdf(t, n - 1)


# --- cross-task validation on held-out strides ------------------------------

@dataclass(frozen=True)
class ValidationCell:
    subject: str
    task: Task
    joint: str
    rmse_individualized: float
    rmse_untuned: float

    @property
    def improvement(self) -> float:
        return self.rmse_untuned - self.rmse_individualized


@dataclass(frozen=True)
class JointStats:
    joint: str
    mean_individualized: float
    mean_untuned: float
    mean_improvement: float
    t_stat: float
    p_value: float


@dataclass(frozen=True)
class ValidationReport:
    baseline_task: Task
    seed: int
    cells: tuple[ValidationCell, ...]
    joint_stats: dict = field(default_factory=dict)

    @property
    def improved_fraction(self) -> float:
        """Fraction of (subject, joint) pairs whose mean RMSE improved."""
        pairs: dict = {}
        for cell in self.cells:
            pairs.setdefault((cell.subject, cell.joint), []).append(cell)
        wins = 0
        for group in pairs.values():
            mean_ind = np.mean([c.rmse_individualized for c in group])
            mean_unt = np.mean([c.rmse_untuned for c in group])
            if mean_ind < mean_unt:
                wins += 1
        return wins / len(pairs) if pairs else 0.0

    def subject_table(self) -> dict:
        """Per (method, joint) row of per-subject mean RMSE plus the average."""
        subjects = sorted({c.subject for c in self.cells})
        joints = sorted({c.joint for c in self.cells})
        table: dict = {}
        for method, attr in (
            ("individualized", "rmse_individualized"),
            ("untuned", "rmse_untuned"),
        ):
            for joint in joints:
                row = {}
                for subject in subjects:
                    vals = [
                        getattr(c, attr)
                        for c in self.cells
                        if c.subject == subject and c.joint == joint
                    ]
                    row[subject] = float(np.mean(vals)) if vals else math.nan
                row["average"] = float(
                    np.mean([v for v in row.values() if not math.isnan(v)])
                )
                table[(method, joint)] = row
        return table

    def to_csv(self, path: str) -> None:
        subjects = sorted({c.subject for c in self.cells})
        table = self.subject_table()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("method,joint," + ",".join(subjects) + ",average\n")
            for (method, joint), row in table.items():
                cells = [f"{row[s]:.6f}" for s in subjects] + [f"{row['average']:.6f}"]
                fh.write(f"{method},{joint}," + ",".join(cells) + "\n")

    def to_dict(self) -> dict:
        return {
            "baseline_task": {
                "speed": self.baseline_task.speed,
                "incline": self.baseline_task.incline,
            },
            "seed": self.seed,
            "improved_fraction": self.improved_fraction,
            "cells": [
                {
                    "subject": c.subject,
                    "speed": c.task.speed,
                    "incline": c.task.incline,
                    "joint": c.joint,
                    "rmse_individualized": c.rmse_individualized,
                    "rmse_untuned": c.rmse_untuned,
                    "improvement": c.improvement,
                }
                for c in self.cells
            ],
            "joint_stats": {
                joint: {
                    "mean_individualized": s.mean_individualized,
                    "mean_untuned": s.mean_untuned,
                    "mean_improvement": s.mean_improvement,
                    "t_stat": s.t_stat,
                    "p_value": s.p_value,
                }
                for joint, s in self.joint_stats.items()
            },
        }

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _split_seed(seed: int, subject: str, joint: str, task: Task) -> int:
    key = f"{subject}|{joint}|{task.speed!r}|{task.incline!r}"
    return int(np.random.SeedSequence(
        [seed, abs(hash(key)) % (2**32)]
    ).generate_state(1)[0])


def validate_dataset(
    dataset: Dataset,
    baseline_task: Task,
    seed: int,
    signal: str = TORQUE,
) -> ValidationReport:
    """Quantify cross-task transfer of level-ground individuality.

    For every (subject, task, joint), strides are split in half: the larger
    half at the baseline task estimates the subject's baseline contribution,
    the held-out half at each task gives the observed contribution. The
    baseline prediction is scored against the observed contribution, with
    the all-zero prediction as the untuned benchmark.
    """
    cells: list[ValidationCell] = []
    joints = dataset.joints()
    zero = PhaseSeries(np.zeros(N_PHASE), signal)
    for joint in joints:
        for subject in dataset.subjects:
            base_set = dataset.get(subject, baseline_task, joint)
            if base_set is None:
                continue
            base_half, _ = split_strides(
                base_set, _split_seed(seed, subject, joint, baseline_task)
            )
            base_mean = mean_trajectory(base_half.series(signal))
            base_loo = loo_mean(dataset, subject, baseline_task, joint, signal)
            baseline = individual_contribution(
                base_mean, base_loo, subject, baseline_task, joint
            )
            for task in dataset.tasks:
                sset = dataset.get(subject, task, joint)
                if sset is None:
                    continue
                _, held_out = split_strides(
                    sset, _split_seed(seed, subject, joint, task)
                )
                observed_mean = mean_trajectory(held_out.series(signal))
                task_loo = loo_mean(dataset, subject, task, joint, signal)
                observed = individual_contribution(
                    observed_mean, task_loo, subject, task, joint
                )
                cells.append(
                    ValidationCell(
                        subject=subject,
                        task=task,
                        joint=joint,
                        rmse_individualized=rmse(
                            baseline.contribution, observed.contribution
                        ),
                        rmse_untuned=rmse(zero, observed.contribution),
                    )
                )
    joint_stats: dict = {}
    for joint in joints:
        ind = [c.rmse_individualized for c in cells if c.joint == joint]
        unt = [c.rmse_untuned for c in cells if c.joint == joint]
        if len(ind) < 2:
            continue
        t, p = paired_t_one_tailed(ind, unt)
        joint_stats[joint] = JointStats(
            joint=joint,
            mean_individualized=float(np.mean(ind)),
            mean_untuned=float(np.mean(unt)),
            mean_improvement=float(np.mean(unt) - np.mean(ind)),
            t_stat=t,
            p_value=p,
        )
    return ValidationReport(
        baseline_task=baseline_task,
        seed=seed,
        cells=tuple(cells),
        joint_stats=joint_stats,
    )
