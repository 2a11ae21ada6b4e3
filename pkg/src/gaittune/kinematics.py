"""Continuous phase/task joint kinematics for swing control.

Joint angle over the cycle is a sum of periodic phase basis functions
(finite Fourier series of degree 10) weighted by task functions (Bernstein
polynomials over normalized speed and incline). The model is fit over the
full cycle to keep periodicity exact; the controller consumes only the
swing window.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .data import ANGLE, N_PHASE, PHASE_GRID, Dataset, PhaseSeries, Task, grand_mean
from .errors import (
    OutOfHullWarning,
    PhaseOutOfRangeError,
    RankDeficientTaskGridError,
)

FOURIER_DEGREE = 10
N_FOURIER = 2 * FOURIER_DEGREE + 1

DEFAULT_TASK_DEGREES = {"knee": (2, 3), "ankle": (2, 2), "hip": (2, 2)}


def fourier_features(s) -> np.ndarray:
    """Rows [1, cos(2*pi*k*s).., sin(2*pi*k*s)..] for k = 1..10.

    Phase is wrapped modulo 1 before evaluation, so s = 0 and s = 1 produce
    identical rows and periodicity holds exactly.
    """
    s = np.mod(np.atleast_1d(np.asarray(s, dtype=float)), 1.0)
    angles = 2.0 * np.pi * np.outer(s, np.arange(1, FOURIER_DEGREE + 1))
    return np.hstack([np.ones((len(s), 1)), np.cos(angles), np.sin(angles)])


def bernstein_basis(x, degree: int) -> np.ndarray:
    """Rows of the degree-d Bernstein basis C(d,j) x^j (1-x)^(d-j)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j = np.arange(degree + 1)
    coeffs = np.array([math.comb(degree, int(jj)) for jj in j], dtype=float)
    return coeffs * np.power.outer(x, j) * np.power.outer(1.0 - x, degree - j)


def eval_bernstein(coeffs, x):
    """Evaluate a Bernstein polynomial; x outside [0, 1] is clamped with a warning."""
    coeffs = np.asarray(coeffs, dtype=float)
    scalar = np.isscalar(x) or np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        warnings.warn(
            "Bernstein input outside [0, 1]; clamping", OutOfHullWarning, stacklevel=2
        )
        arr = np.clip(arr, 0.0, 1.0)
    out = bernstein_basis(arr, len(coeffs) - 1) @ coeffs
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class TaskNormalizer:
    """Affine map of (speed, incline) onto the unit square of the training hull."""

    speed_lo: float
    speed_hi: float
    incline_lo: float
    incline_hi: float

    @classmethod
    def from_tasks(cls, tasks) -> "TaskNormalizer":
        speeds = [t.speed for t in tasks]
        inclines = [t.incline for t in tasks]
        return cls(min(speeds), max(speeds), min(inclines), max(inclines))

    def _axis(self, value, lo, hi):
        if hi == lo:
            return np.full_like(np.atleast_1d(np.asarray(value, float)), 0.5)
        return (np.atleast_1d(np.asarray(value, float)) - lo) / (hi - lo)

    def normalize(self, speed, incline, clamp: bool = True):
        u = self._axis(speed, self.speed_lo, self.speed_hi)
        v = self._axis(incline, self.incline_lo, self.incline_hi)
        if clamp:
            outside = np.any((u < 0) | (u > 1) | (v < 0) | (v > 1))
            if outside:
                warnings.warn(
                    "task outside the training hull; clamping",
                    OutOfHullWarning,
                    stacklevel=2,
                )
            u = np.clip(u, 0.0, 1.0)
            v = np.clip(v, 0.0, 1.0)
        return u, v

    def to_dict(self) -> dict:
        return {
            "speed_lo": self.speed_lo,
            "speed_hi": self.speed_hi,
            "incline_lo": self.incline_lo,
            "incline_hi": self.incline_hi,
        }


class PhaseTaskKinematics(BaseEstimator, RegressorMixin):
    """Periodic phase bases weighted by Bernstein task polynomials.

    Parameters
    ----------
    joint : str
        Controlled joint; selects the default task polynomial degrees.
    speed_degree, incline_degree : int, optional
        Bernstein degree per task axis. Defaults come from the joint.
    variance_keep : float
        Fraction of coefficient variance retained when truncating the
        number of phase bases.

    Attributes
    ----------
    fourier_coeffs_ : ndarray of shape (n_bases, 21)
        Per-basis Fourier coefficients, ordered a0, a1..a10, b1..b10.
    task_coeffs_ : ndarray of shape (n_bases, n_task_terms)
        Per-basis Bernstein tensor coefficients (speed-major).
    n_bases_ : int
    normalizer_ : TaskNormalizer
    train_vaf_ : dict mapping Task -> float
    """

    def __init__(
        self,
        joint: str = "knee",
        speed_degree: int | None = None,
        incline_degree: int | None = None,
        variance_keep: float = 0.999,
    ):
        self.joint = joint
        self.speed_degree = speed_degree
        self.incline_degree = incline_degree
        self.variance_keep = variance_keep

    def _degrees(self) -> tuple[int, int]:
        default = DEFAULT_TASK_DEGREES.get(self.joint, (2, 2))
        ds = self.speed_degree if self.speed_degree is not None else default[0]
        di = self.incline_degree if self.incline_degree is not None else default[1]
        return ds, di

    def _task_features(self, tasks, clamp: bool = True) -> np.ndarray:
        ds, di = self._degrees()
        speeds = np.array([t.speed for t in tasks])
        inclines = np.array([t.incline for t in tasks])
        u, v = self.normalizer_.normalize(speeds, inclines, clamp=clamp)
        Bu = bernstein_basis(u, ds)
        Bv = bernstein_basis(v, di)
        # speed-major tensor product: column (i, j) -> Bu[:, i] * Bv[:, j]
        return (Bu[:, :, None] * Bv[:, None, :]).reshape(len(tasks), -1)

    def fit(self, tasks, trajectories):
        """Fit to per-task trajectories sampled on the 150-point grid.

        Raises
        ------
        RankDeficientTaskGridError
            If the task grid cannot identify the requested Bernstein
            degrees (fewer distinct values than degree + 1 on an axis).
        """
        tasks = list(tasks)
        Y = np.asarray(trajectories, dtype=float)
        if Y.shape != (len(tasks), N_PHASE):
            raise ValueError(f"trajectories must be (n_tasks, {N_PHASE})")
        self.normalizer_ = TaskNormalizer.from_tasks(tasks)
        T = self._task_features(tasks, clamp=False)
        if np.linalg.matrix_rank(T) < T.shape[1]:
            ds, di = self._degrees()
            raise RankDeficientTaskGridError(
                f"task grid cannot identify Bernstein degrees ({ds}, {di}); "
                f"need at least degree+1 distinct values per axis"
            )
        F = fourier_features(PHASE_GRID)
        # separable least squares: phase direction first, then task direction
        M = np.linalg.lstsq(F, Y.T, rcond=None)[0]  # (21, n_tasks)
        C = np.linalg.lstsq(T, M.T, rcond=None)[0].T  # (21, n_terms)

        U, sigma, Vt = np.linalg.svd(C, full_matrices=False)
        energy = np.cumsum(sigma**2)
        total = energy[-1] if energy.size else 0.0
        if total <= 0.0:
            n_bases = 1
        else:
            n_bases = int(np.searchsorted(energy, self.variance_keep * total) + 1)
            n_bases = min(n_bases, len(sigma))
        self.n_bases_ = n_bases
        self.fourier_coeffs_ = (U[:, :n_bases] * sigma[:n_bases]).T
        self.task_coeffs_ = Vt[:n_bases]

        self.train_vaf_ = {}
        for task, y in zip(tasks, Y):
            pred = self.predict_series(task)
            var = float(np.var(y))
            self.train_vaf_[task] = (
                1.0 - float(np.var(y - pred)) / var if var > 0 else 1.0
            )
        return self

    def predict(self, X) -> np.ndarray:
        """Angles for rows (phase, speed, incline); phase must be in [0, 1]."""
        X = np.asarray(X, dtype=float)
        s = X[:, 0]
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise PhaseOutOfRangeError("phase must lie in [0, 1]")
        tasks = [Task(float(sp), float(inc)) for sp, inc in zip(X[:, 1], X[:, 2])]
        F = fourier_features(s)
        T = self._task_features(tasks)
        basis_vals = F @ self.fourier_coeffs_.T  # (n, n_bases)
        task_weights = T @ self.task_coeffs_.T  # (n, n_bases)
        return np.sum(basis_vals * task_weights, axis=1)

    def predict_series(self, task: Task) -> np.ndarray:
        """Full-cycle trajectory at one task on the 150-point grid."""
        X = np.column_stack(
            [
                PHASE_GRID,
                np.full(N_PHASE, task.speed),
                np.full(N_PHASE, task.incline),
            ]
        )
        return self.predict(X)

    def to_dict(self) -> dict:
        ds, di = self._degrees()
        return {
            "joint": self.joint,
            "speed_degree": ds,
            "incline_degree": di,
            "n_bases": self.n_bases_,
            "fourier_coeffs": self.fourier_coeffs_.tolist(),
            "task_coeffs": self.task_coeffs_.tolist(),
            "normalizer": self.normalizer_.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PhaseTaskKinematics":
        model = cls(
            joint=payload["joint"],
            speed_degree=payload["speed_degree"],
            incline_degree=payload["incline_degree"],
        )
        model.n_bases_ = int(payload["n_bases"])
        model.fourier_coeffs_ = np.asarray(payload["fourier_coeffs"], dtype=float)
        model.task_coeffs_ = np.asarray(payload["task_coeffs"], dtype=float)
        norm = payload["normalizer"]
        model.normalizer_ = TaskNormalizer(
            speed_lo=norm["speed_lo"],
            speed_hi=norm["speed_hi"],
            incline_lo=norm["incline_lo"],
            incline_hi=norm["incline_hi"],
        )
        model.train_vaf_ = {}
        return model


def eval_model(model: PhaseTaskKinematics, s: float, task: Task) -> float:
    """Desired joint angle at one (phase, task) point."""
    return float(model.predict(np.array([[s, task.speed, task.incline]]))[0])


def fit_kinematic_model(
    dataset: Dataset,
    joint: str,
    training_overrides: dict | None = None,
    **hyperparams,
) -> PhaseTaskKinematics:
    """Fit the phase/task kinematic model to a dataset's per-task mean angles.

    ``training_overrides`` maps Task to an additive offset (array or
    PhaseSeries) applied to that task's training trajectory before the fit;
    the tuning layer uses it to shift swing kinematics uniformly.
    """
    tasks = [t for t in dataset.tasks if dataset.subjects_at(t, joint)]
    trajectories = []
    for task in tasks:
        mean = grand_mean(dataset, task, joint, ANGLE).values.copy()
        if training_overrides and task in training_overrides:
            offset = training_overrides[task]
            offset = offset.values if isinstance(offset, PhaseSeries) else np.asarray(offset, float)
            mean = mean + offset
        trajectories.append(mean)
    model = PhaseTaskKinematics(joint=joint, **hyperparams)
    return model.fit(tasks, np.array(trajectories))
