"""Sit-stand impedance with thigh-angle phase and velocity-split equilibrium.

Phase runs 0 (seated) to 1 (standing), parameterized by the global thigh
angle. The knee equilibrium is a blend of two phase polynomials mixed by a
saturating ramp of joint velocity, which lets one model serve both rising
and lowering motions. Direction-dependent torque scaling is applied at
evaluation time and interpolated near the posture ends so the handoff
between directions stays continuous.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import PHASE_GRID, StrideSet
from .errors import (
    DegenerateCalibrationError,
    InfeasibleConstraintsError,
    PhaseOutOfRangeError,
    RegimeNotExcitedWarning,
    SeparationExceededError,
)
from .impedance import (
    N_COEF,
    ConstraintProfile,
    FitResult,
    ImpedancePolynomials,
    check_phase,
    poly_eval,
    poly_features,
)
from .qp import solve_qp

RISING = "rising"
LOWERING = "lowering"

DEFAULT_RELU_LO = 0.0
DEFAULT_RELU_HI = 0.35
DEFAULT_THIGH_SIT = 1.4
DEFAULT_THIGH_STAND = 0.1

MAX_SCALE_SEPARATION = 0.60


@dataclass(frozen=True, eq=False)
class SitStandModel:
    """Phase polynomials for K, B and the split equilibrium pair."""

    k: np.ndarray
    b: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    joint: str
    relu_lo: float
    relu_hi: float

    def __post_init__(self):
        for name in ("k", "b", "e1", "e2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (N_COEF,):
                raise ValueError(f"{name} must have {N_COEF} coefficients")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.joint != "knee" and np.any(self.e2 != 0.0):
            raise ValueError("split equilibrium is only active for the knee")
        if not self.relu_lo < self.relu_hi:
            raise ValueError("velocity ramp needs relu_lo < relu_hi")


@dataclass(frozen=True)
class ScalingSchedule:
    """Per-direction torque scaling with a blend near the posture ends."""

    sit_to_stand_scale: float
    stand_to_sit_scale: float
    blend_width: float = 0.10

    def __post_init__(self):
        gap = abs(self.sit_to_stand_scale - self.stand_to_sit_scale)
        if gap > MAX_SCALE_SEPARATION + 1e-12:
            raise SeparationExceededError(
                f"scale separation {gap:.3f} exceeds the {MAX_SCALE_SEPARATION:.2f} cap"
            )
        if not 0.0 < self.blend_width < 0.5:
            raise ValueError("blend width must lie in (0, 0.5)")


def phase_from_thigh(thigh_angle: float, theta_sit: float, theta_stand: float) -> float:
    """Affine thigh-angle phase, 0 at the seated posture, 1 standing, clamped."""
    if theta_sit == theta_stand:
        raise DegenerateCalibrationError("seated and standing thigh angles coincide")
    s = (thigh_angle - theta_sit) / (theta_stand - theta_sit)
    return float(np.clip(s, 0.0, 1.0))


def velocity_blend(theta_dot, relu_lo: float, relu_hi: float):
    """Saturating ramp: 0 below relu_lo, 1 above relu_hi, linear between."""
    if not relu_lo < relu_hi:
        raise ValueError("velocity ramp needs relu_lo < relu_hi")
    out = (np.asarray(theta_dot, dtype=float) - relu_lo) / (relu_hi - relu_lo)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(theta_dot) == 0 else out


def eval_sitstand_torque(model: SitStandModel, s, theta, theta_dot):
    """Impedance torque with velocity-blended equilibrium at phase s."""
    check_phase(s)
    K = poly_eval(model.k, s)
    B = poly_eval(model.b, s)
    f = velocity_blend(theta_dot, model.relu_lo, model.relu_hi)
    equilibrium = poly_eval(model.e1, s) + f * poly_eval(model.e2, s)
    return -K * (np.asarray(theta) - equilibrium) - B * np.asarray(theta_dot)


def blended_scale(s: float, direction: str, schedule: ScalingSchedule) -> float:
    """Direction's scale, interpolated toward the other near the handoffs.

    Rising carries its scale up to the standing end and ramps to the
    lowering scale over the last blend window; lowering mirrors that around
    the seated end, so both directions agree wherever a handoff can occur.
    """
    s = float(s)
    if s < 0.0 or s > 1.0:
        raise PhaseOutOfRangeError("phase must lie in [0, 1]")
    r = schedule.sit_to_stand_scale
    l = schedule.stand_to_sit_scale
    w = schedule.blend_width
    if direction == RISING:
        if s <= 1.0 - w:
            return r
        return r + (s - (1.0 - w)) / w * (l - r)
    if direction == LOWERING:
        if s >= w:
            return l
        return l + (w - s) / w * (r - l)
    raise ValueError(f"unknown direction {direction!r}")


def fit_sitstand(
    strides: StrideSet,
    constraints: ConstraintProfile,
    relu_lo: float = DEFAULT_RELU_LO,
    relu_hi: float = DEFAULT_RELU_HI,
    tol: float = 1e-8,
    max_iterations: int = 500,
) -> tuple[SitStandModel, FitResult]:
    """Convex fit of the sit-stand impedance model over the full motion.

    The split equilibrium enters through substitutions w1 = K*e1 and
    w2 = K*e2, which are linear in the coefficients once the velocity ramp
    is evaluated per sample. If the data never leaves one ramp regime the
    split term is unidentifiable: the fit warns and proceeds with e2 = 0.
    """
    if np.any(constraints.b_min > constraints.b_max):
        raise InfeasibleConstraintsError(
            "damping lower bound exceeds upper bound somewhere on the grid"
        )
    xs, ys = [], []
    for stride in strides.strides:
        xs.append(
            np.column_stack(
                [PHASE_GRID, stride.angle.values, stride.velocity.values]
            )
        )
        ys.append(stride.torque.values)
    X = np.vstack(xs)
    y = np.concatenate(ys)
    s, theta, theta_dot = X[:, 0], X[:, 1], X[:, 2]
    f = velocity_blend(theta_dot, relu_lo, relu_hi)

    split_active = strides.joint == "knee"
    if split_active and float(np.max(f) - np.min(f)) < 1e-9:
        warnings.warn(
            "velocity stayed in one ramp regime; split equilibrium disabled",
            RegimeNotExcitedWarning,
            stacklevel=2,
        )
        split_active = False

    P = poly_features(s)
    blocks = [-theta[:, None] * P, P]
    if split_active:
        blocks.append(f[:, None] * P)
    blocks.append(-theta_dot[:, None] * P)
    A = np.hstack(blocks)
    n_var = A.shape[1]

    Q = 2.0 * (A.T @ A)
    singulars = np.linalg.svd(A, compute_uv=False)
    ridge_applied = bool(singulars[-1] <= 1e-10 * singulars[0])
    if ridge_applied:
        mask = np.ones(n_var)
        mask[:N_COEF] = 0.0
        Q += 2e-6 * np.diag(mask)
    c = -2.0 * (A.T @ y)

    grid_P = poly_features(PHASE_GRID)
    zeros = np.zeros_like(grid_P)
    n_mid = n_var - 2 * N_COEF  # columns between the k and b blocks
    mid = np.zeros((len(PHASE_GRID), n_mid))
    floor = constraints.stiffness_floor()
    G = np.vstack(
        [
            np.hstack([-grid_P, mid, zeros]),
            np.hstack([grid_P, mid, zeros]),
            np.hstack([zeros, mid, -grid_P]),
            np.hstack([zeros, mid, grid_P]),
        ]
    )
    h = np.concatenate(
        [-floor, constraints.k_max, -constraints.b_min, constraints.b_max]
    )

    qp = solve_qp(Q, c, G, h, tol=tol, max_iterations=max_iterations)

    k = qp.x[:N_COEF]
    b = qp.x[n_var - N_COEF :]

    def equilibrium_step(k_cur, b_cur):
        """Best polynomial equilibrium pair given (K, B), in the torque metric."""
        K = P @ k_cur
        target = y + K * theta + (P @ b_cur) * theta_dot
        if split_active:
            design = np.hstack([K[:, None] * P, (f * K)[:, None] * P])
            coeffs = np.linalg.lstsq(design, target, rcond=None)[0]
            return coeffs[:N_COEF], coeffs[N_COEF:]
        design = K[:, None] * P
        return np.linalg.lstsq(design, target, rcond=None)[0], np.zeros(N_COEF)

    def rms(k_cur, b_cur, e1_cur, e2_cur) -> float:
        eq = P @ e1_cur + f * (P @ e2_cur)
        predicted = -(P @ k_cur) * (theta - eq) - (P @ b_cur) * theta_dot
        return float(np.sqrt(np.mean((y - predicted) ** 2)))

    e1, e2 = equilibrium_step(k, b)
    G2 = np.vstack(
        [
            np.hstack([-grid_P, zeros]),
            np.hstack([grid_P, zeros]),
            np.hstack([zeros, -grid_P]),
            np.hstack([zeros, grid_P]),
        ]
    )
    h2 = np.concatenate(
        [-floor, constraints.k_max, -constraints.b_min, constraints.b_max]
    )
    best_rms = rms(k, b, e1, e2)
    for _ in range(3):
        eq = P @ e1 + f * (P @ e2)
        A2 = np.hstack([-(theta - eq)[:, None] * P, -theta_dot[:, None] * P])
        Q2 = 2.0 * (A2.T @ A2)
        if np.linalg.svd(A2, compute_uv=False)[-1] <= 1e-10:
            Q2 += 2e-6 * np.eye(2 * N_COEF)
        c2 = -2.0 * (A2.T @ y)
        qp = solve_qp(Q2, c2, G2, h2, tol=tol, max_iterations=max_iterations)
        k_new, b_new = qp.x[:N_COEF], qp.x[N_COEF:]
        e1_new, e2_new = equilibrium_step(k_new, b_new)
        new_rms = rms(k_new, b_new, e1_new, e2_new)
        if new_rms > best_rms - 1e-14:
            if new_rms <= best_rms:
                k, b, e1, e2, best_rms = k_new, b_new, e1_new, e2_new, new_rms
            break
        k, b, e1, e2, best_rms = k_new, b_new, e1_new, e2_new, new_rms

    model = SitStandModel(
        k=k,
        b=b,
        e1=e1,
        e2=e2 if strides.joint == "knee" else np.zeros(N_COEF),
        joint=strides.joint,
        relu_lo=relu_lo,
        relu_hi=relu_hi,
    )

    predicted = eval_sitstand_torque(model, s, theta, theta_dot)
    residual = y - predicted
    ref_var = float(np.var(y))
    K150 = grid_P @ k
    B150 = grid_P @ b
    violation = float(
        max(
            np.max(floor - K150, initial=0.0),
            np.max(K150 - constraints.k_max, initial=0.0),
            np.max(constraints.b_min - B150, initial=0.0),
            np.max(B150 - constraints.b_max, initial=0.0),
        )
    )
    result = FitResult(
        polynomials=ImpedancePolynomials(
            k=k, e=e1, b=b, task=strides.task, joint=strides.joint
        ),
        vaf=1.0 - float(np.var(residual)) / ref_var if ref_var > 0 else 0.0,
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        constraint_violation_max=violation,
        kkt_residual=qp.kkt_residual,
        n_iterations=qp.n_iterations,
        ridge_applied=ridge_applied,
    )
    return model, result
