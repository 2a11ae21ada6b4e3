"""Phase-varying joint impedance fitted to reference torques.

Stiffness, equilibrium angle, and damping are degree-4 polynomials of gait
phase. The torque law tau = -K(s)(theta - theta_eq(s)) - B(s)*thetadot is
bilinear in (K, theta_eq); substituting w(s) = K(s)*theta_eq(s) makes the
fit a convex QP with bound constraints sampled on the phase grid. The
equilibrium polynomial is recovered by projecting w(s)/K(s) back onto the
degree-4 class over the fitted window (K stays positive by constraint, so
the ratio is finite everywhere).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .data import N_PHASE, PHASE_GRID, StrideSet, Task
from .errors import (
    InfeasibleConstraintsError,
    PhaseOutOfRangeError,
    SingularFitWarning,
    ZeroVarianceReferenceError,
)
from .qp import solve_qp

POLY_DEGREE = 4
N_COEF = POLY_DEGREE + 1

DEFAULT_STANCE_WINDOW = (0.0, 0.6)


def poly_features(s) -> np.ndarray:
    """Rows of [1, s, s^2, s^3, s^4] for each phase sample."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.power.outer(s, np.arange(N_COEF))


def poly_eval(coeffs: np.ndarray, s) -> np.ndarray | float:
    scalar = np.isscalar(s) or np.ndim(s) == 0
    out = np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)
    return float(out) if scalar else out


def check_phase(s) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise PhaseOutOfRangeError("phase must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class ConstraintProfile:
    """Phase-sampled impedance bounds with a distinct heel-strike floor.

    The stiffness ceiling keeps solutions inside what the actuator can
    render; it also pins down the otherwise weakly determined stiffness
    scale when the angle excitation is poor.
    """

    k_min: np.ndarray
    b_min: np.ndarray
    b_max: np.ndarray
    heel_strike_k_min: float
    k_max: np.ndarray = 10.0

    def __post_init__(self):
        for name in ("k_min", "b_min", "b_max", "k_max"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 0:
                arr = np.full(N_PHASE, float(arr))
            if arr.shape != (N_PHASE,):
                raise ValueError(f"{name} must have {N_PHASE} phase samples")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.heel_strike_k_min < self.k_min[0]:
            raise ValueError(
                "heel-strike stiffness floor cannot be below the general floor"
            )
        if self.heel_strike_k_min > self.k_max[0] or np.any(self.k_min > self.k_max):
            raise ValueError("stiffness floor exceeds the stiffness ceiling")

    @classmethod
    def from_scalars(
        cls,
        k_min: float = 0.2,
        heel_strike_k_min: float = 1.0,
        b_min: float = 0.0,
        b_max: float = 0.15,
        k_max: float = 10.0,
    ) -> "ConstraintProfile":
        return cls(
            k_min=np.full(N_PHASE, k_min),
            b_min=np.full(N_PHASE, b_min),
            b_max=np.full(N_PHASE, b_max),
            heel_strike_k_min=heel_strike_k_min,
            k_max=np.full(N_PHASE, k_max),
        )

    def with_heel_strike(self, value: float) -> "ConstraintProfile":
        return replace(self, heel_strike_k_min=value)

    def stiffness_floor(self) -> np.ndarray:
        """Effective per-phase lower bound on K, heel-strike override applied."""
        floor = self.k_min.copy()
        floor[0] = max(floor[0], self.heel_strike_k_min)
        return floor

    def to_dict(self) -> dict:
        return {
            "k_min": self.k_min.tolist(),
            "b_min": self.b_min.tolist(),
            "b_max": self.b_max.tolist(),
            "heel_strike_k_min": self.heel_strike_k_min,
            "k_max": self.k_max.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConstraintProfile":
        return cls(
            k_min=np.asarray(payload["k_min"], dtype=float),
            b_min=np.asarray(payload["b_min"], dtype=float),
            b_max=np.asarray(payload["b_max"], dtype=float),
            heel_strike_k_min=float(payload["heel_strike_k_min"]),
            k_max=np.asarray(payload["k_max"], dtype=float),
        )


@dataclass(frozen=True, eq=False)
class ImpedancePolynomials:
    """Degree-4 coefficient triples for one (task, joint)."""

    k: np.ndarray
    e: np.ndarray
    b: np.ndarray
    task: Task
    joint: str

    def __post_init__(self):
        for name in ("k", "e", "b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (N_COEF,):
                raise ValueError(f"{name} must have {N_COEF} coefficients")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class FitResult:
    polynomials: ImpedancePolynomials
    vaf: float
    residual_rms: float
    constraint_violation_max: float
    kkt_residual: float
    n_iterations: int
    ridge_applied: bool


def eval_impedance(poly: ImpedancePolynomials, s):
    """(K, theta_eq, B) at phase s; s may be scalar or array in [0, 1]."""
    check_phase(s)
    return poly_eval(poly.k, s), poly_eval(poly.e, s), poly_eval(poly.b, s)


def impedance_torque(K, theta_eq, B, theta, theta_dot):
    """tau = -K(theta - theta_eq) - B*theta_dot, mass-normalized."""
    return -K * (np.asarray(theta) - theta_eq) - B * np.asarray(theta_dot)


def vaf(reference, predicted) -> float:
    """Variance accounted for: 1 - var(residual)/var(reference)."""
    ref = np.asarray(getattr(reference, "values", reference), dtype=float)
    pred = np.asarray(getattr(predicted, "values", predicted), dtype=float)
    ref_var = float(np.var(ref))
    if ref_var == 0.0:
        raise ZeroVarianceReferenceError("reference signal has zero variance")
    return 1.0 - float(np.var(ref - pred)) / ref_var


class ImpedanceRegressor(BaseEstimator, RegressorMixin):
    """Constrained least-squares fit of phase-polynomial joint impedance.

    Parameters
    ----------
    constraints : ConstraintProfile, optional
        Phase-sampled bounds on stiffness and damping. Defaults to the
        shipped flat profile.
    ridge : float
        Regularization added to the substituted-equilibrium and damping
        blocks when the excitation is degenerate.
    tol : float
        KKT residual tolerance passed to the active-set solver.
    max_iterations : int
        Active-set iteration cap.

    Attributes
    ----------
    stiffness_coef_, equilibrium_coef_, damping_coef_ : ndarray of shape (5,)
        Fitted polynomial coefficients.
    crossterm_coef_ : ndarray of shape (5,)
        Coefficients of w(s) = K(s)*theta_eq(s) from the convex substitution.
    vaf_ : float
        Variance accounted for on the training samples.
    kkt_residual_ : float
        Max KKT violation at the solution.
    constraint_violation_max_ : float
        Worst bound violation over the 150-point phase grid.
    ridge_applied_ : bool
        Whether the degenerate-excitation fallback fired.
    """

    def __init__(
        self,
        constraints: ConstraintProfile | None = None,
        ridge: float = 1e-6,
        tol: float = 1e-8,
        max_iterations: int = 500,
    ):
        self.constraints = constraints
        self.ridge = ridge
        self.tol = tol
        self.max_iterations = max_iterations

    def _profile(self) -> ConstraintProfile:
        return self.constraints if self.constraints is not None else ConstraintProfile.from_scalars()

    def fit(self, X, y):
        """Fit from samples X = (phase, angle, velocity) and torques y.

        A convex QP on (K, w = K*theta_eq, B) seeds the solution; the
        equilibrium polynomial is then recovered in the torque metric and a
        few alternating convex passes (equilibrium step is unconstrained
        least squares, stiffness/damping step is a bound-constrained QP on
        the true model) pull the fit back into the polynomial-equilibrium
        class. Every pass can only reduce the residual.
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[1] != 3:
            raise ValueError("X must have columns (phase, angle, velocity)")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree on sample count")
        profile = self._profile()
        if np.any(profile.b_min > profile.b_max):
            raise InfeasibleConstraintsError(
                "damping lower bound exceeds upper bound somewhere on the grid"
            )

        s, theta, theta_dot = X[:, 0], X[:, 1], X[:, 2]
        check_phase(s)
        P = poly_features(s)
        A = np.hstack([-theta[:, None] * P, P, -theta_dot[:, None] * P])

        ridge_applied = False
        singulars = np.linalg.svd(A, compute_uv=False)
        if singulars[-1] <= 1e-10 * singulars[0]:
            ridge_applied = True
            warnings.warn(
                "degenerate angle/velocity excitation; ridge regularization applied",
                SingularFitWarning,
                stacklevel=2,
            )

        Q = 2.0 * (A.T @ A)
        if ridge_applied:
            mask = np.zeros(3 * N_COEF)
            mask[N_COEF:] = 1.0  # w and damping blocks
            Q += 2.0 * self.ridge * np.diag(mask)
            if np.linalg.cond(Q) > 1e14:
                Q += 2.0 * self.ridge * np.eye(3 * N_COEF)
        c = -2.0 * (A.T @ y)

        G, h = self._constraint_rows(profile)
        qp = solve_qp(Q, c, G, h, tol=self.tol, max_iterations=self.max_iterations)

        k = qp.x[:N_COEF]
        w = qp.x[N_COEF : 2 * N_COEF]
        b = qp.x[2 * N_COEF :]
        self.crossterm_coef_ = w
        e = self._equilibrium_step(P, s, theta, theta_dot, y, k, b, target_w=w)

        G2, h2 = self._kb_constraint_rows(profile)
        residual_rms = self._rms(P, theta, theta_dot, y, k, e, b)
        for _ in range(3):
            A2 = np.hstack([-(theta - P @ e)[:, None] * P, -theta_dot[:, None] * P])
            Q2 = 2.0 * (A2.T @ A2)
            if np.linalg.svd(A2, compute_uv=False)[-1] <= 1e-10:
                Q2 += 2.0 * self.ridge * np.eye(2 * N_COEF)
            c2 = -2.0 * (A2.T @ y)
            qp = solve_qp(Q2, c2, G2, h2, tol=self.tol, max_iterations=self.max_iterations)
            k_new, b_new = qp.x[:N_COEF], qp.x[N_COEF:]
            e_new = self._equilibrium_step(P, s, theta, theta_dot, y, k_new, b_new)
            new_rms = self._rms(P, theta, theta_dot, y, k_new, e_new, b_new)
            if new_rms > residual_rms - 1e-14:
                if new_rms <= residual_rms:
                    k, b, e, residual_rms = k_new, b_new, e_new, new_rms
                break
            k, b, e, residual_rms = k_new, b_new, e_new, new_rms

        self.stiffness_coef_ = k
        self.damping_coef_ = b
        self.equilibrium_coef_ = e
        self.kkt_residual_ = qp.kkt_residual
        self.n_iterations_ = qp.n_iterations
        self.ridge_applied_ = ridge_applied

        predicted = self.predict(X)
        residual = y - predicted
        self.residual_rms_ = float(np.sqrt(np.mean(residual**2)))
        ref_var = float(np.var(y))
        self.vaf_ = 1.0 - float(np.var(residual)) / ref_var if ref_var > 0 else 0.0

        grid_P = poly_features(PHASE_GRID)
        K_grid = grid_P @ k
        B_grid = grid_P @ b
        floor = profile.stiffness_floor()
        self.constraint_violation_max_ = float(
            max(
                np.max(floor - K_grid, initial=0.0),
                np.max(K_grid - profile.k_max, initial=0.0),
                np.max(profile.b_min - B_grid, initial=0.0),
                np.max(B_grid - profile.b_max, initial=0.0),
            )
        )
        return self

    @staticmethod
    def _rms(P, theta, theta_dot, y, k, e, b) -> float:
        predicted = -(P @ k) * (theta - P @ e) - (P @ b) * theta_dot
        return float(np.sqrt(np.mean((y - predicted) ** 2)))

    @staticmethod
    def _equilibrium_step(P, s, theta, theta_dot, y, k, b, target_w=None):
        """Best polynomial equilibrium given (K, B), in the torque metric.

        Rows are weighted by K(s): the torque cost of an equilibrium error
        is K times that error. K stays positive through its grid floor.
        """
        K = P @ k
        design = K[:, None] * P
        if target_w is not None:
            target = P @ target_w
        else:
            target = y + K * theta + (P @ b) * theta_dot
        return np.linalg.lstsq(design, target, rcond=None)[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        s, theta, theta_dot = X[:, 0], X[:, 1], X[:, 2]
        K = poly_eval(self.stiffness_coef_, s)
        e = poly_eval(self.equilibrium_coef_, s)
        B = poly_eval(self.damping_coef_, s)
        return impedance_torque(K, e, B, theta, theta_dot)

    def _constraint_rows(self, profile: ConstraintProfile):
        P = poly_features(PHASE_GRID)
        zeros = np.zeros_like(P)
        floor = profile.stiffness_floor()
        G = np.vstack(
            [
                np.hstack([-P, zeros, zeros]),  # K >= floor
                np.hstack([P, zeros, zeros]),  # K <= k_max
                np.hstack([zeros, zeros, -P]),  # B >= b_min
                np.hstack([zeros, zeros, P]),  # B <= b_max
            ]
        )
        h = np.concatenate([-floor, profile.k_max, -profile.b_min, profile.b_max])
        return G, h

    def _kb_constraint_rows(self, profile: ConstraintProfile):
        """Same bound rows for the reduced (stiffness, damping) problem."""
        P = poly_features(PHASE_GRID)
        zeros = np.zeros_like(P)
        floor = profile.stiffness_floor()
        G = np.vstack(
            [
                np.hstack([-P, zeros]),
                np.hstack([P, zeros]),
                np.hstack([zeros, -P]),
                np.hstack([zeros, P]),
            ]
        )
        h = np.concatenate([-floor, profile.k_max, -profile.b_min, profile.b_max])
        return G, h


def stance_samples(
    strides: StrideSet, stance_window: tuple[float, float] = DEFAULT_STANCE_WINDOW
):
    """Stack (phase, angle, velocity) rows and torques over the stance window."""
    lo, hi = stance_window
    mask = (PHASE_GRID >= lo) & (PHASE_GRID <= hi)
    xs, ys = [], []
    for stride in strides.strides:
        xs.append(
            np.column_stack(
                [
                    PHASE_GRID[mask],
                    stride.angle.values[mask],
                    stride.velocity.values[mask],
                ]
            )
        )
        ys.append(stride.torque.values[mask])
    return np.vstack(xs), np.concatenate(ys)


def fit_impedance(
    strides: StrideSet,
    constraints: ConstraintProfile,
    stance_window: tuple[float, float] = DEFAULT_STANCE_WINDOW,
    ridge: float = 1e-6,
    tol: float = 1e-8,
    max_iterations: int = 500,
) -> FitResult:
    """Fit stance impedance polynomials for one stride set.

    Raises
    ------
    InfeasibleConstraintsError
        If the bound profile admits no polynomial at all.
    NonConvergenceError
        If the active-set solver hits its iteration cap.
    """
    X, y = stance_samples(strides, stance_window)
    reg = ImpedanceRegressor(
        constraints=constraints, ridge=ridge, tol=tol, max_iterations=max_iterations
    )
    reg.fit(X, y)
    polynomials = ImpedancePolynomials(
        k=reg.stiffness_coef_,
        e=reg.equilibrium_coef_,
        b=reg.damping_coef_,
        task=strides.task,
        joint=strides.joint,
    )
    return FitResult(
        polynomials=polynomials,
        vaf=reg.vaf_,
        residual_rms=reg.residual_rms_,
        constraint_violation_max=reg.constraint_violation_max_,
        kkt_residual=reg.kkt_residual_,
        n_iterations=reg.n_iterations_,
        ridge_applied=reg.ridge_applied_,
    )
