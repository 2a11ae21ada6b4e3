"""Dual active-set solver for strictly convex quadratic programs.

Solves  min 1/2 x'Qx + c'x  subject to  Gx <= h  starting from the
unconstrained minimizer and adding the most-violated constraint each pass
(Goldfarb-Idnani). Dependent constraints are absorbed through pure dual
steps, so densely sampled, near-parallel bound rows cannot stall the
iteration, and no feasible starting point is required. A final equality
polish on the active set sharpens the KKT residuals. Ties break on the
lowest constraint index, making identical inputs give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InfeasibleConstraintsError, NonConvergenceError


@dataclass(frozen=True)
class QPResult:
    x: np.ndarray
    multipliers: np.ndarray
    n_iterations: int
    kkt_residual: float
    active: tuple[int, ...]


def kkt_residual(Q, c, G, h, x, multipliers) -> float:
    """Max KKT violation: stationarity, primal/dual feasibility, complementarity."""
    slack = G @ x - h
    stationarity = float(np.max(np.abs(Q @ x + c + G.T @ multipliers), initial=0.0))
    primal = float(np.max(slack, initial=0.0))
    dual = float(np.max(-multipliers, initial=0.0))
    comp = float(np.max(np.abs(multipliers * slack), initial=0.0))
    return max(stationarity, primal, dual, comp)


def _eqp(Q, c, G, h, active: list[int]):
    """Equality-constrained solve on a working set; multipliers scattered."""
    n = Q.shape[0]
    m = len(active)
    if m == 0:
        try:
            x = np.linalg.solve(Q, -c)
        except np.linalg.LinAlgError:
            x = np.linalg.lstsq(Q, -c, rcond=None)[0]
        return x, np.zeros(G.shape[0])
    G_a = G[active]
    kkt = np.block([[Q, G_a.T], [G_a, np.zeros((m, m))]])
    rhs = np.concatenate([-c, h[active]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    x = sol[:n]
    u = np.zeros(G.shape[0])
    u[active] = sol[n:]
    return x, u


def _refine(Q, c, G, h, active: list[int], x0, u0, tol: float):
    """Working-set refinement from a near-optimal active set.

    Re-solves the equality system, dropping negative multipliers and adding
    the worst violated constraint, and keeps whichever iterate scores the
    best overall KKT residual.
    """
    best_x, best_u = x0, u0
    best_res = kkt_residual(Q, c, G, h, x0, u0)
    working = list(active)
    for _ in range(40):
        x, u = _eqp(Q, c, G, h, working)
        u_clip = np.maximum(u, 0.0)
        res = kkt_residual(Q, c, G, h, x, u_clip)
        if res < best_res:
            best_x, best_u, best_res = x, u_clip, res
        negative = [i for i in working if u[i] < -tol]
        if negative:
            worst_neg = min(negative, key=lambda i: (u[i], i))
            working.remove(worst_neg)
            continue
        slack = G @ x - h
        slack[working] = 0.0
        worst = int(np.argmax(slack))
        if slack[worst] <= tol * 1e-2:
            break
        if worst in working:
            break
        working.append(worst)
        working.sort()
    return best_x, best_u


def solve_qp(
    Q: np.ndarray,
    c: np.ndarray,
    G: np.ndarray,
    h: np.ndarray,
    tol: float = 1e-8,
    max_iterations: int = 500,
) -> QPResult:
    """Solve the inequality-constrained QP.

    Raises
    ------
    InfeasibleConstraintsError
        If the constraint set admits no point.
    NonConvergenceError
        If the iteration cap is hit before optimality.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)

    try:
        chol = cho_factor(Q, lower=True)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.trace(Q)) / Q.shape[0] + 1e-300
        chol = cho_factor(Q + jitter * np.eye(Q.shape[0]), lower=True)

    x = cho_solve(chol, -c)
    active: list[int] = []
    u: list[float] = []
    feas_tol = max(tol * 1e-2, 1e-12) * (1.0 + float(np.max(np.abs(h), initial=0.0)))

    iterations = 0
    while True:
        slack = G @ x - h
        if active:
            slack[active] = 0.0  # tight by construction; ignore round-off
        worst = int(np.argmax(slack))
        if slack[worst] <= feas_tol:
            break
        p = worst
        n_p = G[p]
        u_p = 0.0

        while True:
            iterations += 1
            if iterations > max_iterations:
                raise NonConvergenceError(
                    f"active-set iteration cap {max_iterations} reached"
                )
            Qi_np = cho_solve(chol, n_p)
            if active:
                N = G[active].T
                Qi_N = cho_solve(chol, N)
                M = N.T @ Qi_N
                try:
                    r = np.linalg.solve(M, N.T @ Qi_np)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(M, N.T @ Qi_np, rcond=None)[0]
                z = Qi_np - Qi_N @ r
            else:
                r = np.zeros(0)
                z = Qi_np
            curvature = float(n_p @ z)
            dependent = curvature <= 1e-13 * max(1.0, float(n_p @ Qi_np))

            t1 = np.inf
            k = -1
            for j in range(len(active)):
                if r[j] > 1e-12:
                    cand = u[j] / r[j]
                    if cand < t1 - 1e-15:
                        t1 = cand
                        k = j
            violation = float(n_p @ x - h[p])
            t2 = np.inf if dependent else violation / curvature

            if not np.isfinite(min(t1, t2)):
                raise InfeasibleConstraintsError(
                    "no point satisfies the constraint set"
                )
            if t2 <= t1:
                x = x - t2 * z
                for j in range(len(active)):
                    u[j] -= t2 * r[j]
                u_p += t2
                active.append(p)
                u.append(u_p)
                order = sorted(range(len(active)), key=lambda i: active[i])
                active = [active[i] for i in order]
                u = [u[i] for i in order]
                break
            # dual step: some active multiplier hits zero first; drop it
            if not dependent:
                x = x - t1 * z
            for j in range(len(active)):
                u[j] -= t1 * r[j]
            u_p += t1
            active.pop(k)
            u.pop(k)

    multipliers = np.zeros(G.shape[0])
    for idx, val in zip(active, u):
        multipliers[idx] = max(val, 0.0)
    x, multipliers = _refine(Q, c, G, h, active, x, multipliers, tol)
    final_active = tuple(np.flatnonzero(multipliers > 0.0).tolist())

    return QPResult(
        x=x,
        multipliers=multipliers,
        n_iterations=max(iterations, 1),
        kkt_residual=kkt_residual(Q, c, G, h, x, multipliers),
        active=final_active,
    )
