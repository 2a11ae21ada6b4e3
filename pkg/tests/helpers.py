"""Shared builders for synthetic series, stride sets, and populations."""

from __future__ import annotations

import numpy as np

from gaittune.data import (
    ANGLE,
    N_PHASE,
    PHASE_GRID,
    PHASE_STEP,
    TORQUE,
    VELOCITY,
    Dataset,
    PhaseSeries,
    Stride,
    StrideSet,
    Task,
)
from gaittune.impedance import impedance_torque, poly_eval
from gaittune.sitstand import SitStandModel, eval_sitstand_torque


def penalty_oracle(Q, c, G, h, mus=(1e4, 1e6, 1e8, 1e9)):
    """Quadratic-penalty minimizer, independent of the active-set solver.

    Each penalty subproblem is convex, C1, and piecewise quadratic: Newton
    steps on the current violation pattern solve a piece exactly, and an
    Armijo backtrack keeps the iteration monotone when the pattern flips.
    The final weight leaves an objective bias far below 1e-6 relative.
    """
    Q = np.asarray(Q, float)
    c = np.asarray(c, float)
    G = np.asarray(G, float)
    h = np.asarray(h, float)

    def value(x, mu):
        viol = np.maximum(G @ x - h, 0.0)
        return 0.5 * x @ Q @ x + c @ x + mu * viol @ viol

    def grad(x, mu):
        viol = np.maximum(G @ x - h, 0.0)
        return Q @ x + c + 2.0 * mu * (G.T @ viol)

    x = np.linalg.solve(Q, -c)
    scale = 1.0 + float(np.max(np.abs(c), initial=0.0))
    for mu in mus:
        for _ in range(300):
            g = grad(x, mu)
            if np.max(np.abs(g)) <= 1e-11 * scale:
                break
            active = G @ x - h > 0
            Ga = G[active]
            H = Q + 2.0 * mu * (Ga.T @ Ga)
            rhs = -c + 2.0 * mu * (Ga.T @ h[active])
            try:
                newton = np.linalg.solve(H, rhs)
            except np.linalg.LinAlgError:
                newton = np.linalg.lstsq(H, rhs, rcond=None)[0]
            direction = newton - x
            if not np.all(np.isfinite(direction)) or g @ direction >= 0.0:
                direction = -g
            f0 = value(x, mu)
            t = 1.0
            while t > 1e-14 and value(x + t * direction, mu) > f0 + 1e-4 * t * (g @ direction):
                t *= 0.5
            x = x + t * direction
    return x


def series(values, kind=TORQUE) -> PhaseSeries:
    return PhaseSeries(np.asarray(values, dtype=float), kind)


def constant_series(value: float, kind=TORQUE) -> PhaseSeries:
    return PhaseSeries(np.full(N_PHASE, float(value)), kind)


def random_series(rng: np.random.Generator, kind=TORQUE, scale=1.0) -> PhaseSeries:
    return PhaseSeries(scale * rng.standard_normal(N_PHASE), kind)


def make_stride(angle=None, velocity=None, torque=None, duration=1.0) -> Stride:
    zeros = np.zeros(N_PHASE)
    return Stride(
        angle=angle if angle is not None else PhaseSeries(zeros, ANGLE),
        velocity=velocity if velocity is not None else PhaseSeries(zeros, VELOCITY),
        torque=torque if torque is not None else PhaseSeries(zeros, TORQUE),
        duration_s=duration,
    )


def make_strideset(strides, subject="s1", task=Task(1.0, 0.0), joint="ankle") -> StrideSet:
    return StrideSet(subject=subject, task=task, joint=joint, strides=tuple(strides))


def torque_strideset(torques, subject="s1", task=Task(1.0, 0.0), joint="ankle") -> StrideSet:
    """Stride set whose torque channels are the given arrays; kinematics zero."""
    return make_strideset(
        [make_stride(torque=series(t, TORQUE)) for t in torques],
        subject=subject,
        task=task,
        joint=joint,
    )


DEFAULT_TRIPLE = (
    np.array([2.0, 0.8, -0.5, 0.3, 0.0]),
    np.array([0.1, -0.25, 0.0, 0.0, 0.0]),
    np.array([0.05, 0.08, -0.06, 0.0, 0.0]),
)


def impedance_strides(
    k=None, e=None, b=None, n_strides=3, duration=1.1, seed=0
) -> list[Stride]:
    """Noise-free strides whose torque comes exactly from a known triple."""
    k = DEFAULT_TRIPLE[0] if k is None else k
    e = DEFAULT_TRIPLE[1] if e is None else e
    b = DEFAULT_TRIPLE[2] if b is None else b
    rng = np.random.default_rng(seed)
    K = poly_eval(k, PHASE_GRID)
    E = poly_eval(e, PHASE_GRID)
    B = poly_eval(b, PHASE_GRID)
    strides = []
    for _ in range(n_strides):
        phase_shift = rng.uniform(0, 2 * np.pi)
        theta = 0.25 * np.sin(2 * np.pi * PHASE_GRID + phase_shift) + 0.1
        theta += 0.05 * np.cos(4 * np.pi * PHASE_GRID + phase_shift)
        theta_dot = np.gradient(theta, PHASE_STEP) / duration
        tau = impedance_torque(K, E, B, theta, theta_dot)
        strides.append(
            Stride(
                angle=PhaseSeries(theta, ANGLE),
                velocity=PhaseSeries(theta_dot, VELOCITY),
                torque=PhaseSeries(tau, TORQUE),
                duration_s=duration,
            )
        )
    return strides


DEFAULT_SITSTAND = SitStandModel(
    k=np.array([1.5, 0.5, -0.3, 0.2, 0.0]),
    b=np.array([0.06, 0.05, -0.04, 0.0, 0.0]),
    e1=np.array([1.2, -0.9, 0.1, 0.0, 0.0]),
    e2=np.array([0.3, -0.2, 0.0, 0.0, 0.0]),
    joint="knee",
    relu_lo=0.0,
    relu_hi=0.35,
)


def sitstand_strides(model=DEFAULT_SITSTAND, n_motions=4, seed=7, one_regime=False):
    """Motions exercising both ramp regimes (or just one, for the warning path)."""
    rng = np.random.default_rng(seed)
    strides = []
    for j in range(n_motions):
        rising = (j % 2 == 0) and not one_regime
        vel_scale = rng.uniform(0.5, 0.9) * (1.0 if rising else -0.7)
        theta = 1.3 - 1.1 * PHASE_GRID + 0.1 * np.sin(np.pi * PHASE_GRID + 0.2 * j)
        theta_dot = vel_scale * np.sin(np.pi * PHASE_GRID) + (0.1 if rising else -0.05)
        if one_regime:
            theta_dot = -np.abs(theta_dot) - 0.01  # always below the ramp
        tau = eval_sitstand_torque(model, PHASE_GRID, theta, theta_dot)
        strides.append(
            Stride(
                angle=PhaseSeries(theta, ANGLE),
                velocity=PhaseSeries(theta_dot, VELOCITY),
                torque=PhaseSeries(tau, TORQUE),
                duration_s=2.0,
            )
        )
    return make_strideset(strides, subject="ss", task=Task(0.0, 0.0), joint="knee")


def synth_population(
    n_subjects=10,
    tasks=None,
    joints=("ankle", "knee", "hip"),
    offset_scale=0.1,
    noise=0.01,
    strides_per_task=6,
    seed=0,
    transferable=True,
) -> Dataset:
    """Population with per-subject torque offsets persistent across tasks.

    With ``transferable`` False the offsets are zero and only stride noise
    remains, so no individuality can transfer.
    """
    if tasks is None:
        tasks = [Task(s, i) for s in (0.8, 1.0, 1.2) for i in (-5.0, 0.0, 5.0)]
    rng = np.random.default_rng(seed)
    subjects = [f"P{i + 1:02d}" for i in range(n_subjects)]
    offsets = {}
    for subject in subjects:
        for joint in joints:
            if transferable:
                shape = rng.standard_normal(3)
                offsets[(subject, joint)] = offset_scale * (
                    shape[0] * np.sin(2 * np.pi * PHASE_GRID)
                    + shape[1] * np.cos(2 * np.pi * PHASE_GRID)
                    + shape[2]
                )
            else:
                offsets[(subject, joint)] = np.zeros(N_PHASE)
    strides: dict = {}
    for subject in subjects:
        for task in tasks:
            for joint in joints:
                base = (
                    (0.5 + 0.2 * task.speed) * np.sin(2 * np.pi * PHASE_GRID)
                    + 0.05 * task.incline / 10.0
                )
                stride_list = []
                for _ in range(strides_per_task):
                    torque = base + offsets[(subject, joint)]
                    torque = torque + noise * rng.standard_normal(N_PHASE)
                    stride_list.append(make_stride(torque=series(torque, TORQUE)))
                strides[(subject, task, joint)] = StrideSet(
                    subject=subject, task=task, joint=joint, strides=tuple(stride_list)
                )
    return Dataset(
        subjects=tuple(subjects),
        tasks=tuple(sorted(tasks)),
        strides=strides,
        mass_normalized=True,
    )
