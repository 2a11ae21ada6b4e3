"""Synthetic demonstration datasets shaped like real treadmill sessions.

Torques are generated exactly from task-dependent impedance triples applied
to each stride's kinematics, so fitted models reach high fit quality and
the workbench can be exercised end to end without the source recordings.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .data import CSV_COLUMNS, N_PHASE, PHASE_GRID, PHASE_STEP
from .impedance import impedance_torque, poly_eval
from .sitstand import SitStandModel, eval_sitstand_torque

DEMO_SPEEDS = (0.8, 1.0, 1.2)
DEMO_INCLINES = (-10.0, -5.0, 0.0, 5.0, 10.0)


def _true_triple(joint: str, speed: float, incline: float):
    """Task-dependent impedance polynomials, feasible under shipped bounds."""
    if joint == "ankle":
        k = np.array([2.2 + 0.3 * speed + 0.02 * incline, 0.5, -0.3, 0.2, 0.0])
        e = np.array([0.05 + 0.05 * speed, -0.2, 0.0, 0.0, 0.0])
        b = np.array([0.05, 0.06, -0.05, 0.0, 0.0])
    else:
        k = np.array([2.0 + 0.25 * speed - 0.015 * incline, 0.4, -0.25, 0.15, 0.0])
        e = np.array([0.12 + 0.04 * speed, -0.15, 0.0, 0.0, 0.0])
        b = np.array([0.04, 0.05, -0.04, 0.0, 0.0])
    return k, e, b


def _base_angle(joint: str, speed: float, incline: float) -> np.ndarray:
    s = PHASE_GRID
    if joint == "ankle":
        return (
            (0.20 + 0.05 * speed) * np.sin(2 * np.pi * s)
            + 0.08 * np.cos(4 * np.pi * s)
            + 0.05 * np.sin(6 * np.pi * s + 0.4)
            + 0.10
            + 0.004 * incline * np.sin(np.pi * s) ** 2
        )
    return (
        (0.30 + 0.06 * speed) * np.sin(2 * np.pi * s - 0.6)
        + 0.10 * np.cos(4 * np.pi * s)
        + 0.05 * np.sin(6 * np.pi * s + 0.2)
        + 0.35
        + 0.003 * incline * np.sin(np.pi * s) ** 2
    )


def _subject_bump(rng: np.random.Generator) -> np.ndarray:
    """A persistent individual deviation: a smooth bump at a random phase."""
    center = rng.uniform(0.2, 0.8)
    amplitude = rng.normal(0.0, 0.03)
    return amplitude * np.exp(-(((PHASE_GRID - center) / 0.12) ** 2))


def _swing_taper(stance_end: float = 0.6) -> np.ndarray:
    """Rolls swing torque off smoothly; joint torques live mostly in stance."""
    taper = np.ones(N_PHASE)
    swing = PHASE_GRID > stance_end
    u = (PHASE_GRID[swing] - stance_end) / (1.0 - stance_end)
    taper[swing] = 0.15 + 0.85 * np.cos(0.5 * np.pi * u) ** 2
    return taper


def generate_walking_csv(
    path: str,
    n_subjects: int = 3,
    speeds=DEMO_SPEEDS,
    inclines=DEMO_INCLINES,
    joints=("ankle", "knee"),
    strides_per_task: int = 4,
    seed: int = 0,
) -> str:
    rng = np.random.default_rng(seed)
    bumps = {
        (f"S{i + 1:02d}", joint): _subject_bump(rng)
        for i in range(n_subjects)
        for joint in joints
    }
    taper = _swing_taper()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in range(n_subjects):
            subject = f"S{i + 1:02d}"
            for speed in speeds:
                duration = 1.2 / speed
                for incline in inclines:
                    for joint in joints:
                        k, e, b = _true_triple(joint, speed, incline)
                        K = poly_eval(k, PHASE_GRID)
                        E = poly_eval(e, PHASE_GRID)
                        B = poly_eval(b, PHASE_GRID)
                        base = _base_angle(joint, speed, incline)
                        for stride_id in range(1, strides_per_task + 1):
                            wobble = 0.01 * np.sin(
                                2 * np.pi * PHASE_GRID + rng.uniform(0, 2 * np.pi)
                            )
                            angle = base + bumps[(subject, joint)] + wobble
                            velocity = np.gradient(angle, PHASE_STEP) / duration
                            torque = impedance_torque(K, E, B, angle, velocity) * taper
                            _write_stride(
                                writer,
                                subject,
                                speed,
                                incline,
                                joint,
                                stride_id,
                                duration,
                                angle,
                                velocity,
                                torque,
                            )
    return path


def demo_sitstand_model() -> SitStandModel:
    return SitStandModel(
        k=np.array([1.5, 0.5, -0.3, 0.2, 0.0]),
        b=np.array([0.06, 0.05, -0.04, 0.0, 0.0]),
        e1=np.array([1.2, -0.9, 0.1, 0.0, 0.0]),
        e2=np.array([0.3, -0.2, 0.0, 0.0, 0.0]),
        joint="knee",
        relu_lo=0.0,
        relu_hi=0.35,
    )


def generate_sitstand_csv(path: str, n_motions: int = 6, seed: int = 1) -> str:
    rng = np.random.default_rng(seed)
    model = demo_sitstand_model()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for motion in range(1, n_motions + 1):
            rising = motion % 2 == 1
            duration = 2.0
            vel_scale = rng.uniform(0.5, 0.9) * (1.0 if rising else -0.7)
            angle = 1.3 - 1.1 * PHASE_GRID + 0.1 * np.sin(
                np.pi * PHASE_GRID + rng.uniform(0, 0.4)
            )
            velocity = vel_scale * np.sin(np.pi * PHASE_GRID) + (
                0.1 if rising else -0.05
            )
            torque = eval_sitstand_torque(model, PHASE_GRID, angle, velocity)
            _write_stride(
                writer, "SS01", 0.0, 0.0, "knee", motion, duration, angle, velocity, torque
            )
    return path


def _write_stride(
    writer, subject, speed, incline, joint, stride_id, duration, angle, velocity, torque
):
    angle_deg = np.degrees(angle)
    velocity_deg = np.degrees(velocity)
    for i in range(N_PHASE):
        writer.writerow(
            [
                subject,
                repr(float(speed)),
                repr(float(incline)),
                joint,
                stride_id,
                repr(float(duration)),
                i + 1,
                repr(float(angle_deg[i])),
                repr(float(velocity_deg[i])),
                repr(float(torque[i])),
            ]
        )


def generate_demo_session(directory: str, n_subjects: int = 3, seed: int = 0) -> dict:
    """Write walking and sit-stand CSVs; returns their paths."""
    os.makedirs(directory, exist_ok=True)
    walking = generate_walking_csv(
        os.path.join(directory, "walking.csv"), n_subjects=n_subjects, seed=seed
    )
    sitstand = generate_sitstand_csv(os.path.join(directory, "sitstand.csv"), seed=seed + 1)
    return {"walking": walking, "sitstand": sitstand}
