"""Bernstein task polynomials and the periodic phase/task kinematic model."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaittune.data import N_PHASE, PHASE_GRID, Task
from gaittune.errors import (
    OutOfHullWarning,
    PhaseOutOfRangeError,
    RankDeficientTaskGridError,
)
from gaittune.kinematics import (
    PhaseTaskKinematics,
    bernstein_basis,
    eval_bernstein,
    eval_model,
    fourier_features,
)

GRID_TASKS = [Task(s, i) for s in (0.8, 1.0, 1.2) for i in (-10.0, -5.0, 0.0, 5.0, 10.0)]


class TestBernstein:
    def test_endpoints(self):
        coeffs = [0.3, -0.7, 1.1, 0.2]
        assert eval_bernstein(coeffs, 0.0) == pytest.approx(0.3, abs=1e-15)
        assert eval_bernstein(coeffs, 1.0) == pytest.approx(0.2, abs=1e-15)

    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(-5, 5))
    def test_partition_of_unity(self, x, value):
        for degree in (2, 3):
            out = eval_bernstein([value] * (degree + 1), x)
            assert abs(out - value) <= 1e-12

    def test_quadratic_middle_coefficient(self):
        # C(2,1) * 0.5 * 0.5 = 0.5
        assert eval_bernstein([0.0, 1.0, 0.0], 0.5) == pytest.approx(0.5, abs=1e-15)

    def test_out_of_range_clamps_with_warning(self):
        coeffs = [1.0, 2.0, 3.0]
        with pytest.warns(OutOfHullWarning):
            clamped = eval_bernstein(coeffs, 1.4)
        assert clamped == pytest.approx(3.0, abs=1e-15)

    def test_basis_rows_sum_to_one(self):
        x = np.linspace(0, 1, 17)
        for degree in (1, 2, 3, 5):
            rows = bernstein_basis(x, degree)
            np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-14)


class TestFourierFeatures:
    def test_periodic_rows_identical_at_ends(self):
        ends = fourier_features(np.array([0.0, 1.0]))
        assert np.array_equal(ends[0], ends[1])

    def test_feature_count(self):
        assert fourier_features(np.array([0.3])).shape == (1, 21)


def _in_span_target(task: Task) -> np.ndarray:
    return (0.1 + 0.05 * task.speed) * np.sin(2 * np.pi * PHASE_GRID)


@pytest.fixture(scope="module")
def fitted():
    Y = np.array([_in_span_target(t) for t in GRID_TASKS])
    return PhaseTaskKinematics(joint="knee").fit(GRID_TASKS, Y)


class TestPhaseTaskKinematics:

    def test_constant_model(self):
        Y = np.full((len(GRID_TASKS), N_PHASE), 0.3)
        model = PhaseTaskKinematics(joint="ankle").fit(GRID_TASKS, Y)
        for s in (0.0, 0.37, 1.0):
            assert eval_model(model, s, Task(1.0, 0.0)) == pytest.approx(0.3, abs=1e-12)

    def test_in_span_target_reproduced(self, fitted):
        for task in GRID_TASKS:
            pred = fitted.predict_series(task)
            rms = np.sqrt(np.mean((pred - _in_span_target(task)) ** 2))
            assert rms <= 1e-6

    def test_periodicity_over_task_sweep(self, fitted):
        rng = np.random.default_rng(0)
        for _ in range(100):
            task = Task(rng.uniform(0.8, 1.2), rng.uniform(-10, 10))
            gap = abs(eval_model(fitted, 0.0, task) - eval_model(fitted, 1.0, task))
            assert gap <= 1e-12

    def test_refit_deterministic(self):
        Y = np.array([_in_span_target(t) for t in GRID_TASKS])
        a = PhaseTaskKinematics(joint="knee").fit(GRID_TASKS, Y)
        b = PhaseTaskKinematics(joint="knee").fit(GRID_TASKS, Y)
        assert np.array_equal(a.fourier_coeffs_, b.fourier_coeffs_)
        assert np.array_equal(a.task_coeffs_, b.task_coeffs_)

    def test_rank_deficient_speed_axis(self):
        tasks = [Task(s, i) for s in (0.8, 1.2) for i in (-10.0, -5.0, 0.0, 5.0, 10.0)]
        Y = np.zeros((len(tasks), N_PHASE))
        with pytest.raises(RankDeficientTaskGridError):
            PhaseTaskKinematics(joint="knee", speed_degree=3, incline_degree=3).fit(tasks, Y)

    def test_phase_out_of_range(self, fitted):
        with pytest.raises(PhaseOutOfRangeError):
            fitted.predict(np.array([[1.5, 1.0, 0.0]]))

    def test_out_of_hull_task_clamped(self, fitted):
        with pytest.warns(OutOfHullWarning):
            outside = eval_model(fitted, 0.25, Task(2.0, 0.0))
        inside = eval_model(fitted, 0.25, Task(1.2, 0.0))
        assert outside == pytest.approx(inside, abs=1e-12)

    def test_serialization_round_trip(self, fitted):
        back = PhaseTaskKinematics.from_dict(fitted.to_dict())
        for task in GRID_TASKS[:3]:
            np.testing.assert_allclose(
                back.predict_series(task), fitted.predict_series(task), atol=1e-12
            )

    def test_get_params(self):
        model = PhaseTaskKinematics(joint="ankle", variance_keep=0.99)
        params = model.get_params()
        assert params["joint"] == "ankle"
        assert params["variance_keep"] == 0.99


class TestFitFromDataset:
    def test_zero_override_identical(self, demo_dataset):
        from gaittune.kinematics import fit_kinematic_model

        plain = fit_kinematic_model(demo_dataset, "knee")
        zeroed = fit_kinematic_model(
            demo_dataset,
            "knee",
            training_overrides={t: np.zeros(N_PHASE) for t in demo_dataset.tasks},
        )
        assert np.array_equal(plain.fourier_coeffs_, zeroed.fourier_coeffs_)
        assert np.array_equal(plain.task_coeffs_, zeroed.task_coeffs_)

    def test_override_linearity(self, demo_dataset):
        # linearity is a property of the untruncated least-squares surface,
        # so keep every basis; the variance cutoff is a lossy compression
        from gaittune.kinematics import fit_kinematic_model

        bump = 0.1 * np.sin(2 * np.pi * PHASE_GRID) ** 2
        overrides = {t: bump for t in demo_dataset.tasks}
        plain = fit_kinematic_model(demo_dataset, "knee", variance_keep=1.0)
        shifted = fit_kinematic_model(
            demo_dataset, "knee", training_overrides=overrides, variance_keep=1.0
        )
        task = Task(1.0, 0.0)
        zero_data = np.zeros((len(demo_dataset.tasks), N_PHASE))
        bump_only = PhaseTaskKinematics(joint="knee", variance_keep=1.0).fit(
            list(demo_dataset.tasks), zero_data + bump
        )
        combined = plain.predict_series(task) + bump_only.predict_series(task)
        np.testing.assert_allclose(shifted.predict_series(task), combined, atol=1e-9)

    def test_training_vaf_reported(self, demo_dataset):
        from gaittune.kinematics import fit_kinematic_model

        model = fit_kinematic_model(demo_dataset, "ankle")
        assert set(model.train_vaf_) == set(demo_dataset.tasks)
        assert all(v > 0.95 for v in model.train_vaf_.values())
