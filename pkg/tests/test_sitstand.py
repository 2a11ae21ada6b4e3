"""Sit-stand phase mapping, the velocity ramp, torque scaling, and the fit."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaittune.errors import (
    DegenerateCalibrationError,
    InfeasibleConstraintsError,
    PhaseOutOfRangeError,
    RegimeNotExcitedWarning,
    SeparationExceededError,
)
from gaittune.impedance import ConstraintProfile
from gaittune.sitstand import (
    LOWERING,
    RISING,
    ScalingSchedule,
    SitStandModel,
    blended_scale,
    eval_sitstand_torque,
    fit_sitstand,
    phase_from_thigh,
    velocity_blend,
)

from tests.helpers import DEFAULT_SITSTAND, sitstand_strides

SS_CONSTRAINTS = ConstraintProfile.from_scalars(
    k_min=0.2, heel_strike_k_min=0.2, b_min=0.0, b_max=0.15
)


class TestPhaseFromThigh:
    def test_endpoints(self):
        assert phase_from_thigh(1.4, 1.4, 0.1) == 0.0
        assert phase_from_thigh(0.1, 1.4, 0.1) == 1.0

    def test_midpoint(self):
        assert phase_from_thigh(0.75, 1.4, 0.1) == pytest.approx(0.5)

    def test_clamps_beyond_standing(self):
        assert phase_from_thigh(-0.2, 1.4, 0.1) == 1.0
        assert phase_from_thigh(1.6, 1.4, 0.1) == 0.0

    def test_degenerate_calibration(self):
        with pytest.raises(DegenerateCalibrationError):
            phase_from_thigh(0.5, 0.7, 0.7)


class TestVelocityBlend:
    def test_endpoints(self):
        assert velocity_blend(0.0, 0.0, 0.35) == 0.0
        assert velocity_blend(0.35, 0.0, 0.35) == 1.0

    def test_midpoint(self):
        assert velocity_blend(0.175, 0.0, 0.35) == pytest.approx(0.5)

    def test_sweep_matches_clamped_line(self):
        lo, hi = -0.1, 0.4
        sweep = np.linspace(-1.0, 1.0, 801)
        expected = np.clip((sweep - lo) / (hi - lo), 0.0, 1.0)
        np.testing.assert_allclose(velocity_blend(sweep, lo, hi), expected, atol=1e-15)

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_monotone(self, a, b):
        lo, hi = 0.0, 0.35
        low, high = min(a, b), max(a, b)
        assert velocity_blend(low, lo, hi) <= velocity_blend(high, lo, hi)

    def test_invalid_ramp(self):
        with pytest.raises(ValueError):
            velocity_blend(0.1, 0.5, 0.5)


class TestEvalTorque:
    def test_zero_blend_uses_first_equilibrium(self):
        model = DEFAULT_SITSTAND
        s, theta = 0.4, 0.8
        # velocity at the lower ramp edge keeps the blend at zero
        torque = eval_sitstand_torque(model, s, theta, model.relu_lo)
        from gaittune.impedance import poly_eval

        K = poly_eval(model.k, s)
        B = poly_eval(model.b, s)
        e1 = poly_eval(model.e1, s)
        expected = -K * (theta - e1) - B * model.relu_lo
        assert torque == pytest.approx(expected, abs=1e-15)

    def test_zero_torque_at_blended_equilibrium(self):
        from gaittune.impedance import poly_eval

        model = DEFAULT_SITSTAND
        s = 0.6
        theta_dot = 0.0
        f = velocity_blend(theta_dot, model.relu_lo, model.relu_hi)
        theta = poly_eval(model.e1, s) + f * poly_eval(model.e2, s)
        assert eval_sitstand_torque(model, s, theta, theta_dot) == pytest.approx(0.0, abs=1e-15)

    def test_matches_direct_formula(self):
        from gaittune.impedance import poly_eval

        rng = np.random.default_rng(5)
        model = DEFAULT_SITSTAND
        for _ in range(50):
            s = rng.uniform(0, 1)
            theta = rng.uniform(-0.5, 1.5)
            theta_dot = rng.uniform(-1, 1)
            f = np.clip((theta_dot - model.relu_lo) / (model.relu_hi - model.relu_lo), 0, 1)
            eq = poly_eval(model.e1, s) + f * poly_eval(model.e2, s)
            expected = -poly_eval(model.k, s) * (theta - eq) - poly_eval(model.b, s) * theta_dot
            got = eval_sitstand_torque(model, s, theta, theta_dot)
            assert abs(got - expected) <= 1e-12

    def test_continuous_in_velocity(self):
        model = DEFAULT_SITSTAND
        for edge in (model.relu_lo, model.relu_hi):
            below = eval_sitstand_torque(model, 0.5, 0.6, edge - 1e-9)
            above = eval_sitstand_torque(model, 0.5, 0.6, edge + 1e-9)
            assert abs(above - below) < 1e-6

    def test_phase_out_of_range(self):
        with pytest.raises(PhaseOutOfRangeError):
            eval_sitstand_torque(DEFAULT_SITSTAND, 1.1, 0.5, 0.0)


class TestModelInvariants:
    def test_split_equilibrium_knee_only(self):
        with pytest.raises(ValueError):
            SitStandModel(
                k=DEFAULT_SITSTAND.k,
                b=DEFAULT_SITSTAND.b,
                e1=DEFAULT_SITSTAND.e1,
                e2=DEFAULT_SITSTAND.e2,
                joint="ankle",
                relu_lo=0.0,
                relu_hi=0.35,
            )

    def test_ramp_ordering_enforced(self):
        with pytest.raises(ValueError):
            SitStandModel(
                k=DEFAULT_SITSTAND.k,
                b=DEFAULT_SITSTAND.b,
                e1=DEFAULT_SITSTAND.e1,
                e2=np.zeros(5),
                joint="knee",
                relu_lo=0.5,
                relu_hi=0.2,
            )


class TestScalingSchedule:
    def test_separation_cap(self):
        with pytest.raises(SeparationExceededError):
            ScalingSchedule(sit_to_stand_scale=0.41, stand_to_sit_scale=-0.20)

    def test_at_cap_allowed(self):
        ScalingSchedule(sit_to_stand_scale=0.30, stand_to_sit_scale=-0.30)

    def test_blend_width_bounds(self):
        with pytest.raises(ValueError):
            ScalingSchedule(0.1, 0.1, blend_width=0.0)


class TestBlendedScale:
    def test_equal_scales_constant(self):
        schedule = ScalingSchedule(0.25, 0.25)
        for s in np.linspace(0, 1, 21):
            for direction in (RISING, LOWERING):
                assert blended_scale(float(s), direction, schedule) == pytest.approx(0.25)

    def test_rising_blend_midpoint(self):
        schedule = ScalingSchedule(0.2, 0.0)
        assert blended_scale(0.95, RISING, schedule) == pytest.approx(0.10, abs=1e-15)

    def test_directions_agree_at_standing(self):
        schedule = ScalingSchedule(0.2, -0.1)
        gap = abs(
            blended_scale(1.0, RISING, schedule) - blended_scale(1.0, LOWERING, schedule)
        )
        assert gap <= 1e-12

    def test_directions_agree_at_seated(self):
        schedule = ScalingSchedule(0.2, -0.1)
        gap = abs(
            blended_scale(0.0, RISING, schedule) - blended_scale(0.0, LOWERING, schedule)
        )
        assert gap <= 1e-12

    def test_continuity_in_phase(self):
        schedule = ScalingSchedule(0.3, -0.2)
        grid = np.linspace(0, 1, 2001)
        for direction in (RISING, LOWERING):
            values = [blended_scale(float(s), direction, schedule) for s in grid]
            jumps = np.abs(np.diff(values))
            assert jumps.max() < 0.01  # bounded slope, no steps

    def test_phase_out_of_range(self):
        with pytest.raises(PhaseOutOfRangeError):
            blended_scale(1.2, RISING, ScalingSchedule(0.1, 0.1))

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            blended_scale(0.5, "sideways", ScalingSchedule(0.1, 0.1))


class TestFitSitStand:
    def test_recovery_with_both_regimes(self):
        strides = sitstand_strides()
        model, result = fit_sitstand(strides, SS_CONSTRAINTS)
        assert result.vaf >= 0.99
        assert result.constraint_violation_max <= 1e-6
        assert result.kkt_residual <= 1e-8
        assert np.any(model.e2 != 0.0)

    def test_single_regime_warns_and_zeroes_split(self):
        strides = sitstand_strides(one_regime=True)
        with pytest.warns(RegimeNotExcitedWarning):
            model, result = fit_sitstand(strides, SS_CONSTRAINTS)
        assert np.all(model.e2 == 0.0)

    def test_contradictory_bounds(self):
        bad = ConstraintProfile.from_scalars(
            k_min=0.2, heel_strike_k_min=0.2, b_min=0.2, b_max=0.1
        )
        with pytest.raises(InfeasibleConstraintsError):
            fit_sitstand(sitstand_strides(), bad)
