"""Workbench for synthesizing and tuning continuous-phase prosthesis controllers."""

from .data import (
    ANGLE,
    JOINTS,
    N_PHASE,
    PHASE_GRID,
    TORQUE,
    VELOCITY,
    Dataset,
    PhaseSeries,
    Stride,
    StrideSet,
    Task,
    grand_mean,
    load_dataset,
    loo_mean,
    mean_trajectory,
    save_dataset,
    split_strides,
    subject_mean,
)
from .impedance import (
    ConstraintProfile,
    FitResult,
    ImpedancePolynomials,
    ImpedanceRegressor,
    eval_impedance,
    fit_impedance,
    impedance_torque,
    vaf,
)
from .individuality import (
    IndividualContribution,
    ValidationReport,
    individual_contribution,
    individualize,
    paired_t_one_tailed,
    rmse,
    validate_dataset,
)
from .kinematics import (
    PhaseTaskKinematics,
    eval_bernstein,
    eval_model,
    fit_kinematic_model,
)
from .sitstand import (
    ScalingSchedule,
    SitStandModel,
    blended_scale,
    eval_sitstand_torque,
    fit_sitstand,
    phase_from_thigh,
    velocity_blend,
)
from .config import WorkbenchConfig, load_config
from .tuning import (
    ModelBundle,
    TuningProfile,
    TuningSpline,
    apply_stance_resistance,
    build_bundle,
    build_flexion_spline,
    build_pushoff_spline,
    preset_profile,
    propagate_pushoff,
    regenerate,
)
from .replay import (
    ComparisonReport,
    ReplayResult,
    compare,
    compare_sitstand,
    replay_sitstand,
    replay_walk,
)
from .session import (
    SessionStore,
    Workbench,
    export_bundle,
    import_bundle,
    load_sitstand_reference,
)

__version__ = "0.1.0"
