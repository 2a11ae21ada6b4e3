"""Exception hierarchy shared across the workbench."""


class GaitTuneError(Exception):
    """Base class for all workbench errors."""


# --- dataset ingestion ------------------------------------------------------

class MissingFileError(GaitTuneError):
    pass


class SchemaMismatchError(GaitTuneError):
    pass


class NonFiniteSampleError(GaitTuneError):
    pass


class EmptyInputError(GaitTuneError):
    pass


class InsufficientSubjectsError(GaitTuneError):
    pass


class InsufficientStridesError(GaitTuneError):
    pass


# --- series algebra ---------------------------------------------------------

class KindMismatchError(GaitTuneError):
    pass


class LengthMismatchError(GaitTuneError):
    pass


class InsufficientSamplesError(GaitTuneError):
    pass


class PhaseOutOfRangeError(GaitTuneError):
    pass


# --- model fitting ----------------------------------------------------------

class InfeasibleConstraintsError(GaitTuneError):
    pass


class NonConvergenceError(GaitTuneError):
    pass


class ZeroVarianceReferenceError(GaitTuneError):
    pass


class RankDeficientTaskGridError(GaitTuneError):
    pass


class DegenerateCalibrationError(GaitTuneError):
    pass


class SeparationExceededError(GaitTuneError):
    pass


# --- tuning and bundles -----------------------------------------------------

class OutOfBoundsError(GaitTuneError):
    pass


class MissingBaselineTaskError(GaitTuneError):
    pass


class MissingModelError(GaitTuneError):
    pass


class UnmatchedPairsError(GaitTuneError):
    pass


class RegenerationRejectedError(GaitTuneError):
    pass


class RegenerationInFlightError(GaitTuneError):
    pass


# --- persistence ------------------------------------------------------------

class NotFoundError(GaitTuneError):
    pass


class ValidationFailedError(GaitTuneError):
    pass


class DirtyBundleError(GaitTuneError):
    pass


class DigestMismatchError(GaitTuneError):
    pass


class VersionUnsupportedError(GaitTuneError):
    pass


# --- warning categories -----------------------------------------------------

class SingularFitWarning(UserWarning):
    """Degenerate excitation detected; ridge regularization was applied."""


class RegimeNotExcitedWarning(UserWarning):
    """Velocity blend stayed in one regime; split equilibrium dropped."""


class OutOfHullWarning(UserWarning):
    """Task evaluated outside the training hull; inputs were clamped."""


class ConstraintClippedWarning(UserWarning):
    """A tuned constraint fell below its floor and was clipped."""
