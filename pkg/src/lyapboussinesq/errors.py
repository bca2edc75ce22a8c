"""Exception hierarchy.

Validation problems derive from ``ValueError`` so callers that only care
about bad input can catch the builtin.  Numerical failures share
``NumericalFailure``; the command line maps them to exit status 2.
"""


class BoussinesqError(Exception):
    """Base class for every error raised by this package."""


class GridError(BoussinesqError, ValueError):
    """Invalid discretization parameters."""


class DimensionError(BoussinesqError, ValueError):
    """Operands with incompatible shapes."""


class ConfigError(BoussinesqError, ValueError):
    """Malformed or invalid run configuration."""


class SnapshotFormatError(BoussinesqError, ValueError):
    """A snapshot file does not follow the expected layout."""


class ProfileError(BoussinesqError, ValueError):
    """A profile lacks the analytic data an operation needs."""


class NumericalFailure(BoussinesqError):
    """Base for failures of the numerical method itself."""


class ContractionError(NumericalFailure):
    """The fixed-point map is not a contraction (q >= 1)."""

    def __init__(self, q):
        self.q = q
        super().__init__(
            f"contraction violated: q = {q:.6g} >= 1; the time step is too "
            "large for the space step (need l = eps*h^(2+s) with h small)"
        )


class ConvergenceError(NumericalFailure):
    """Iteration budget exhausted before reaching the tolerance."""


class SingularOperatorError(NumericalFailure):
    """Pivoted elimination met a pivot below the singularity threshold."""

    def __init__(self, pivot, threshold, index):
        self.pivot = pivot
        self.threshold = threshold
        self.index = index
        super().__init__(
            f"singular system: |pivot| = {pivot:.3e} at column {index} "
            f"is below threshold {threshold:.3e}"
        )


class CapExceededError(NumericalFailure, ValueError):
    """Dense Kronecker system requested above the configured size cap."""


class BlowUpError(NumericalFailure):
    """Non-finite values appeared in the solution."""

    def __init__(self, step):
        self.step = step
        super().__init__(f"non-finite values in the solution at step n = {step}")
