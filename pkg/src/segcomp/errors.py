"""Exception hierarchy shared across the package."""


class SegcompError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(SegcompError):
    """Malformed inputs: non-square or asymmetric interaction matrix, size mismatches."""


class AdmissibilityError(SegcompError):
    """An input lies outside the admissible coefficient box."""


class EmptySupportError(SegcompError):
    """An eigenvalue was requested on an empty node set."""


class StepError(SegcompError):
    """An inner linear solve failed to reach its tolerance."""

    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class BlowUpError(SegcompError):
    """The marched state exceeded the a priori sup-norm guard."""


class SingularJacobianError(SegcompError):
    """Newton hit a numerically singular Jacobian."""


class StagnationError(SegcompError):
    """Newton could not decrease the residual after repeated step halving."""


class ConfigError(SegcompError):
    """Bad configuration document (syntax, unknown key, type mismatch)."""


class SnapshotError(SegcompError):
    """Corrupt or incompatible snapshot file."""


class IsolationViolation(SegcompError):
    """A probe trial converged to a nonzero steady state below the isolation threshold."""
