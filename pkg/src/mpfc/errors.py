"""Exception hierarchy for the mpfc package."""

from __future__ import annotations


class MpfcError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(MpfcError):
    """Invalid run configuration (bad parameters, CFL violation, unknown keys)."""


class SolverFailureError(MpfcError):
    """A linear solve did not meet its residual contract."""


class DegenerateDenominatorError(MpfcError):
    """A quotient multiplier hit a zero denominator with regularization disabled."""

    def __init__(self, message: str, cell_index: tuple[int, ...]):
        super().__init__(message)
        self.cell_index = cell_index


class BlowUpError(MpfcError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, step_index: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.time = time


class ProjectionError(MpfcError):
    """Constraint projection failed (bad bracket or state too far off manifold)."""


class ProjectionSingularError(ProjectionError):
    """Radial projection undefined: zero vector encountered."""


class ScenarioError(MpfcError):
    """Initial-data geometry does not fit the grid or interfaces overlap."""


class SnapshotFormatError(MpfcError):
    """Snapshot file is corrupt, truncated, or has the wrong version/shape."""


class InputError(MpfcError):
    """Diagnostic or analysis routine received unusable input."""
