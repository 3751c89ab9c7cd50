"""Exception types shared across the simulator."""


class NetgripError(Exception):
    """Base class for all simulator errors."""


class LinkageFitError(NetgripError):
    """No feasible linkage geometry for the requested endpoints.

    Carries the best residuals seen so the caller can report how far off
    the closest candidate was.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class MeshBuildError(NetgripError, ValueError):
    """Invalid net construction parameters (counts, radii, degenerate edges)."""


class SingularMeshError(NetgripError):
    """An edge collapsed to zero length; spring force direction undefined."""


class ConvergenceError(NetgripError):
    """Equilibrium solve did not reach tolerance within the iteration cap."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history if residual_history is not None else []


class TraceFormatError(NetgripError, ValueError):
    """Malformed trace data (bad CSV, non-monotone timestamps, ...)."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class InsufficientDataError(NetgripError, ValueError):
    """Trace too short for the requested segmentation."""


class ScenarioError(NetgripError, ValueError):
    """Scenario file failed validation; message names the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class RunError(NetgripError):
    """A scenario run aborted mid-way; carries the telemetry produced so far."""

    def __init__(self, message, frames=None):
        super().__init__(message)
        self.frames = frames if frames is not None else []
