class ToolkitError(ValueError):
    """Base class for every validation or evaluation error raised by the toolkit."""


class DomainError(ToolkitError):
    """Invalid geometry, a support touching the boundary, or a mollifier too wide for its region."""


class ResolutionError(ToolkitError):
    """Sample counts below the minimum or radii out of order."""


class SingularPointError(ToolkitError):
    """Evaluation requested at a declared singular point of a map."""


class DegreeUndefinedError(ToolkitError):
    """The probe point lies on the sampled boundary image."""


class QuadratureError(ToolkitError):
    """Nothing left to integrate after the diagonal exclusion."""


class UnknownMapError(ToolkitError):
    """Unknown gallery name or invalid gallery parameters."""


class DimensionError(ToolkitError):
    """A planar-only operation was called with n != 2."""


class CalibrationError(ToolkitError):
    """The constants file is missing, stale, or lacks a fitted family."""


class ParameterError(ToolkitError):
    """Fractional exponents outside the range an operation needs."""
