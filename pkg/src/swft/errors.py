"""Exception types shared across the package."""


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed; message names the offending line."""


class GeometryError(ValueError):
    """Raised for degenerate or inconsistent mesh geometry."""


class ConfigError(ValueError):
    """Raised for invalid run configuration (bad keys, values, or boundary rules)."""


class PositivityError(RuntimeError):
    """Raised when a cell-average depth becomes negative during time stepping."""


class NumericsError(RuntimeError):
    """Raised when a state stops being finite (NaN/inf) during a run."""
