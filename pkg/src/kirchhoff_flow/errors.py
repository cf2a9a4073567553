"""Exception taxonomy.

ConfigError maps to CLI exit code 2, everything else under
KirchhoffFlowError maps to exit code 1.
"""


class KirchhoffFlowError(Exception):
    """Base class for solver failures."""


class ConfigError(KirchhoffFlowError, ValueError):
    """Invalid configuration: bad parameter ranges, malformed input files."""


class DimensionError(KirchhoffFlowError, ValueError):
    """Array length does not match the grid it is paired with."""


class NumericalError(KirchhoffFlowError):
    """Linear-algebra breakdown (non-finite data in an assembled system)."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class UnsupportedPotentialError(KirchhoffFlowError):
    """Operation requires derivative data the potential descriptor lacks."""


class StepFailure(KirchhoffFlowError):
    """Backtracking line search exhausted machine-precision step sizes."""


class CalibrationError(KirchhoffFlowError):
    """Initializer scaling search failed to reach the required energy level."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile or []


class DegenerateDeformationError(KirchhoffFlowError):
    """Every tracked simplex node fell into the sign cones."""


class ThresholdError(KirchhoffFlowError):
    """Deformation collapsed to zero; the initializer is below threshold."""


class ContinuationError(KirchhoffFlowError):
    """Warm-started continuation diverged; carries the last good iterate."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class OracleFailure(KirchhoffFlowError):
    """Shooting oracle could not bracket or meet its decay tolerance."""
