"""
Exception hierarchy for plvc

Every library error carries a ``details`` mapping that the CLI serialises
into its machine-readable error record.
"""
from typing import Any, Dict, Optional


class PLVCError(Exception):
    """Base class for all plvc errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_record(self) -> Dict[str, Any]:
        """Machine-readable error record"""
        return {
            "type": self.__class__.__name__,
            "message": self.message,
            "details": self.details,
        }


class ConfigError(PLVCError):
    """Invalid or inconsistent run configuration"""


class IngestionError(PLVCError):
    """Dataset could not be read or validated"""


class BasisDomainError(PLVCError):
    """Index value outside the basis support (strict mode)"""


class InvalidDomainError(BasisDomainError):
    """Knot range with lo >= hi"""


class UnsupportedDegreeError(PLVCError):
    """Spline degree outside the supported set"""


class CollinearityError(PLVCError):
    """Linear block is (numerically) inside the varying-coefficient space"""


class SaturationError(PLVCError):
    """Leave-one-out undefined because the fit interpolates an observation"""


class SelectionError(PLVCError):
    """No candidate in a selection grid could be evaluated"""


class LocalRankError(PLVCError):
    """Local kernel design is singular at an evaluation point"""


class DegenerateFitError(PLVCError):
    """Residual sum of squares is not positive"""


class BootstrapError(PLVCError):
    """Too many bootstrap replicates failed"""


class ReportInvalidError(PLVCError):
    """A study finished but too many replications failed for its metrics to be trusted"""
