"""
Exception hierarchy for universim
"""


class UniversimError(Exception):
    """Base class for all universim errors"""

    exit_code = 1


class ConfigError(UniversimError, ValueError):
    """Invalid experiment configuration"""

    exit_code = 2


class InvariantViolation(UniversimError):
    """An experiment row broke one of its invariant checks"""

    exit_code = 3

    def __init__(self, message: str, row: dict = None):
        super().__init__(message)
        self.row = row or {}


class SizeCapError(UniversimError):
    """Enumeration exceeded its size cap"""

    exit_code = 4


class DomainError(UniversimError, ValueError):
    """Argument outside the domain of an operation"""


class PreconditionError(UniversimError, ValueError):
    """Operation called on inputs that break its precondition"""


class UnsupportedPairError(UniversimError, ValueError):
    """Metric is not defined for this pair of distribution classes"""


class NumericError(UniversimError, ArithmeticError):
    """Numerical routine failed to converge"""

    def __init__(self, message: str, cell_index: int = None):
        super().__init__(message)
        self.cell_index = cell_index
