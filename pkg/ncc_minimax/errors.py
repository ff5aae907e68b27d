"""
Exception types raised by the ncc_minimax library.

The orchestration layer (harness, service) turns these into result dictionaries;
library code only raises.
"""


class NCCError(Exception):
    """Base class for all library errors"""


class ArgumentError(NCCError, ValueError):
    """Invalid argument: dimension mismatch, out-of-range index, empty batch, bad step"""


class ConfigError(NCCError, ValueError):
    """Solver or experiment configuration violates a documented invariant"""


class DataFormatError(ArgumentError):
    """Malformed dataset input"""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        if line_number:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EstimatorError(NCCError, RuntimeError):
    """Estimator state cannot support the requested update"""


class UnsupportedProblemError(NCCError, NotImplementedError):
    """Problem does not expose the requested closed form"""


class DiagnosticError(NCCError, RuntimeError):
    """Inner oracle of a diagnostic did not converge"""
