"""Exception and warning types raised across the package."""


class ICTSError(Exception):
    """Base class for all package errors."""


class InvalidArgument(ICTSError, ValueError):
    pass


class InvalidCoefficients(ICTSError, ValueError):
    pass


class ContractViolation(ICTSError):
    pass


class UndefinedCoherence(ICTSError, ArithmeticError):
    """Raised when a degree of coherence is requested for a zero photon flux."""


class InsufficientSpan(ICTSError, ValueError):
    pass


class CutoffTooSmall(ICTSError):
    def __init__(self, message, leakage, suggested_cutoff):
        super().__init__(message)
        self.leakage = leakage
        self.suggested_cutoff = suggested_cutoff


class EstimationFailed(ICTSError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ICTSError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class OverlapWarning(UserWarning):
    """Two layer envelopes overlap enough to bias the visibility estimates."""
