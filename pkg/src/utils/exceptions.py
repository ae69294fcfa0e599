"""Custom exception classes for the application."""

class CondensateKineticsError(Exception):
    """Base class for every error raised by the simulation engine."""
    pass

class ConfigurationError(CondensateKineticsError):
    """Raised when a run configuration is missing keys or holds invalid values."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations: list[str] = violations or []

class NumericFailure(CondensateKineticsError):
    """Raised when a numerical procedure cannot deliver a trustworthy result."""
    pass

class SolverConvergenceError(NumericFailure):
    """Raised when the Lagrange-parameter root finder does not converge."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None, residual: float | None = None):
        super().__init__(message)
        self.bracket = bracket
        self.residual = residual

class NumericRangeError(NumericFailure):
    """Raised when a log-domain quantity leaves the representable range."""
    pass

class IntegrationError(NumericFailure):
    """Raised when time integration of the master equation fails."""
    pass

class ProbabilityLeakError(NumericFailure):
    """Raised when accumulated negative-probability clipping exceeds its limit."""
    pass

class StructuralModelError(CondensateKineticsError):
    """Raised when the physical model itself is ill-posed for the request."""
    pass

class EmptySpectrumError(StructuralModelError):
    """Raised when no excited mode survives the energy cutoff."""
    pass

class StateSpaceTooLargeError(StructuralModelError):
    """Raised when brute-force enumeration would exceed its state limit."""
    pass

class DetailedBalanceChainError(StructuralModelError):
    """Raised when a loss rate needed by the steady-state chain vanishes."""

    def __init__(self, message: str, link: int):
        super().__init__(message)
        self.link = link
