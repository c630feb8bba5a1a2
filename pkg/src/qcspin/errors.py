"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class InfraredDivergenceError(DomainError):
    """An integral diverges at omega -> 0 for the given exponents."""

    def __init__(self, message, exponent=None):
        super().__init__(message)
        self.exponent = exponent


class UsageError(ValueError):
    """Operation called with inputs that violate its contract."""


class IntegrationError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message, value=None, abserr=None, diagnostics=None):
        super().__init__(message)
        self.value = value
        self.abserr = abserr
        self.diagnostics = diagnostics or {}


class StiffnessError(RuntimeError):
    """ODE step size underflowed."""


class SamplingError(RuntimeError):
    """Too many sampled trajectories failed to propagate."""
