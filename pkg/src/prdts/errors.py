"""Exception types raised by the sampling and oracle layers."""


class DomainError(ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class BackendUnavailableError(RuntimeError):
    """The requested TTS backend is not available in this build."""


class SamplerStallError(RuntimeError):
    """A rejection loop exceeded its iteration cap (almost surely a broken RNG)."""


class InsufficientSampleError(ValueError):
    """A statistical test was asked to run on too few observations."""
