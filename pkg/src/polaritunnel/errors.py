"""Exception types raised by the library."""


class PolaritunnelError(Exception):
    """Base class for all library errors."""


class InvalidParameter(PolaritunnelError, ValueError):
    pass


class UnstableSystem(PolaritunnelError, ValueError):
    """The coupled potential has no metastable minimum (lower polariton not real)."""


class RWAViolation(PolaritunnelError, ValueError):
    pass


class DivergentResponse(PolaritunnelError, ArithmeticError):
    pass


class TruncationNotConverged(PolaritunnelError, ArithmeticError):
    pass


class GridTooCoarse(PolaritunnelError, ArithmeticError):
    pass


class StationaryPointNotFound(PolaritunnelError, RuntimeError):
    pass


class UnstableDraw(PolaritunnelError, RuntimeError):
    """Too many Monte Carlo coupling draws violated the stability condition."""
