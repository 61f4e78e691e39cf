"""Exception hierarchy shared by all modules."""


class HelmholtzQMCError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(HelmholtzQMCError, ValueError):
    pass


class AssumptionViolation(HelmholtzQMCError):
    """A modelling assumption (field bounds, mode ordering, parameter window) fails."""


class NumericalFailure(HelmholtzQMCError, ArithmeticError):
    pass


class InvalidState(HelmholtzQMCError, RuntimeError):
    pass
