"""Exception hierarchy shared by all solver modules."""


class NLGError(Exception):
    """Base class for errors raised by this package."""


class GridMismatchError(NLGError, ValueError):
    """Fields defined on different grids were combined."""


class CompatibilityError(NLGError, ValueError):
    """Neumann data does not integrate to zero over the boundary."""


class ZeroDataError(NLGError, ValueError):
    """Boundary data is identically zero."""


class ConvergenceError(NLGError, RuntimeError):
    """An iterative linear solve exceeded its iteration cap."""


class NonPositiveConductivity(NLGError, ValueError):
    pass


class DegenerateNormalization(NLGError, ArithmeticError):
    """The boundary pairing used for normalization is (numerically) zero."""


class DegenerateRenormalization(DegenerateNormalization):
    pass


class ProxNoConvergence(NLGError, RuntimeError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class NotInMg(NLGError, ValueError):
    """A candidate does not satisfy the boundary constraint <g, u> = 1."""


class NonConvergence(NLGError, RuntimeError):
    """The splitting iteration hit ``max_iter``; carries the partial result."""

    def __init__(self, message, u=None, T=None, report=None):
        super().__init__(message)
        self.u = u
        self.T = T
        self.report = report


class PreconditionError(NLGError, ValueError):
    pass


class FlatRegionWarning(UserWarning):
    """Some cells carry (numerically) zero gradient and were masked."""
