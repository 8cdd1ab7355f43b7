"""Exception hierarchy shared by all eptrack modules."""


class EPTrackError(Exception):
    """Base class for every error raised by eptrack."""


class DimensionError(EPTrackError, ValueError):
    pass


class ContractViolation(EPTrackError, ValueError):
    """An input does not satisfy a documented precondition."""


class SelfOrthogonal(EPTrackError, ArithmeticError):
    """The vector has (numerically) vanishing c-norm and cannot be c-normalized."""


class Defective(EPTrackError, ArithmeticError):
    """A matrix that was assumed diagonalizable has a Jordan block."""


class UnsupportedDegeneracy(EPTrackError):
    """Three or more levels meet at one point; only binary crossings are handled."""


class SingularDenominator(EPTrackError, ArithmeticError):
    """The lambda-velocity denominator (c|dH/dlambda|c) vanished."""


class NearCollision(EPTrackError, ArithmeticError):
    """Two energies entering an EOM denominator came too close.

    Attributes
    ----------
    delta : float
        Value of the switching parameter at which the collision was detected.
    pair : tuple
        Labels of the two colliding levels, e.g. ``("ep", 0, "ord", 3)``.
    """

    def __init__(self, message, delta=float("nan"), pair=(), record=None):
        super().__init__(message)
        self.delta = delta
        self.pair = tuple(pair)
        self.record = record


class ToleranceBreach(EPTrackError):
    """A consistency check exceeded the requested tolerance during propagation."""

    def __init__(self, message, delta=float("nan"), report=None, record=None):
        super().__init__(message)
        self.delta = delta
        self.report = report
        self.record = record


class ConstructionError(EPTrackError):
    """An assembled initial state failed its own exactness check."""


class ResolutionFailed(EPTrackError):
    """No cluster/sign hypothesis for a crossing multiplet survived the trial probes.

    ``table`` lists one row per tried hypothesis with the reason it was rejected.
    """

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = list(table or [])


class NotFound(EPTrackError):
    """The EP locator did not converge."""


class NotAnEp(EPTrackError):
    """The locator converged to a degeneracy that is diagonalizable."""

    def __init__(self, message, candidate=None):
        super().__init__(message)
        self.candidate = candidate
