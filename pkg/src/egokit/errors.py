"""Exception hierarchy shared by every egokit module."""


class EgoError(Exception):
    """Base class for all errors raised by egokit."""


class DimensionMismatch(EgoError, ValueError):
    pass


class InvalidParameter(EgoError, ValueError):
    pass


class NotPositiveDefinite(EgoError, ArithmeticError):
    """A Cholesky pivot was not strictly positive."""


class DegenerateDesign(EgoError, ArithmeticError):
    """The covariance system cannot be factorized, or the data carry no signal."""


class DuplicatePoints(EgoError, ValueError):
    pass


class DegenerateData(EgoError, ValueError):
    pass


class RankDeficient(EgoError, ValueError):
    pass


class InsufficientPoints(EgoError, ValueError):
    pass


class DegenerateAbscissae(EgoError, ValueError):
    pass


class NonPhysical(EgoError, ValueError):
    pass


class OutOfDomain(EgoError, ValueError):
    pass


class InvalidConfig(EgoError, ValueError):
    pass


class MismatchedTell(EgoError, ValueError):
    """Told points do not match the outstanding request."""


class NonFiniteValue(EgoError, ValueError):
    pass


class BudgetExhausted(EgoError, RuntimeError):
    pass
