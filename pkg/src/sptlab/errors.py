"""Exception types shared across the package."""


class SptlabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SptlabError, ValueError):
    """An input violates a documented precondition (bad prices, mismatched shapes, ...)."""


class InsufficientDataError(SptlabError, ValueError):
    """Not enough observations to run an estimator."""


class EvaluationError(SptlabError, ValueError):
    """A generating function or derivative evaluated to a non-finite/invalid value."""


class ParamConstraintError(SptlabError, ValueError):
    """Model parameters violate a stability constraint."""


class MissingCarryError(SptlabError, ValueError):
    """Required futures quotes are missing for a carry computation."""
