"""Exception hierarchy shared by all modules.

Every error raised on bad input derives from :class:`ValidationError`
(itself a ``ValueError``), so the command-line front end can map the whole
family onto a single exit code.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Base class for input/parameter problems."""

    kind = "validation"


class ParameterError(ValidationError):
    kind = "parameter"


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""

    kind = "domain"


class ConfigurationError(ValidationError):
    kind = "configuration"


class InvalidDomainError(ValidationError):
    """A domain specification violates its defining constraints."""

    kind = "invalid_domain"


class EvaluationError(ValidationError):
    """A black-box field produced non-finite values."""

    kind = "evaluation"


class InfeasibleError(ValidationError):
    """Parameters violate the embedding condition or a range hypothesis."""

    kind = "infeasible"


class DegenerateError(ValidationError):
    """A regime selector has no strict minimiser (tie)."""

    kind = "degenerate"


class OutOfRangeError(ValidationError):
    kind = "out_of_range"


class PreconditionError(ValidationError):
    kind = "precondition"


class SizeError(ValidationError):
    """A requested discretisation exceeds the configured size cap."""

    kind = "size"


class DataError(ValidationError):
    kind = "data"
