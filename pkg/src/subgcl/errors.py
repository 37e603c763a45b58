"""Shared exception types.

Every error raised across the package maps onto one of these classes so
callers (and the CLI) can translate failure modes into stable exit codes.
"""


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ParameterError(ValueError):
    """A hyperparameter or registered parameter is invalid (bad value, duplicate name)."""


class DomainError(ValueError):
    """An input value lies outside the mathematical domain of the operation."""


class ContractError(RuntimeError):
    """An internal invariant was violated (for example backward on a non-scalar)."""


class IngestionError(ValueError):
    """A dataset on disk is missing files or malformed."""


class StratificationError(ValueError):
    """A labelled split cannot honour the requested class proportions."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""
