"""Exception types shared by every module."""


class DbcError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(DbcError, ValueError):
    """Malformed vectors, matrices, strategies or files."""


class DomainError(DbcError, ValueError):
    """A well-formed argument lies outside the domain of the operation."""


class UnsupportedError(DbcError):
    """The requested size or configuration is beyond what is implemented."""


class InfeasibleError(DbcError):
    """A linear program has no feasible point."""
