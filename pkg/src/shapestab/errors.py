"""Exception hierarchy shared by all modules."""


class ShapestabError(Exception):
    """Base class for library errors."""


class DimensionError(ShapestabError, ValueError):
    """Array shapes do not agree with the chart dimension."""


class DomainError(ShapestabError, ValueError):
    """A point lies outside the declared chart box."""


class RankDeficiencyError(ShapestabError, ArithmeticError):
    """A factorization met a (numerically) rank-deficient matrix."""


class MatchingError(ShapestabError):
    """The candidate fails the matching conditions; synthesis is refused."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(ShapestabError, ValueError):
    """A run configuration is malformed or references unknown names."""


class UnknownModelError(ShapestabError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown model"
