"""Exception types shared across the package.

Accuracy problems are reported through result flags, not exceptions; the
classes here cover contract violations and genuine failures only.
"""


class ConfmapError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(ConfmapError, ValueError):
    """An argument violates a documented precondition."""


class SolverDivergedError(ConfmapError):
    """Iterative solver produced non-finite residuals or lost descent."""


class BuildDegenerateError(ConfmapError):
    """Engine construction hit a numerically degenerate configuration.

    ``index`` points at the offending boundary sample where applicable.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ResolutionExhaustedError(ConfmapError):
    """A grid search failed at the finest resolution this call allows."""


class ResourceLimitError(ConfmapError):
    """A hard cap on problem size would be exceeded."""
