"""Exception types shared across the package."""


class BinfiltError(Exception):
    """Base class for all package errors."""


class CapacityError(BinfiltError):
    """A requested lattice level exceeds the supported bound."""


class LevelMismatchError(BinfiltError):
    """Objects living on different lattice levels were combined."""


class NullPreservationError(BinfiltError):
    """A map is not null-preserving for the given measure pair."""


class ScheduleError(BinfiltError):
    """A filtration schedule is malformed or unsupported for the operation."""


class NoSolutionError(BinfiltError):
    """The risk-neutral system has no solution for the given parameters."""


class ScenarioError(BinfiltError):
    """A scenario file or payload failed validation."""
