"""Exception types shared across the package.

The CLI maps these onto stable exit codes (see ``spincoh.cli``), so new
error conditions should reuse one of the classes below instead of raising
bare exceptions.
"""


class SpincohError(Exception):
    """Base class for package-specific failures."""


class InvalidStateError(SpincohError, ValueError):
    """A matrix or state violates a structural invariant (hermiticity, trace, positivity)."""


class CapacityError(SpincohError):
    """Requested computation exceeds a configured size cap."""


class InsufficientDataError(SpincohError):
    """Not enough usable data points to carry out a fit."""


class DegenerateGeometryError(SpincohError):
    """Random placement could not satisfy the minimum pair distance."""


class ParseError(SpincohError):
    """An input file could not be parsed or was rejected on load."""
