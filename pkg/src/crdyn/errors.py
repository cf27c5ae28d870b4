"""Exception types shared across the package."""


class CrdynError(Exception):
    """Base class for all package errors."""


class RelationFormatError(CrdynError):
    """A relation, map, or report file does not match the documented schema."""


class ConstraintError(CrdynError):
    """A domain precondition was violated (bad point, bad subset, bad parameter)."""


class CapExceededError(ConstraintError):
    """An enumeration or oracle size cap would be exceeded."""


class DeadEndError(CrdynError):
    """An orbit cannot be extended: the last point has no successor."""
