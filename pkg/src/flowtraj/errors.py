"""Exception types shared across the package."""


class FlowTrajError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FlowTrajError, ValueError):
    """An argument violates an operation's preconditions."""


class FormatError(FlowTrajError, ValueError):
    """A binary or text payload does not match its declared format."""
