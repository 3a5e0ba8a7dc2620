"""Exception types shared across the package."""


class S3DError(Exception):
    """Base class for all package errors."""


class InvalidInputError(S3DError, ValueError):
    """Arguments violate an operation's preconditions."""


class NeuronNotFoundError(S3DError, LookupError):
    """A neuron id is not present in the network."""


class PreconditionViolated(S3DError):
    """The assumptions of a bound do not hold for the given instance."""


class PropertyViolation(S3DError, AssertionError):
    """A mathematical property that must hold was observed to fail."""


class ParseError(S3DError, ValueError):
    """A model or dataset file could not be parsed."""
