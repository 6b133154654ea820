"""Exception hierarchy.

Input/validation problems derive from :class:`ValidationError`; failures of the
optimizer or sampler derive from :class:`InferenceError`. The CLI maps the two
families onto exit codes 1 and 2.
"""


class SmoothcastError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SmoothcastError, ValueError):
    """Malformed input data or arguments."""


class IndexedValidationError(ValidationError):
    """A validation error tied to a position in the input."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonMonotonicTimestamps(IndexedValidationError):
    pass


class NonFiniteValue(IndexedValidationError):
    pass


class NonPositiveValue(IndexedValidationError):
    pass


class NonPositiveObservation(IndexedValidationError):
    pass


class RegressorShapeMismatch(ValidationError):
    pass


class RegressorMissing(ValidationError):
    pass


class InvalidPeriod(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class OutOfSupport(ValidationError):
    pass


class OutOfBounds(ValidationError):
    pass


class ArityMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class TooFewDraws(ValidationError):
    pass


class ArtifactError(ValidationError):
    """Unreadable or incompatible model artifact."""


class VersionMismatch(ArtifactError):
    pass


class ChecksumMismatch(ArtifactError):
    pass


class LevelCollapse(SmoothcastError, ArithmeticError):
    """A level state reached zero or below where the model requires l_t > 0."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InferenceError(SmoothcastError, RuntimeError):
    """The optimizer or sampler could not produce a usable result."""


class AllRestartsInfeasible(InferenceError):
    pass


class ChainStuck(InferenceError):
    pass


class PathInfeasible(InferenceError):
    pass
