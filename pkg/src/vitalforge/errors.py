"""Exception hierarchy.

Everything raised on purpose by the library derives from ``VitalForgeError``.
Errors caused by bad inputs additionally derive from ``ValidationError`` so the
CLI can map them to exit status 2.
"""


class VitalForgeError(Exception):
    pass


class ValidationError(VitalForgeError, ValueError):
    pass


# records
class MalformedHeader(ValidationError):
    pass


class SampleCountMismatch(ValidationError):
    pass


class BadTimestamp(ValidationError):
    pass


class RootNotFound(ValidationError, FileNotFoundError):
    pass


class DuplicateStem(ValidationError):
    pass


# signal preparation
class AllInvalid(ValidationError):
    pass


class BadWindow(ValidationError):
    pass


class BadCutoff(ValidationError):
    pass


class BadTapCount(ValidationError):
    pass


class TooShort(ValidationError):
    pass


# features
class DegenerateSignal(ValidationError):
    pass


class BadRange(ValidationError, IndexError):
    pass


# balance
class TooFewMinority(ValidationError):
    pass


# models
class DimensionMismatch(ValidationError):
    pass


class NoMinorityInTraining(ValidationError):
    pass


# metrics
class OneClassOnly(ValidationError):
    pass


class NoPositives(ValidationError):
    pass


class KeyMismatch(ValidationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# synth / pipeline
class IoFailure(VitalForgeError, OSError):
    pass


class VerificationFailure(ValidationError):
    pass


class MissingLabels(ValidationError):
    pass


class DegenerateSplit(ValidationError):
    pass


class StageError(VitalForgeError):
    """Wraps an error raised inside a pipeline stage, naming the stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
