"""Exception types shared across the scoring engine."""


class PspError(Exception):
    """Base class for all errors raised by this package."""


# --- tensor file format ---

class BadMagic(PspError):
    pass


class UnsupportedVersion(PspError):
    pass


class TruncatedPayload(PspError):
    pass


class DimOverflow(PspError):
    pass


class BadHeader(PspError):
    """Header fields are structurally invalid (bad ndim, zero-sized dim)."""


# --- dimension tables ---

class OverlappingSets(PspError):
    pass


class MissingCognate(PspError):
    pass


class UnknownLanguage(PspError):
    pass


# --- alignment ---

class InfeasibleLength(PspError):
    pass


class BadTargetIndex(PspError):
    pass


class SpanOutOfRange(PspError):
    pass


# --- centroids / sampling ---

class TooFewSpeakers(PspError):
    pass


# --- probes ---

class ZeroVector(PspError):
    pass


class EmptyTokens(PspError):
    pass


class DegenerateFloor(PspError):
    pass


# --- distributional ---

class TooFewSamples(PspError):
    pass


class DimensionMismatch(PspError):
    pass


class EigenFailure(PspError):
    pass


class TooFewIntervals(PspError):
    pass


class NonPositiveInterval(PspError):
    pass


class NoVoicedFrames(PspError):
    pass


class TooFewSpans(PspError):
    pass


# --- bootstrap ---

class EmptyInput(PspError):
    pass


# --- scorecard ---

class OverlapWithCentroidCorpus(PspError):
    pass
