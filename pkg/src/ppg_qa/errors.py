"""Exception hierarchy for the ppg_qa package.

Every error raised by the library derives from :class:`PpgQaError` so that
callers (notably the CLI) can distinguish domain failures from programming
errors.
"""

from __future__ import annotations


class PpgQaError(Exception):
    """Base class for all ppg_qa errors."""


# ---------------------------------------------------------------------------
# ingestion / serialization


class MalformedRow(PpgQaError):
    """A CSV row does not conform to the documented schema."""

    def __init__(self, path, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{path}:{line_number}: {reason}")


class DuplicateSegmentId(PpgQaError):
    """The same segment_id appears more than once in a manifest."""


class MissingFile(PpgQaError):
    """A file referenced by a manifest does not exist."""


class EmptyFile(PpgQaError):
    """A segment file contains no samples."""


class NonFiniteSample(PpgQaError):
    """A segment contains NaN or infinite values."""

    def __init__(self, index: int, source: str = ""):
        self.index = index
        where = f" in {source}" if source else ""
        super().__init__(f"non-finite sample at index {index}{where}")


class DurationOutOfBounds(PpgQaError):
    """Segment duration falls outside the accepted window for manifest data."""


# ---------------------------------------------------------------------------
# filtering


class InvalidSpec(PpgQaError):
    """A parameter record violates its own invariants."""


class NumericalFailure(PpgQaError):
    """A numeric procedure (pole pairing, root finding) did not converge."""


class NonFiniteOutput(PpgQaError):
    """Filtering produced NaN/Inf, signalling instability or bad input."""


# ---------------------------------------------------------------------------
# beat detection / template


class SegmentTooShort(PpgQaError):
    """Input shorter than the detector's minimum window."""


class TooFewBeats(PpgQaError):
    """Fewer than two beats were segmented; template statistics undefined."""


class TooFewPeaks(PpgQaError):
    """Fewer than two peaks; heart rate undefined."""


class BeatTooShort(PpgQaError):
    """A beat slice has fewer than two samples and cannot be resampled."""


class EmptyBeatSet(PpgQaError):
    """No beats supplied where at least one is required."""


class LengthMismatch(PpgQaError):
    """Two sequences that must share a length do not."""


class EmptyInput(PpgQaError):
    """An operation received an empty sequence."""


# ---------------------------------------------------------------------------
# ensemble / evaluation


class EmptyTrainingSet(PpgQaError):
    """Training requires at least two rows."""


class SingleClassTraining(PpgQaError):
    """Training data contains only one class."""


class DimensionMismatch(PpgQaError):
    """Feature vector length does not match the model."""


class UnsupportedVersion(PpgQaError):
    """Serialized model carries an unknown format_version."""


class CorruptModel(PpgQaError):
    """Serialized model failed structural validation."""


class EmptySplit(PpgQaError):
    """The requested manifest split contains no segments."""


class SegmentFailure(PpgQaError):
    """A batch stage failed while processing one segment."""

    def __init__(self, segment_id: str, cause: Exception):
        self.segment_id = segment_id
        self.cause = cause
        super().__init__(f"segment {segment_id!r}: {cause}")


class ConstantBeatWarning(UserWarning):
    """A beat had zero variance; its correlation was reported as 0.0."""
