"""Template beat construction and beat-to-template distances.

Beats are resampled to a common length so they can be averaged pointwise and
compared with equal-length distances. The template is the pointwise mean
beat; its pointwise population standard deviation is the variability band
used by the area feature. Distances are computed on the length-normalized
beats (including the warping distance), so all three distance families see
the same inputs. Amplitude is deliberately not normalized per beat:
amplitude variability is genuine quality signal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .beat_detect import Beat
from .errors import (
    BeatTooShort,
    ConstantBeatWarning,
    EmptyBeatSet,
    EmptyInput,
    LengthMismatch,
)

DEFAULT_BEAT_LENGTH = 100


@dataclass(frozen=True)
class TemplateBeat:
    """Pointwise mean and population std over the normalized beats."""

    mean_beat: np.ndarray
    std_beat: np.ndarray
    n_beats: int

    def __post_init__(self):
        for name in ("mean_beat", "std_beat"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class DistanceVectors:
    """Per-beat distances to the template mean: one entry per beat."""

    dtw: np.ndarray
    euclid: np.ndarray
    pearson: np.ndarray

    def __post_init__(self):
        for name in ("dtw", "euclid", "pearson"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def normalize_beat(beat: Beat, length: int = DEFAULT_BEAT_LENGTH) -> Beat:
    """Resample the beat onto ``length`` equally spaced points.

    Linear interpolation over the beat's own span; endpoints are preserved
    exactly, and an input already on the target grid passes through
    unchanged up to float rounding.
    """
    n = len(beat.samples)
    if n < 2:
        raise BeatTooShort(f"cannot resample a {n}-sample beat")
    src = np.arange(n, dtype=np.float64)
    dst = np.arange(length, dtype=np.float64) * (n - 1) / (length - 1)
    resampled = np.interp(dst, src, beat.samples)
    return replace(beat, normalized=resampled)


def normalize_beats(beats: list[Beat], length: int = DEFAULT_BEAT_LENGTH) -> list[Beat]:
    return [normalize_beat(b, length) for b in beats]


def build_template(beats: list[Beat]) -> TemplateBeat:
    """Average the normalized beats pointwise.

    Uses the population standard deviation: with as few as two beats the
    sample estimator would inflate the variability band.
    """
    if not beats:
        raise EmptyBeatSet("cannot build a template from zero beats")
    rows = []
    for b in beats:
        if b.normalized is None:
            raise LengthMismatch("beats must be normalized before templating")
        rows.append(b.normalized)
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise LengthMismatch(f"mixed normalized lengths: {sorted(lengths)}")
    stack = np.vstack(rows)
    return TemplateBeat(
        mean_beat=stack.mean(axis=0),
        std_beat=stack.std(axis=0),
        n_beats=len(beats),
    )


def area_pm_std(template: TemplateBeat) -> float:
    """Area of the +-1 std band around the template over unit beat time.

    The band width is 2 * std pointwise; trapezoidal rule on the normalized
    time grid [0, 1].
    """
    band = 2.0 * template.std_beat
    if len(band) < 2:
        return 0.0
    return float(np.trapezoid(band, dx=1.0 / (len(band) - 1)))


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Classic dynamic-programming alignment cost between two sequences.

    Local cost |a_i - b_j|, monotone steps (up, left, diagonal), no window
    constraint and no path normalization.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("dtw_distance requires nonempty sequences")
    return float(_kernels.dtw_cost(a, b))


def euclid_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"length {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pearson_corr(a: np.ndarray, b: np.ndarray) -> float:
    """Sample Pearson correlation.

    A zero-variance input carries no morphology information; the result is
    reported as the sentinel 0.0 and a ConstantBeatWarning is emitted.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"length {a.shape} vs {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.sum(da * da))
    vb = float(np.sum(db * db))
    if va == 0.0 or vb == 0.0:
        warnings.warn("zero-variance sequence in correlation; reporting 0.0",
                      ConstantBeatWarning, stacklevel=2)
        return 0.0
    r = float(np.sum(da * db) / np.sqrt(va * vb))
    return min(1.0, max(-1.0, r))


def distance_vectors(beats: list[Beat], template: TemplateBeat) -> DistanceVectors:
    """Distances of every normalized beat to the template mean."""
    if not beats:
        raise EmptyBeatSet("no beats to compare against the template")
    mean = template.mean_beat
    dtw = np.empty(len(beats))
    euc = np.empty(len(beats))
    rho = np.empty(len(beats))
    for i, beat in enumerate(beats):
        if beat.normalized is None:
            raise LengthMismatch("beats must be normalized before templating")
        nb = beat.normalized
        dtw[i] = dtw_distance(nb, mean)
        euc[i] = euclid_distance(nb, mean)
        rho[i] = pearson_corr(nb, mean)
    return DistanceVectors(dtw=dtw, euclid=euc, pearson=rho)
