"""Multi-scale peak and trough detection and beat segmentation.

The detector builds, per scale k, the boolean condition "sample dominates
both neighbours at distance k" on the linearly detrended window, picks the
scale gamma whose condition holds most often, and keeps samples that satisfy
it for every scale up to gamma. Troughs are peaks of the negated signal.

Two deliberate extensions over the plain multi-scale scheme:

* comparisons against out-of-range neighbours are clipped (a missing
  neighbour does not veto), so genuine extrema closer than gamma to the
  window edges are kept; scale selection itself uses only fully in-range
  comparisons.
* a reconciliation pass enforces strict peak/trough alternation by keeping,
  between consecutive troughs, only the maximal peak (and symmetrically),
  which downstream beat segmentation requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data_io import PpgSegment
from .errors import SegmentTooShort

MIN_SAMPLES = 16

# Detrended residual below this fraction of the raw range means the window
# is a pure trend; comparing leftover float noise would invent extrema.
_TREND_ONLY_REL = 1e-10


@dataclass(frozen=True)
class BeatMarkers:
    """Sorted sample indices of systolic peaks and beat-onset troughs."""

    peak_indices: np.ndarray
    trough_indices: np.ndarray

    def __post_init__(self):
        for name in ("peak_indices", "trough_indices"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class Beat:
    """One onset-to-onset slice of a segment.

    ``normalized`` is filled by ``template_beat.normalize_beat``; raw slices
    keep their native length.
    """

    samples: np.ndarray
    duration_s: float
    normalized: np.ndarray | None = None


def detrend(x: np.ndarray) -> np.ndarray:
    """Remove the least-squares line from ``x``."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    ic = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    slope = float((ic * x).sum() / (ic * ic).sum())
    return x - x.mean() - slope * ic


def msptd(segment: PpgSegment | np.ndarray) -> BeatMarkers:
    """Detect systolic peaks and onset troughs in a (filtered) window.

    Offsets and positive rescaling of the input do not change the result:
    detrending absorbs offsets and all comparisons are order-based.
    """
    x = segment.samples if isinstance(segment, PpgSegment) else np.asarray(segment, float)
    if len(x) < MIN_SAMPLES:
        raise SegmentTooShort(f"need >= {MIN_SAMPLES} samples, got {len(x)}")
    ptp = float(x.max() - x.min())
    r = detrend(x)
    if float(np.abs(r).max()) <= _TREND_ONLY_REL * ptp:
        empty = np.empty(0, dtype=np.int64)
        return BeatMarkers(peak_indices=empty, trough_indices=empty)

    up_sums, dn_sums = _kernels.lms_row_sums(r)
    gamma_up = int(np.argmax(up_sums[1:]) + 1)
    gamma_dn = int(np.argmax(dn_sums[1:]) + 1)
    peaks = np.nonzero(_kernels.lms_maxima_mask(r, gamma_up))[0]
    troughs = np.nonzero(_kernels.lms_maxima_mask(-r, gamma_dn))[0]
    peaks, troughs = _reconcile_alternation(r, peaks, troughs)
    return BeatMarkers(peak_indices=peaks, trough_indices=troughs)


def segment_beats(segment: PpgSegment, markers: BeatMarkers) -> list[Beat]:
    """Cut the segment into onset-to-onset beats.

    One beat per pair of consecutive troughs, half-open slice [t_i, t_i+1),
    so beat lengths tile the inter-trough span. Slices without an interior
    peak are discarded. Fewer than two troughs yields an empty list; policy
    for unsegmentable windows belongs to the caller.
    """
    x = segment.samples
    troughs = markers.trough_indices
    peaks = markers.peak_indices
    beats: list[Beat] = []
    for a, b in zip(troughs[:-1], troughs[1:]):
        inside = peaks[(peaks > a) & (peaks < b)]
        if inside.size == 0:
            continue
        beats.append(Beat(
            samples=x[a:b].copy(),
            duration_s=(int(b) - int(a)) / segment.sample_rate_hz,
        ))
    return beats


def _reconcile_alternation(
    r: np.ndarray, peaks: np.ndarray, troughs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Collapse same-type runs so peaks and troughs strictly alternate.

    Runs are resolved on the detrended values: the largest of consecutive
    peaks survives, the smallest of consecutive troughs.
    """
    events = [(int(i), True) for i in peaks] + [(int(i), False) for i in troughs]
    events.sort()
    kept: list[tuple[int, bool]] = []
    for idx, is_peak in events:
        if kept and kept[-1][1] == is_peak:
            prev = kept[-1][0]
            if is_peak:
                if r[idx] > r[prev]:
                    kept[-1] = (idx, is_peak)
            else:
                if r[idx] < r[prev]:
                    kept[-1] = (idx, is_peak)
        else:
            kept.append((idx, is_peak))
    out_p = np.array([i for i, q in kept if q], dtype=np.int64)
    out_t = np.array([i for i, q in kept if not q], dtype=np.int64)
    return out_p, out_t
