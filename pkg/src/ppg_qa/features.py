"""Assembly of the 27-element feature vector for one segment.

Layout (fixed, consumed verbatim by the classifiers and the CSV schema):

====  =================================================
0-4   mean, median, std, skewness, kurtosis of the full segment
5     heart rate in beats per minute
6-10  the same five moments of the template beat
11    area within +-1 std of the template beat
12-16 moments of the per-beat warping-distance vector
17-21 moments of the per-beat Euclidean-distance vector
22-26 moments of the per-beat correlation vector
====  =================================================

Moment conventions: population standard deviation, biased moment
estimators, skewness m3 / m2^1.5, excess kurtosis m4 / m2^2 - 3, and the
(0, 0) convention for zero-variance input so constant sequences cannot
inject NaN into the classifier.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .beat_detect import BeatMarkers, msptd, segment_beats
from .data_io import (
    DatasetManifest,
    ManifestEntry,
    PpgSegment,
    QualityLabel,
    Split,
    load_manifest_segment,
)
from .dsp_filter import BiquadCascade, default_cascade, filter_forward_backward
from .errors import (
    EmptyInput,
    MalformedRow,
    PpgQaError,
    SegmentFailure,
    TooFewBeats,
    TooFewPeaks,
)
from .template_beat import (
    DEFAULT_BEAT_LENGTH,
    DistanceVectors,
    TemplateBeat,
    area_pm_std,
    build_template,
    distance_vectors,
    normalize_beats,
)

N_FEATURES = 27

FEATURE_NAMES: tuple[str, ...] = (
    "Mean of the full 25 s segments",
    "Median of the full 25 s segments",
    "Standard deviation of the full 25 s segments",
    "Skewness of the full 25 s segments",
    "Kurtosis of the full 25 s segments",
    "Heart Rate",
    "Mean of the template",
    "Median of the template",
    "Standard deviation of the template",
    "Skewness of the template",
    "Kurtosis of the template",
    "Area within +-1 std of the template",
    "Mean DTW distance",
    "Median DTW distance",
    "Standard deviation DTW distance",
    "Skewness DTW distance",
    "Kurtosis DTW distance",
    "Mean Euclidean distance",
    "Median Euclidean distance",
    "Standard deviation Euclidean distance",
    "Skewness Euclidean distance",
    "Kurtosis Euclidean distance",
    "Mean Pearson's correlation",
    "Median Pearson's correlation",
    "Standard deviation Pearson's correlation",
    "Skewness Pearson's correlation",
    "Kurtosis Pearson's correlation",
)

_BLOCKS = (
    ("seg", 0), ("heart_rate", 5), ("template", 6), ("area_std_template", 11),
    ("dtw", 12), ("euclid", 17), ("pearson", 22),
)
_MOMENT_CODES = ("mean", "median", "std", "skew", "kurt")


def _codes() -> tuple[str, ...]:
    out = [""] * N_FEATURES
    for block, start in _BLOCKS:
        if block == "heart_rate":
            out[start] = f"f{start:02d}_heart_rate"
        elif block == "area_std_template":
            out[start] = f"f{start:02d}_area_std_template"
        else:
            for i, m in enumerate(_MOMENT_CODES):
                out[start + i] = f"f{start + i:02d}_{m}_{block}"
    return tuple(out)


FEATURE_CODES: tuple[str, ...] = _codes()

FEATURES_CSV_HEADER = "segment_id," + ",".join(FEATURE_CODES) + ",label"


@dataclass(frozen=True)
class MomentSet:
    mean: float
    median: float
    std: float
    skewness: float
    kurtosis: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.mean, self.median, self.std, self.skewness, self.kurtosis)


@dataclass(frozen=True)
class FeatureVector:
    """The 27 ordered features of one segment."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature vector contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])


def moments(x: np.ndarray) -> MomentSet:
    """Five-point summary with the conventions documented in this module."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("moments of an empty sequence")
    mean = float(np.mean(x))
    median = float(np.median(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        return MomentSet(mean, median, 0.0, 0.0, 0.0)
    m3 = float(np.mean(d * d * d))
    m4 = float(np.mean(d * d * d * d))
    return MomentSet(
        mean=mean,
        median=median,
        std=float(np.sqrt(m2)),
        skewness=m3 / m2**1.5,
        kurtosis=m4 / (m2 * m2) - 3.0,
    )


def heart_rate_bpm(markers: BeatMarkers, sample_rate_hz: float) -> float:
    """60 over the median inter-peak interval in seconds.

    The median makes the estimate robust to a single missed or spurious
    beat.
    """
    peaks = markers.peak_indices
    if len(peaks) < 2:
        raise TooFewPeaks(f"need >= 2 peaks, got {len(peaks)}")
    intervals = np.diff(peaks) / sample_rate_hz
    return 60.0 / float(np.median(intervals))


@dataclass(frozen=True)
class SegmentDetail:
    """Intermediates behind one feature vector, for inspection dumps."""

    markers: BeatMarkers
    template: TemplateBeat
    vectors: DistanceVectors
    area: float


def extract_features(
    segment: PpgSegment, beat_length: int = DEFAULT_BEAT_LENGTH
) -> FeatureVector:
    """Compute the 27 features of an already-filtered segment.

    Raises TooFewBeats when fewer than two beats can be segmented; mapping
    that condition to a Bad prediction is caller policy.
    """
    return extract_features_detailed(segment, beat_length)[0]


def extract_features_detailed(
    segment: PpgSegment, beat_length: int = DEFAULT_BEAT_LENGTH
) -> tuple[FeatureVector, SegmentDetail]:
    v = np.empty(N_FEATURES, dtype=np.float64)
    v[0:5] = moments(segment.samples).as_tuple()

    markers = msptd(segment)
    beats = segment_beats(segment, markers)
    if len(beats) < 2:
        raise TooFewBeats(
            f"segment {segment.segment_id!r}: {len(beats)} beats, need >= 2"
        )
    v[5] = heart_rate_bpm(markers, segment.sample_rate_hz)

    beats = normalize_beats(beats, beat_length)
    template = build_template(beats)
    v[6:11] = moments(template.mean_beat).as_tuple()
    area = area_pm_std(template)
    v[11] = area

    vectors = distance_vectors(beats, template)
    v[12:17] = moments(vectors.dtw).as_tuple()
    v[17:22] = moments(vectors.euclid).as_tuple()
    v[22:27] = moments(vectors.pearson).as_tuple()

    return FeatureVector(values=v), SegmentDetail(
        markers=markers, template=template, vectors=vectors, area=area
    )


@dataclass
class FeatureTable:
    """Feature matrix for a set of segments plus the unsegmentable ones."""

    segment_ids: list[str] = field(default_factory=list)
    X: np.ndarray = field(default_factory=lambda: np.empty((0, N_FEATURES)))
    labels: list[QualityLabel] = field(default_factory=list)
    too_few_beats: list[tuple[str, QualityLabel]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.segment_ids)


def featurize_manifest(
    manifest: DatasetManifest,
    sample_rate_hz: float,
    split: Split | None = None,
    cascade: BiquadCascade | None = None,
    beat_length: int = DEFAULT_BEAT_LENGTH,
    max_workers: int = 1,
    dump_dir: Path | None = None,
) -> FeatureTable:
    """Filter and featurize every segment of a manifest (or one split).

    Work is mapped over segments in manifest order; results are collected
    in that same order, so the output is identical for any worker count.
    Failures abort with the offending segment id attached.
    """
    entries = manifest.entries if split is None else manifest.for_split(split)
    if cascade is None:
        cascade = default_cascade(sample_rate_hz)
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)

    def work(entry: ManifestEntry):
        try:
            seg = load_manifest_segment(entry, sample_rate_hz)
            filtered = filter_forward_backward(cascade, seg)
            try:
                fv, detail = extract_features_detailed(filtered, beat_length)
            except TooFewBeats:
                return entry.segment_id, None, entry.label
            if dump_dir is not None:
                _dump_detail(dump_dir, entry.segment_id, fv, detail)
            return entry.segment_id, fv, entry.label
        except SegmentFailure:
            raise
        except PpgQaError as exc:
            raise SegmentFailure(entry.segment_id, exc) from exc

    if max_workers <= 1:
        results = [work(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(work, entries))

    table = FeatureTable()
    rows = []
    for segment_id, fv, label in results:
        if fv is None:
            table.too_few_beats.append((segment_id, label))
            continue
        table.segment_ids.append(segment_id)
        table.labels.append(label)
        rows.append(fv.values)
    table.X = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return table


def write_features_csv(table: FeatureTable, path: str | Path,
                       trailer: str | None = None) -> None:
    path = Path(path)
    lines = [FEATURES_CSV_HEADER]
    for sid, row, label in zip(table.segment_ids, table.X, table.labels):
        lines.append(sid + "," + ",".join(repr(float(v)) for v in row)
                     + "," + label.value)
    if trailer:
        lines.append("# " + trailer)
    path.write_text("\n".join(lines) + "\n")


def read_features_csv(path: str | Path) -> tuple[list[str], np.ndarray, list[QualityLabel]]:
    """Read a feature CSV back into (ids, X, labels)."""
    path = Path(path)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    labels: list[QualityLabel] = []
    with path.open() as fh:
        header = fh.readline().rstrip("\n")
        if header != FEATURES_CSV_HEADER:
            raise MalformedRow(path, 1, "unexpected feature CSV header")
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(",")
            if len(parts) != N_FEATURES + 2:
                raise MalformedRow(path, lineno,
                                   f"expected {N_FEATURES + 2} fields, got {len(parts)}")
            ids.append(parts[0])
            try:
                rows.append(np.array([float(p) for p in parts[1:-1]]))
                labels.append(QualityLabel(parts[-1]))
            except ValueError as exc:
                raise MalformedRow(path, lineno, str(exc)) from None
    X = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return ids, X, labels


def labels_to_binary(labels: Iterable[QualityLabel]) -> np.ndarray:
    """Good -> 1, Bad -> 0."""
    return np.array([1 if l is QualityLabel.GOOD else 0 for l in labels],
                    dtype=np.int64)


def _dump_detail(dump_dir: Path, segment_id: str, fv: FeatureVector,
                 detail: SegmentDetail) -> None:
    payload = {
        "segment_id": segment_id,
        "peaks": detail.markers.peak_indices.tolist(),
        "troughs": detail.markers.trough_indices.tolist(),
        "template_mean": detail.template.mean_beat.tolist(),
        "template_std": detail.template.std_beat.tolist(),
        "area_pm_std": detail.area,
        "dtw": detail.vectors.dtw.tolist(),
        "euclid": detail.vectors.euclid.tolist(),
        "pearson": detail.vectors.pearson.tolist(),
        "features": dict(zip(FEATURE_CODES, fv.values.tolist())),
    }
    (dump_dir / f"{segment_id}.json").write_text(json.dumps(payload, indent=1))
