"""Segment and manifest ingestion.

File formats
------------
Manifest CSV: header ``segment_id,path,raw_label,split`` with
``raw_label`` in {excellent, acceptable, unfit} (case-insensitive) and
``split`` in {train, validation, test}. ``path`` may be relative, in which
case it is resolved against the manifest's directory.

Segment CSV: one sample per line in decimal notation, an optional single
header line ``value``, and optional ``#``-prefixed trailer lines (written by
the CLI to carry run metadata).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    DuplicateSegmentId,
    DurationOutOfBounds,
    EmptyFile,
    MalformedRow,
    MissingFile,
    NonFiniteSample,
)

MANIFEST_FIELDS = ("segment_id", "path", "raw_label", "split")

# Manifest-ingested segments must look like the 25 s windows the pipeline is
# built around; the loose bounds tolerate trimming.
MIN_MANIFEST_DURATION_S = 20.0
MAX_MANIFEST_DURATION_S = 30.0


class QualityLabel(Enum):
    GOOD = "good"
    BAD = "bad"


class RawLabel(Enum):
    EXCELLENT = "excellent"
    ACCEPTABLE = "acceptable"
    UNFIT = "unfit"


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


def merge_labels(raw: RawLabel) -> QualityLabel:
    """Collapse the three-level source labels into the binary target.

    Excellent and Acceptable both become Good; Unfit becomes Bad.
    """
    if raw is RawLabel.UNFIT:
        return QualityLabel.BAD
    return QualityLabel.GOOD


@dataclass(frozen=True, eq=False)
class PpgSegment:
    """One window of PPG samples with its sampling rate and metadata.

    ``samples`` is coerced to a read-only float64 array. Instances are
    immutable and safe to share across threads.
    """

    samples: np.ndarray
    sample_rate_hz: float
    segment_id: str = ""
    label: QualityLabel | None = None
    split: Split | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptyFile(f"segment {self.segment_id!r} has no samples")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        finite = np.isfinite(samples)
        if not finite.all():
            raise NonFiniteSample(int(np.argmin(finite)), self.segment_id)
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "PpgSegment":
        """Copy of this segment with new samples and unchanged metadata."""
        return PpgSegment(
            samples=samples,
            sample_rate_hz=self.sample_rate_hz,
            segment_id=self.segment_id,
            label=self.label,
            split=self.split,
        )


@dataclass(frozen=True)
class ManifestEntry:
    segment_id: str
    path: Path
    raw_label: RawLabel
    split: Split

    @property
    def label(self) -> QualityLabel:
        return merge_labels(self.raw_label)


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def for_split(self, split: Split) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split is split)

    def split_ids(self) -> dict[Split, set[str]]:
        out: dict[Split, set[str]] = {s: set() for s in Split}
        for e in self.entries:
            out[e.split].add(e.segment_id)
        return out


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a manifest CSV, checking ids are unique and files exist.

    Raw three-class labels are preserved; merging happens when segments are
    loaded. Raises MalformedRow (with line number), DuplicateSegmentId or
    MissingFile.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = _next_data_row(reader)
        if header is None:
            raise MalformedRow(path, 1, "empty manifest")
        if tuple(h.strip() for h in header) != MANIFEST_FIELDS:
            raise MalformedRow(
                path, reader.line_num, f"expected header {','.join(MANIFEST_FIELDS)}"
            )
        while (row := _next_data_row(reader)) is not None:
            line = reader.line_num
            if len(row) != 4:
                raise MalformedRow(path, line, f"expected 4 fields, got {len(row)}")
            segment_id, raw_path, raw_label, raw_split = (f.strip() for f in row)
            if not segment_id:
                raise MalformedRow(path, line, "empty segment_id")
            if segment_id in seen:
                raise DuplicateSegmentId(f"{path}:{line}: duplicate id {segment_id!r}")
            seen.add(segment_id)
            try:
                label = RawLabel(raw_label.lower())
            except ValueError:
                raise MalformedRow(path, line, f"unknown raw_label {raw_label!r}") from None
            try:
                split = Split(raw_split.lower())
            except ValueError:
                raise MalformedRow(path, line, f"unknown split {raw_split!r}") from None
            seg_path = Path(raw_path)
            if not seg_path.is_absolute():
                seg_path = base / seg_path
            if not seg_path.is_file():
                raise MissingFile(f"{path}:{line}: segment file not found: {seg_path}")
            entries.append(ManifestEntry(segment_id, seg_path, label, split))
    return DatasetManifest(entries=tuple(entries))


def load_segment(path: str | Path, sample_rate_hz: float) -> PpgSegment:
    """Read a one-column segment CSV. Label and split are left unset.

    Any length is accepted here; duration bounds are enforced only when
    loading through a manifest.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"segment file not found: {path}")
    values: list[float] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if lineno == 1 and text.lower() == "value":
                continue
            try:
                v = float(text)
            except ValueError:
                raise MalformedRow(path, lineno, f"not a number: {text!r}") from None
            if not math.isfinite(v):
                raise NonFiniteSample(len(values), str(path))
            values.append(v)
    if not values:
        raise EmptyFile(f"no samples in {path}")
    return PpgSegment(
        samples=np.array(values, dtype=np.float64),
        sample_rate_hz=sample_rate_hz,
        segment_id=path.stem,
    )


def write_segment(samples: np.ndarray | PpgSegment, path: str | Path,
                  trailer: str | None = None) -> None:
    """Write samples one per line using shortest round-trip decimal form."""
    if isinstance(samples, PpgSegment):
        samples = samples.samples
    path = Path(path)
    lines = "\n".join(repr(float(v)) for v in np.asarray(samples, dtype=np.float64))
    if trailer:
        lines += "\n# " + trailer
    path.write_text(lines + "\n")


def load_manifest_segment(
    entry: ManifestEntry,
    sample_rate_hz: float,
    min_duration_s: float = MIN_MANIFEST_DURATION_S,
    max_duration_s: float = MAX_MANIFEST_DURATION_S,
) -> PpgSegment:
    """Load one manifest entry with merged label, split and duration check."""
    seg = load_segment(entry.path, sample_rate_hz)
    duration = seg.duration_s
    if not (min_duration_s <= duration <= max_duration_s):
        raise DurationOutOfBounds(
            f"segment {entry.segment_id!r}: duration {duration:.3f} s outside "
            f"[{min_duration_s}, {max_duration_s}] s"
        )
    return replace(
        seg,
        samples=seg.samples,
        segment_id=entry.segment_id,
        label=merge_labels(entry.raw_label),
        split=entry.split,
    )


def write_manifest(manifest: DatasetManifest, path: str | Path,
                   relative_to: str | Path | None = None,
                   trailer: str | None = None) -> None:
    """Write a manifest CSV, optionally with paths relative to a directory."""
    path = Path(path)
    rows = [",".join(MANIFEST_FIELDS)]
    for e in manifest.entries:
        p = e.path
        if relative_to is not None:
            try:
                p = p.relative_to(Path(relative_to))
            except ValueError:
                pass
        rows.append(f"{e.segment_id},{p.as_posix()},{e.raw_label.value},{e.split.value}")
    if trailer:
        rows.append("# " + trailer)
    path.write_text("\n".join(rows) + "\n")


def _next_data_row(reader) -> list[str] | None:
    """Next CSV row that is neither blank nor a ``#`` comment."""
    for row in reader:
        if not row:
            continue
        if row[0].lstrip().startswith("#"):
            continue
        return row
    return None


def check_split_hygiene(manifest: DatasetManifest) -> None:
    """Assert train/validation/test segment_id sets are pairwise disjoint.

    Uniqueness of segment_id already guarantees this for manifests built by
    ``load_manifest``; exposed for callers assembling manifests in code.
    """
    ids = manifest.split_ids()
    splits = list(Split)
    for i, a in enumerate(splits):
        for b in splits[i + 1:]:
            overlap = ids[a] & ids[b]
            if overlap:
                raise DuplicateSegmentId(
                    f"ids in both {a.value} and {b.value}: {sorted(overlap)[:5]}"
                )


def segments_for_split(
    manifest: DatasetManifest, split: Split, sample_rate_hz: float
) -> Iterable[PpgSegment]:
    """Lazily load all segments of one split."""
    for entry in manifest.for_split(split):
        yield load_manifest_segment(entry, sample_rate_hz)
