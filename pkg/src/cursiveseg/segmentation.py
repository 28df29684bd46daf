"""Column-projection segmentation: profiles, candidates, merging, cuts."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .raster import BinaryImage

__all__ = [
    "ColumnProfile",
    "CandidateColumns",
    "MergedRun",
    "SegmentationResult",
    "column_profile",
    "candidate_columns",
    "merge_runs",
    "merge_candidates",
    "cut_segments",
    "cuts_line",
]


@dataclass(frozen=True, eq=False)
class ColumnProfile:
    """Foreground pixel count per column."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("profile counts must be integers")
        if arr.ndim != 1:
            raise ValueError("profile counts must be one-dimensional")
        if arr.size and arr.min() < 0:
            raise ValueError("profile counts must be non-negative")
        arr = arr.astype(np.int64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def width(self) -> int:
        return len(self.counts)

    def __eq__(self, other):
        return isinstance(other, ColumnProfile) and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class CandidateColumns:
    """Strictly increasing column indices considered for cutting."""

    columns: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.columns)
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("candidate columns must be integers")
        if arr.ndim != 1:
            raise ValueError("candidate columns must be one-dimensional")
        if arr.size and arr.min() < 0:
            raise ValueError("candidate columns must be non-negative")
        if arr.size > 1 and not (np.diff(arr) > 0).all():
            raise ValueError("candidate columns must be strictly increasing")
        arr = arr.astype(np.int64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "columns", arr)

    def __len__(self):
        return len(self.columns)

    def __iter__(self):
        return iter(int(c) for c in self.columns)

    def __eq__(self, other):
        return isinstance(other, CandidateColumns) and np.array_equal(self.columns, other.columns)


def column_profile(image: BinaryImage) -> ColumnProfile:
    """Vertical projection of a binary image."""
    return ColumnProfile(image.pixels.sum(axis=0, dtype=np.int64))


def candidate_columns(profile: ColumnProfile) -> CandidateColumns:
    """Columns whose foreground count is 0 or 1."""
    return CandidateColumns(np.nonzero(profile.counts <= 1)[0])


class MergedRun(NamedTuple):
    column: int  # round-half-up mean of the run
    first: int   # first candidate column in the run
    last: int    # last candidate column in the run


def merge_runs(csc: CandidateColumns, threshold: int = 3) -> list[MergedRun]:
    """Collapse runs of nearby candidates, keeping their provenance.

    Candidates whose consecutive distance is strictly below the threshold
    belong to one run; each maximal run is replaced by the round-half-up
    arithmetic mean of its columns.
    """
    if threshold < 1:
        raise ValueError(f"merge threshold must be >= 1, got {threshold}")
    cols = csc.columns
    runs = []
    start = 0
    for i in range(1, len(cols) + 1):
        if i == len(cols) or int(cols[i]) - int(cols[i - 1]) >= threshold:
            run = cols[start:i]
            total, n = int(run.sum()), len(run)
            mean = (2 * total + n) // (2 * n)  # floor(mean + 1/2)
            runs.append(MergedRun(mean, int(run[0]), int(run[-1])))
            start = i
    return runs


def merge_candidates(csc: CandidateColumns, threshold: int = 3) -> CandidateColumns:
    """Merged candidate columns without provenance."""
    merged = [run.column for run in merge_runs(csc, threshold)]
    return CandidateColumns(np.asarray(merged, dtype=np.int64))


@dataclass(frozen=True)
class SegmentationResult:
    """Final cuts plus the half-open column ranges they induce."""

    width: int
    cut_columns: tuple[int, ...]
    segments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        bounds = (0, *self.cut_columns, self.width)
        if any(lo > hi for lo, hi in zip(bounds, bounds[1:])):
            raise ValueError("cut columns must be increasing and within the image")
        expect = tuple(zip(bounds, bounds[1:]))
        if self.segments != expect:
            raise ValueError("segments must tile [0, width) at the cut columns")


def cut_segments(image: BinaryImage, cuts: CandidateColumns) -> SegmentationResult:
    """Split the image width at the cut columns.

    Segments are contiguous half-open ranges that jointly cover
    [0, width); every cut column is a range boundary.
    """
    if len(cuts) and int(cuts.columns[-1]) >= image.width:
        raise ValueError("cut column beyond image width")
    bounds = [0, *(int(c) for c in cuts.columns), image.width]
    segments = tuple((bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1))
    return SegmentationResult(image.width, tuple(int(c) for c in cuts.columns), segments)


def cuts_line(result: SegmentationResult) -> str:
    """Sidecar text form: space-separated cut columns, one word per line."""
    return " ".join(str(c) for c in result.cut_columns)
