"""Per-slice upper-boundary polylines in image pixel coordinates.

A slice boundary is a list of segments. Each segment is a run of consecutive
image columns with the topmost iris row per column, tagged "L" or "R" by its
side of the pupil gap. The CSV interchange format is one point per row:
``slice_index,half,point_index,x,z``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundarySegment",
    "SliceBoundarySet",
    "segments_from_columns",
    "write_boundaries_csv",
    "read_boundaries_csv",
]


@dataclass(frozen=True)
class BoundarySegment:
    half: str  # "L" or "R"
    points: np.ndarray  # (n, 2) rows of (x, z), x strictly ascending

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ValueError(f"segment points must be non-empty (n,2), got {pts.shape}")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("segment columns must be strictly ascending")
        if self.half not in ("L", "R"):
            raise ValueError(f"half must be 'L' or 'R', got {self.half!r}")
        object.__setattr__(self, "points", pts)


@dataclass
class SliceBoundarySet:
    """Maps slice index -> boundary segments for that slice."""

    slices: dict[int, list[BoundarySegment]] = field(default_factory=dict)

    def add(self, slice_index: int, segments: list[BoundarySegment]) -> None:
        self.slices[int(slice_index)] = list(segments)

    def points_for(self, slice_index: int) -> np.ndarray:
        segs = self.slices.get(int(slice_index), [])
        if not segs:
            return np.empty((0, 2))
        return np.concatenate([s.points for s in segs], axis=0)

    def __len__(self):
        return len(self.slices)


def segments_from_columns(columns, rows, center_col: float) -> list[BoundarySegment]:
    """Group per-column boundary pixels into polylines.

    ``columns`` are the image columns (ints, ascending) that intersect the
    iris and ``rows`` the matching topmost rows. Consecutive columns form one
    polyline; any missing column breaks it. The pupil gap is the break that
    contains ``center_col`` (or, failing that, the break nearest to it);
    polylines left of the gap are tagged "L", right of it "R". With no breaks
    at all a polyline is tagged by which side of ``center_col`` its midpoint
    falls on.
    """
    cols = np.asarray(columns, dtype=np.int64)
    zs = np.asarray(rows, dtype=np.float64)
    if cols.size == 0:
        return []
    if np.any(np.diff(cols) <= 0):
        order = np.argsort(cols)
        cols, zs = cols[order], zs[order]
    breaks = np.nonzero(np.diff(cols) > 1)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [cols.size]])
    runs = [(cols[a:b], zs[a:b]) for a, b in zip(starts, ends)]

    gap_center = None
    if len(runs) > 1:
        gaps = []
        for (c0, _), (c1, _) in zip(runs, runs[1:]):
            gaps.append((c0[-1] + 1, c1[0] - 1))
        containing = [g for g in gaps if g[0] <= center_col <= g[1]]
        if containing:
            gap = containing[0]
        else:
            gap = min(gaps, key=lambda g: abs((g[0] + g[1]) / 2.0 - center_col))
        gap_center = (gap[0] + gap[1]) / 2.0

    segments = []
    for c, z in runs:
        mid = (c[0] + c[-1]) / 2.0
        ref = gap_center if gap_center is not None else center_col
        half = "L" if mid < ref else "R"
        segments.append(BoundarySegment(half, np.column_stack([c, z])))
    return segments


def write_boundaries_csv(path, bset: SliceBoundarySet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slice_index", "half", "point_index", "x", "z"])
        for slice_index in sorted(bset.slices):
            for seg in bset.slices[slice_index]:
                for j, (x, z) in enumerate(seg.points):
                    writer.writerow([slice_index, seg.half, j, _fmt(x), _fmt(z)])


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def read_boundaries_csv(path) -> SliceBoundarySet:
    bset = SliceBoundarySet()
    rows: dict[tuple[int, str], list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:5] != ["slice_index", "half", "point_index", "x", "z"]:
            raise ValueError(f"{path}: unexpected boundary CSV header {header}")
        for rec in reader:
            if not rec:
                continue
            si, half, pi, x, z = int(rec[0]), rec[1], int(rec[2]), float(rec[3]), float(rec[4])
            rows.setdefault((si, half), []).append((pi, x, z))
    by_slice: dict[int, list[BoundarySegment]] = {}
    for (si, half), pts in rows.items():
        pts.sort()
        xs = np.array([p[1] for p in pts])
        zs = np.array([p[2] for p in pts])
        # Re-split into runs: point_index resets are not trusted, column
        # gaps are the ground truth.
        for seg in _split_runs(xs, zs, half):
            by_slice.setdefault(si, []).append(seg)
    for si in sorted(by_slice):
        bset.add(si, by_slice[si])
    return bset


def _split_runs(xs: np.ndarray, zs: np.ndarray, half: str) -> list[BoundarySegment]:
    order = np.argsort(xs)
    xs, zs = xs[order], zs[order]
    breaks = np.nonzero(np.diff(xs) > 1)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [xs.size]])
    return [
        BoundarySegment(half, np.column_stack([xs[a:b], zs[a:b]]))
        for a, b in zip(starts, ends)
    ]
