"""Partition a curvature-annotated surface into 24 azimuthal sectors of 15
degrees and build fixed-size per-sector point sets for classification.

Each sector sample is an N x 8 array of (x, y, z, k1, k2, K, H, E) rows:
coordinates centered on the sample's centroid and scaled to max norm 1,
curvature channels passed through unscaled (their magnitudes are the
signal). Oversized sectors are reduced by farthest-point sampling,
undersized ones bootstrapped with replacement; both are deterministic given
the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureField
from .errors import SectorError
from .mesh import TriMesh

__all__ = [
    "N_SECTORS",
    "SECTOR_WIDTH",
    "SectorSample",
    "assign_sector",
    "assign_sectors",
    "farthest_point_indices",
    "build_sector_samples",
    "write_sector_dataset",
    "read_sector_dataset",
]

N_SECTORS = 24
SECTOR_WIDTH = 2.0 * math.pi / N_SECTORS
_EDGE_SNAP = 1e-9


@dataclass
class SectorSample:
    sector_id: int
    points: np.ndarray  # (N, 8)
    label: int | None = None
    volume: str | None = None
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 8 or pts.shape[0] == 0:
            raise SectorError(f"sample points must be (N,8), got {pts.shape}")
        if not 0 <= self.sector_id < N_SECTORS:
            raise SectorError(f"sector_id {self.sector_id} outside [0,{N_SECTORS})")
        self.points = pts

    @property
    def n_points(self) -> int:
        return len(self.points)


def assign_sector(phi: float) -> int:
    """Half-open 15-degree bins [j*15, (j+1)*15) over [0, 360).

    Values within 1e-9 of a bin edge snap up, so an azimuth meant to be
    exactly k*15 degrees lands in bin k regardless of rounding direction.
    """
    if not math.isfinite(phi):
        raise SectorError(f"azimuth must be finite, got {phi}")
    k = math.fmod(phi, 2.0 * math.pi) / SECTOR_WIDTH
    if k < 0:
        k += N_SECTORS
    j = math.floor(k)
    if k - j > 1.0 - _EDGE_SNAP:
        j += 1
    return int(j) % N_SECTORS


def assign_sectors(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise SectorError("azimuths must be finite")
    k = np.mod(phi, 2.0 * math.pi) / SECTOR_WIDTH
    j = np.floor(k)
    j = np.where(k - j > 1.0 - _EDGE_SNAP, j + 1, j)
    return (j.astype(np.int64)) % N_SECTORS


def farthest_point_indices(points: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy farthest-point subsampling: random seeded start, then repeat
    argmax of the distance to the chosen set. Ties go to the lowest index."""
    pts = np.asarray(points, dtype=np.float64)
    count = len(pts)
    if n >= count:
        raise SectorError("farthest-point sampling needs n < point count")
    start = int(rng.integers(0, count))
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = start
    dist = np.linalg.norm(pts - pts[start], axis=1)
    for i in range(1, n):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return chosen


def _normalize_coords(sample: np.ndarray) -> np.ndarray:
    out = sample.copy()
    center = out[:, :3].mean(axis=0)
    out[:, :3] -= center
    scale = np.linalg.norm(out[:, :3], axis=1).max()
    if scale > 1e-12:
        out[:, :3] /= scale
    return out


def build_sector_samples(
    mesh: TriMesh,
    field: CurvatureField,
    n_points: int = 256,
    seed: int = 0,
    label: int | None = None,
    volume: str | None = None,
    on_empty: str = "raise",
    random_subsample: bool = False,
) -> tuple[list[SectorSample], list[str]]:
    """Build one fixed-size sample per sector.

    Every vertex belongs to exactly one sector by its azimuth, so the raw
    per-sector counts sum to the vertex count. Sectors holding fewer than 3
    vertices are errors: fatal when on_empty="raise", otherwise collected in
    the returned message list while the healthy sectors are still built.
    """
    if len(field) != len(mesh.vertices):
        raise SectorError(
            f"field length {len(field)} != vertex count {len(mesh.vertices)}"
        )
    if n_points < 1:
        raise SectorError("n_points must be positive")
    if on_empty not in ("raise", "skip"):
        raise SectorError(f"on_empty must be 'raise' or 'skip', got {on_empty!r}")
    phi = mesh.vertices.azimuths()
    sectors = assign_sectors(phi)
    features = np.column_stack(
        [
            mesh.points,
            field.k1,
            field.k2,
            field.gaussian,
            field.mean,
            field.shape_index,
        ]
    )
    samples: list[SectorSample] = []
    errors: list[str] = []
    for sid in range(N_SECTORS):
        idx = np.nonzero(sectors == sid)[0]
        if len(idx) < 3:
            msg = f"sector {sid} has only {len(idx)} vertices (need >= 3)"
            if on_empty == "raise":
                raise SectorError(msg)
            errors.append(msg)
            continue
        rng = np.random.default_rng([seed, sid])
        raw = features[idx]
        if len(idx) > n_points:
            if random_subsample:
                pick = rng.choice(len(idx), size=n_points, replace=False)
            else:
                pick = farthest_point_indices(raw[:, :3], n_points, rng)
            sample = raw[pick]
        elif len(idx) < n_points:
            pick = rng.choice(len(idx), size=n_points, replace=True)
            sample = raw[pick]
        else:
            sample = raw
        samples.append(
            SectorSample(
                sector_id=sid,
                points=_normalize_coords(sample),
                label=label,
                volume=volume,
                seed=seed,
            )
        )
    return samples, errors


def write_sector_dataset(path, samples: list[SectorSample], append: bool = False) -> None:
    """One JSON object per line: {sector_id, label, points}."""
    mode = "a" if append else "w"
    with open(path, mode) as fh:
        for s in samples:
            rec = {
                "sector_id": int(s.sector_id),
                "label": None if s.label is None else int(s.label),
                "points": [[float(v) for v in row] for row in s.points],
            }
            fh.write(json.dumps(rec) + "\n")


def read_sector_dataset(path) -> list[SectorSample]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                SectorSample(
                    sector_id=int(rec["sector_id"]),
                    points=np.asarray(rec["points"], dtype=np.float64),
                    label=None if rec.get("label") is None else int(rec["label"]),
                )
            )
    return out
