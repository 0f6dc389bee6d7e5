"""Per-vertex principal curvatures, Gaussian/mean curvature, and shape index.

At each vertex the normal is the smallest principal axis of the k-nearest-
neighbor covariance, oriented toward +z (the anterior direction); a full
quadric h(u,v) = d*u + e*v + (L*u^2 + 2*M*u*v + N*v^2)/2 is least-squares
fitted to the neighbors in the tangent frame, and the principal curvatures
are the eigenvalues of the shape operator assembled from the first and
second fundamental forms at the origin.

Sign conventions: the +z-oriented normal fixes curvature signs globally; a
cap curving away from +z has negative curvature. The shape index evaluates
(2/pi) * arctan((k2 + k1) / (k2 - k1)) literally, which makes a convex
cylindrical ridge come out at -0.5 (the sign is opposite to the common
Koenderink convention; callers comparing against that convention must
negate).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import CurvatureError
from .mesh import TriMesh

__all__ = [
    "CurvatureField",
    "estimate_principal",
    "shape_index",
    "curvature_field",
    "write_curvature_csv",
    "read_curvature_csv",
]

_RANK_TOL = 1e-10


@dataclass
class CurvatureField:
    """Per-vertex curvature quantities; ``valid`` marks vertices whose fit
    succeeded, ``failures`` records the rest with their reasons."""

    k1: np.ndarray
    k2: np.ndarray
    gaussian: np.ndarray
    mean: np.ndarray
    shape_index: np.ndarray
    planar: np.ndarray
    valid: np.ndarray
    failures: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        ok = self.valid
        if np.any(self.k1[ok] < self.k2[ok]):
            raise CurvatureError("k1 >= k2 ordering violated")
        if np.any(np.abs(self.gaussian[ok] - self.k1[ok] * self.k2[ok]) > 1e-12):
            raise CurvatureError("K != k1*k2")
        if np.any(np.abs(self.mean[ok] - 0.5 * (self.k1[ok] + self.k2[ok])) > 1e-12):
            raise CurvatureError("H != (k1+k2)/2")
        e = self.shape_index[ok]
        if e.size and (e.min() < -1.0 or e.max() > 1.0):
            raise CurvatureError("shape index outside [-1, 1]")
        if np.any(self.planar[ok] & (self.shape_index[ok] != 0.0)):
            raise CurvatureError("planar vertices must have shape index 0")

    @property
    def max_abs_curvature(self) -> np.ndarray:
        return np.maximum(np.abs(self.k1), np.abs(self.k2))

    def __len__(self):
        return len(self.k1)


def shape_index(k1: float, k2: float, eps: float = 1e-12) -> tuple[float, bool]:
    """Local shape descriptor in [-1, 1] from the principal curvature pair.

    Evaluated literally as (2/pi)*arctan((k2+k1)/(k2-k1)) when the
    curvatures differ by more than eps. At a non-planar umbilic
    (|k2 - k1| <= eps) the one-sided limit applies: -sign(k1 + k2). When
    both curvatures vanish within eps the point is planar and the index is
    defined as 0 with the planar flag set.
    """
    if k1 < k2:
        raise CurvatureError(f"requires k1 >= k2, got k1={k1}, k2={k2}")
    if abs(k2 - k1) > eps:
        return (2.0 / np.pi) * np.arctan((k2 + k1) / (k2 - k1)), False
    if abs(k1 + k2) > eps:
        return -float(np.sign(k1 + k2)), False
    return 0.0, True


def _fit_batch(points: np.ndarray, neighbor_idx: np.ndarray):
    """Vectorized quadric fit for a batch of vertices.

    ``neighbor_idx`` holds, per vertex, the indices of its neighborhood
    (excluding the vertex itself). Returns (k1, k2, ok) arrays.
    """
    centers = points[:, None, :]
    nbrs = points[neighbor_idx]  # (V, k, 3)
    rel = nbrs - centers

    # Normal = smallest principal axis of the neighborhood covariance
    # (including the center, which contributes zero).
    cov = np.einsum("vki,vkj->vij", rel, rel)
    evals, evecs = np.linalg.eigh(cov)
    normal = evecs[:, :, 0]
    flip = normal[:, 2] < 0
    normal[flip] *= -1.0

    # Deterministic tangent basis: project e_x (or e_y where e_x is too
    # parallel to the normal) onto the tangent plane.
    ex = np.zeros_like(normal)
    use_y = np.abs(normal[:, 0]) > 0.9
    ex[~use_y, 0] = 1.0
    ex[use_y, 1] = 1.0
    u = ex - (ex * normal).sum(axis=1, keepdims=True) * normal
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = np.cross(normal, u)

    uu = np.einsum("vkj,vj->vk", rel, u)
    vv = np.einsum("vkj,vj->vk", rel, v)
    hh = np.einsum("vkj,vj->vk", rel, normal)

    a = np.stack([uu, vv, 0.5 * uu * uu, uu * vv, 0.5 * vv * vv], axis=2)
    ata = np.einsum("vkc,vkd->vcd", a, a)
    atb = np.einsum("vkc,vk->vc", a, hh)

    sv = np.linalg.eigvalsh(ata)
    ok = sv[:, 0] > _RANK_TOL * np.maximum(sv[:, -1], 1e-300)

    coef = np.zeros((len(neighbor_idx), 5))
    if np.any(ok):
        coef[ok] = np.linalg.solve(ata[ok], atb[ok])
    d, e, ll, mm, nn = (coef[:, i] for i in range(5))

    # First/second fundamental forms at the origin of the fit.
    nfac = np.sqrt(1.0 + d * d + e * e)
    e1, f1, g1 = 1.0 + d * d, d * e, 1.0 + e * e
    det1 = e1 * g1 - f1 * f1  # = nfac^2
    gauss = (ll * nn - mm * mm) / (det1 * det1)
    mean = (e1 * nn - 2.0 * f1 * mm + g1 * ll) / (2.0 * nfac**3)
    disc = np.sqrt(np.maximum(mean * mean - gauss, 0.0))
    return mean + disc, mean - disc, ok


def _neighborhoods(mesh: TriMesh, k: int) -> np.ndarray:
    n = len(mesh.vertices)
    if n < k + 1:
        raise CurvatureError(f"mesh has {n} vertices; need at least k+1 = {k + 1}")
    tree = cKDTree(mesh.points)
    _, idx = tree.query(mesh.points, k=k + 1)
    # Drop the query point itself; it is the nearest hit except under exact
    # duplicates, where dropping any one copy is equivalent.
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = idx[i]
        row = row[row != i][:k]
        if len(row) < k:
            row = np.concatenate([row, idx[i, 1 : 1 + k - len(row)]])
        out[i] = row
    return out


def estimate_principal(mesh: TriMesh, vertex: int, k: int = 16) -> tuple[float, float]:
    """Principal curvatures (max, min) at one vertex from its k nearest
    neighbors. Raises CurvatureError (carrying the vertex index) when the
    neighborhood is rank-deficient."""
    idx = _neighborhoods(mesh, k)
    k1, k2, ok = _fit_batch(mesh.points, idx[vertex : vertex + 1])
    if not ok[0]:
        raise CurvatureError(
            f"rank-deficient neighborhood at vertex {vertex}", vertex=vertex
        )
    return float(k1[0]), float(k2[0])


def curvature_field(mesh: TriMesh, k: int = 16, eps: float = 1e-12) -> CurvatureField:
    """Estimate curvature at every vertex.

    Per-vertex failures are collected rather than fatal; the field is
    returned for the healthy subset as long as at least 90% of vertices
    succeed, otherwise a CurvatureError is raised.
    """
    idx = _neighborhoods(mesh, k)
    k1, k2, ok = _fit_batch(mesh.points, idx)
    n = len(mesh.vertices)
    shape = np.zeros(n)
    planar = np.zeros(n, dtype=bool)
    for i in np.nonzero(ok)[0]:
        shape[i], planar[i] = shape_index(k1[i], k2[i], eps)
    failures = [
        (int(i), "rank-deficient neighborhood") for i in np.nonzero(~ok)[0]
    ]
    if n and (ok.sum() / n) < 0.9:
        raise CurvatureError(
            f"curvature failed on {n - int(ok.sum())} of {n} vertices: "
            f"{failures[:5]}...",
            vertex=failures[0][0] if failures else None,
        )
    k1 = np.where(ok, k1, 0.0)
    k2 = np.where(ok, k2, 0.0)
    return CurvatureField(
        k1=k1,
        k2=k2,
        gaussian=k1 * k2,
        mean=0.5 * (k1 + k2),
        shape_index=shape,
        planar=planar,
        valid=ok,
        failures=failures,
    )


def write_curvature_csv(path, mesh: TriMesh, field: CurvatureField) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "x", "y", "z", "k1", "k2", "K", "H", "E", "planar"])
        for i in range(len(mesh.vertices)):
            x, y, z = mesh.points[i]
            writer.writerow(
                [
                    i,
                    repr(x),
                    repr(y),
                    repr(z),
                    repr(float(field.k1[i])),
                    repr(float(field.k2[i])),
                    repr(float(field.gaussian[i])),
                    repr(float(field.mean[i])),
                    repr(float(field.shape_index[i])),
                    int(field.planar[i]),
                ]
            )


def read_curvature_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [rec for rec in reader if rec]
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}
    cols["vertex"] = cols["vertex"].astype(np.int64)
    cols["planar"] = cols["planar"].astype(bool)
    return cols
