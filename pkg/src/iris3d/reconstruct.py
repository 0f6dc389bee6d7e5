"""From per-slice boundaries to a refined 3D surface mesh.

Stages: map boundary pixels into a 3D point cloud on radial meridians, join
the meridians into a coarse band mesh, resample the mesh with a
curvature-adaptive constrained Poisson-disk scheme, and re-triangulate the
samples by a Delaunay triangulation of their plan-view projection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .boundary import SliceBoundarySet
from .delaunay import delaunay_2d
from .errors import MeshError, SamplingError, TriangulationError
from .mesh import PointCloud3D, TriMesh

__all__ = [
    "ScanGeometry",
    "SamplingParams",
    "slices_to_cloud",
    "coarse_mesh",
    "poisson_disk_resample",
    "retriangulate",
    "refine_surface",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScanGeometry:
    """Radial scan layout: S slices over half a turn, so slice i images the
    meridian pair at angles i*pi/S and i*pi/S + pi."""

    slices: int = 128
    width: int = 512
    height: int = 192
    s_xy: float = 1.0
    s_z: float = 1.0

    def __post_init__(self):
        if self.slices < 4:
            raise MeshError(f"slice count must be >= 4, got {self.slices}")
        if self.s_xy <= 0 or self.s_z <= 0:
            raise MeshError("pixel scales must be positive")
        if self.width < 4 or self.height < 4:
            raise MeshError("image extents too small")

    @property
    def center_col(self) -> float:
        return self.width / 2.0


@dataclass(frozen=True)
class SamplingParams:
    """Poisson-disk radii in pixel units (scaled by ``scale`` = s_xy),
    candidate oversampling factor, and seed."""

    r1: float = 6.0
    r2: float = 10.0
    beta: float = 10.0
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise SamplingError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        if self.beta < 2:
            raise SamplingError(f"oversampling factor must be >= 2, got {self.beta}")
        if self.scale <= 0:
            raise SamplingError("scale must be positive")


def slices_to_cloud(boundaries: SliceBoundarySet, geom: ScanGeometry) -> PointCloud3D:
    """Map boundary pixels (x, z) of slice i to 3D points.

    Slice i lies at angle theta = i*pi/S. A pixel right of the center column
    keeps that azimuth; a pixel left of it lands on the opposite meridian
    theta + pi. z scales by s_z, the signed column offset by s_xy.
    """
    pts = []
    phis = []
    rhos = []
    for slice_index in sorted(boundaries.slices):
        if not 0 <= slice_index < geom.slices:
            raise MeshError(
                f"slice index {slice_index} outside [0,{geom.slices})"
            )
        theta = slice_index * math.pi / geom.slices
        for seg in boundaries.slices[slice_index]:
            x = seg.points[:, 0]
            z = seg.points[:, 1]
            if np.any((x < 0) | (x >= geom.width)) or np.any(
                (z < 0) | (z >= geom.height)
            ):
                raise MeshError(
                    f"slice {slice_index}: boundary point outside image bounds"
                )
            rho_s = (x - geom.center_col) * geom.s_xy
            phi = np.where(rho_s >= 0, theta, theta + math.pi)
            rho = np.abs(rho_s)
            pts.append(
                np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z * geom.s_z])
            )
            phis.append(np.mod(phi, TWO_PI))
            rhos.append(rho)
    if not pts:
        return PointCloud3D(np.empty((0, 3)), np.empty(0), np.empty(0))
    return PointCloud3D(
        np.concatenate(pts), np.concatenate(phis), np.concatenate(rhos)
    )


def coarse_mesh(cloud: PointCloud3D, meridian_samples: int = 64) -> TriMesh:
    """Join arc-length-resampled meridians into a closed triangle band.

    Points sharing an azimuth form one meridian polyline in the (rho, z)
    half-plane; each is resampled to ``meridian_samples`` points by arc
    length, and adjacent meridians (with wraparound) are stitched as quad
    strips split into triangles.
    """
    if meridian_samples < 2:
        raise MeshError("meridian_samples must be >= 2")
    if cloud.azimuth is None:
        raise MeshError("coarse_mesh needs a cloud with azimuth/radius fields")
    order = np.lexsort((cloud.radius, cloud.azimuth))
    phi_sorted = cloud.azimuth[order]
    uniq, starts = np.unique(phi_sorted, return_index=True)
    ends = np.append(starts[1:], len(phi_sorted))

    meridians = []
    for phi, a, b in zip(uniq, starts, ends):
        idx = order[a:b]
        if len(idx) < 2:
            warnings.warn(f"meridian at azimuth {phi:.4f} has < 2 points; skipped")
            continue
        rho = cloud.radius[idx]
        z = cloud.points[idx, 2]
        meridians.append((phi, _resample_polyline(rho, z, meridian_samples)))
    if len(meridians) < 3:
        raise MeshError(f"need >= 3 usable meridians, got {len(meridians)}")

    m = meridian_samples
    verts = []
    phis = []
    rhos = []
    for phi, (rho, z) in meridians:
        verts.append(np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z]))
        phis.append(np.full(m, phi))
        rhos.append(rho)
    points = np.concatenate(verts)
    t_count = len(meridians)
    faces = []
    for t in range(t_count):
        u = (t + 1) % t_count
        base_t, base_u = t * m, u * m
        for j in range(m - 1):
            a, b = base_t + j, base_u + j
            c, d = base_u + j + 1, base_t + j + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return TriMesh(
        PointCloud3D(points, np.concatenate(phis), np.concatenate(rhos)),
        np.asarray(faces, dtype=np.int64),
    )


def _resample_polyline(rho: np.ndarray, z: np.ndarray, m: int):
    seg = np.hypot(np.diff(rho), np.diff(z))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0:
        # All points coincide; replicate.
        return np.full(m, rho[0]), np.full(m, z[0])
    targets = np.linspace(0.0, total, m)
    return np.interp(targets, s, rho), np.interp(targets, s, z)


def poisson_disk_resample(
    mesh: TriMesh, curv: np.ndarray, params: SamplingParams
) -> PointCloud3D:
    """Curvature-adaptive constrained Poisson-disk resampling of a mesh.

    An area-weighted pool of beta * A / r2^2 candidates is drawn uniformly on
    the faces and visited in seeded random order. A candidate q is accepted
    iff no previously accepted sample s lies within min(r(q), r(s)), where
    r(v) is r1 where the point's max-curvature estimate exceeds the global
    mean and r2 elsewhere (a candidate inherits the value of its nearest mesh
    vertex). The first visited candidate is always accepted, so the output is
    non-empty.
    """
    curv = np.asarray(curv, dtype=np.float64)
    if curv.shape != (len(mesh.vertices),):
        raise SamplingError(
            f"curvature array length {curv.shape} != vertex count {len(mesh.vertices)}"
        )
    areas = mesh.face_areas()
    total_area = float(areas.sum())
    if total_area <= 0 or len(mesh.faces) == 0:
        raise SamplingError("mesh has zero total area")

    r1 = params.r1 * params.scale
    r2 = params.r2 * params.scale
    n_candidates = max(1, int(math.ceil(params.beta * total_area / (r2 * r2))))
    rng = np.random.default_rng(params.seed)

    face_idx = rng.choice(len(mesh.faces), size=n_candidates, p=areas / total_area)
    u = rng.random(n_candidates)
    v = rng.random(n_candidates)
    su = np.sqrt(u)
    w0, w1, w2 = 1.0 - su, su * (1.0 - v), su * v
    p = mesh.points
    f = mesh.faces[face_idx]
    cand = w0[:, None] * p[f[:, 0]] + w1[:, None] * p[f[:, 1]] + w2[:, None] * p[f[:, 2]]

    tree = cKDTree(p)
    _, nearest = tree.query(cand)
    fine = curv[nearest] > curv.mean()
    radii = np.where(fine, r1, r2)

    visit = rng.permutation(n_candidates)

    # Uniform grid with cell size r2 (the max radius): any conflicting pair
    # lies within one cell of each other.
    cell = r2
    grid: dict[tuple[int, int, int], list[tuple[float, float, float, float]]] = {}
    accepted: list[int] = []
    offsets = [
        (dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    ]
    for ci in visit:
        x, y, z = cand[ci]
        r_q = radii[ci]
        key = (int(math.floor(x / cell)), int(math.floor(y / cell)), int(math.floor(z / cell)))
        ok = True
        for dx, dy, dz in offsets:
            bucket = grid.get((key[0] + dx, key[1] + dy, key[2] + dz))
            if not bucket:
                continue
            for sx, sy, sz, r_s in bucket:
                lim = r_q if r_q < r_s else r_s
                ddx, ddy, ddz = x - sx, y - sy, z - sz
                if ddx * ddx + ddy * ddy + ddz * ddz < lim * lim:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            grid.setdefault(key, []).append((x, y, z, r_q))
            accepted.append(int(ci))
    return PointCloud3D(cand[np.asarray(accepted, dtype=np.int64)])


def retriangulate(samples: PointCloud3D) -> TriMesh:
    """Delaunay triangulation of the (x, y) projections, lifted to 3D.

    Valid for surfaces that are height fields over the plan view, which the
    reconstructed iris is; rejects all-collinear projections.
    """
    if len(samples) < 3:
        raise TriangulationError(f"need >= 3 samples, got {len(samples)}")
    faces = delaunay_2d(samples.points[:, :2])
    return TriMesh(samples, faces)


def refine_surface(
    coarse: TriMesh, max_curvature: np.ndarray, params: SamplingParams
) -> tuple[PointCloud3D, TriMesh]:
    """Resample a coarse mesh and re-triangulate: the refinement stage."""
    samples = poisson_disk_resample(coarse, max_curvature, params)
    if len(samples) < 3:
        raise SamplingError(
            f"resampling produced only {len(samples)} points; radii too large "
            "for this surface"
        )
    return samples, retriangulate(samples)
