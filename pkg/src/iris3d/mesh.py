"""Point cloud and indexed triangle mesh types, plus ASCII PLY round-trip.

TriMesh enforces its structural invariants at construction: indices in
range, no degenerate (zero-area) faces, and every edge shared by at most
two faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError

__all__ = ["PointCloud3D", "TriMesh", "write_ply", "read_ply"]

_AZIMUTH_TOL = 1e-9


@dataclass
class PointCloud3D:
    """Points (x, y, z) in length units, optionally with per-point azimuth
    phi in [0, 2*pi) and radius rho >= 0 consistent with (x, y)."""

    points: np.ndarray
    azimuth: np.ndarray | None = None
    radius: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise MeshError(f"points must be (n,3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise MeshError("point coordinates must be finite")
        self.points = pts
        if (self.azimuth is None) != (self.radius is None):
            raise MeshError("azimuth and radius must be provided together")
        if self.azimuth is not None:
            phi = np.asarray(self.azimuth, dtype=np.float64)
            rho = np.asarray(self.radius, dtype=np.float64)
            if phi.shape != (len(pts),) or rho.shape != (len(pts),):
                raise MeshError("azimuth/radius must be per-point 1-D arrays")
            if np.any(rho < 0):
                raise MeshError("radius must be non-negative")
            dx = rho * np.cos(phi) - pts[:, 0]
            dy = rho * np.sin(phi) - pts[:, 1]
            err = np.hypot(dx, dy).max() if len(pts) else 0.0
            if err > _AZIMUTH_TOL:
                raise MeshError(
                    f"azimuth/radius inconsistent with (x,y): max error {err:.3g}"
                )
            self.azimuth = phi
            self.radius = rho

    def __len__(self):
        return len(self.points)

    def azimuths(self) -> np.ndarray:
        """Stored azimuths if present, otherwise atan2(y, x) mod 2*pi."""
        if self.azimuth is not None:
            return self.azimuth
        phi = np.arctan2(self.points[:, 1], self.points[:, 0])
        return np.mod(phi, 2.0 * np.pi)


@dataclass
class TriMesh:
    vertices: PointCloud3D
    faces: np.ndarray = field(default_factory=lambda: np.empty((0, 3), dtype=np.int64))

    def __post_init__(self):
        faces = np.asarray(self.faces, dtype=np.int64)
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (m,3), got {faces.shape}")
        self.faces = faces
        self.validate()

    @property
    def points(self) -> np.ndarray:
        return self.vertices.points

    def validate(self) -> None:
        n = len(self.vertices)
        f = self.faces
        if f.size == 0:
            return
        if f.min() < 0 or f.max() >= n:
            raise MeshError(f"face index out of range [0,{n}): {f.min()}..{f.max()}")
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise MeshError("face with repeated vertex")
        areas = self.face_areas()
        # Degeneracy is scale-free: compare twice-area to the squared longest
        # edge of each face.
        p = self.points
        e0 = np.linalg.norm(p[f[:, 1]] - p[f[:, 0]], axis=1)
        e1 = np.linalg.norm(p[f[:, 2]] - p[f[:, 1]], axis=1)
        e2 = np.linalg.norm(p[f[:, 0]] - p[f[:, 2]], axis=1)
        longest = np.maximum(np.maximum(e0, e1), e2)
        bad = np.nonzero(2.0 * areas <= 1e-12 * longest**2)[0]
        if bad.size:
            raise MeshError(f"degenerate (zero-area) faces at indices {bad[:8].tolist()}")
        counts = self.edge_face_counts()
        worst = max(counts.values())
        if worst > 2:
            edge = next(e for e, c in counts.items() if c == worst)
            raise MeshError(f"edge {edge} shared by {worst} > 2 faces")

    def face_areas(self) -> np.ndarray:
        p = self.points
        f = self.faces
        a = p[f[:, 1]] - p[f[:, 0]]
        b = p[f[:, 2]] - p[f[:, 0]]
        return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)

    def edge_face_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for i, j, k in self.faces:
            for a, b in ((i, j), (j, k), (k, i)):
                e = (int(a), int(b)) if a < b else (int(b), int(a))
                counts[e] = counts.get(e, 0) + 1
        return counts


def write_ply(path, mesh: TriMesh, extra: dict[str, np.ndarray] | None = None) -> None:
    """Write an ASCII PLY with x,y,z vertex properties plus optional extra
    per-vertex float columns (e.g. curvature values)."""
    extra = extra or {}
    n = len(mesh.vertices)
    for name, col in extra.items():
        if np.asarray(col).shape != (n,):
            raise MeshError(f"extra column {name!r} must have {n} entries")
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {n}\n")
        for prop in ("x", "y", "z"):
            fh.write(f"property double {prop}\n")
        for name in extra:
            fh.write(f"property double {name}\n")
        fh.write(f"element face {len(mesh.faces)}\n")
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        cols = [mesh.points[:, i] for i in range(3)]
        cols += [np.asarray(extra[name], dtype=np.float64) for name in extra]
        for row in zip(*cols):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for i, j, k in mesh.faces:
            fh.write(f"3 {i} {j} {k}\n")


def read_ply(path) -> tuple[TriMesh, dict[str, np.ndarray]]:
    """Read an ASCII PLY written by write_ply (or compatible)."""
    with open(path) as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise MeshError(f"{path}: not a PLY file")
        if fh.readline().strip() != "format ascii 1.0":
            raise MeshError(f"{path}: only ascii 1.0 PLY supported")
        n_vert = n_face = 0
        vert_props: list[str] = []
        element = None
        while True:
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: truncated header")
            parts = line.split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "element":
                element = parts[1]
                if element == "vertex":
                    n_vert = int(parts[2])
                elif element == "face":
                    n_face = int(parts[2])
            elif parts[0] == "property" and element == "vertex" and parts[1] != "list":
                vert_props.append(parts[2])
            elif parts[0] == "end_header":
                break
        data = np.empty((n_vert, len(vert_props)))
        for i in range(n_vert):
            data[i] = [float(t) for t in fh.readline().split()]
        faces = np.empty((n_face, 3), dtype=np.int64)
        for i in range(n_face):
            parts = fh.readline().split()
            if parts[0] != "3":
                raise MeshError(f"{path}: only triangle faces supported")
            faces[i] = [int(t) for t in parts[1:4]]
    idx = {name: vert_props.index(name) for name in ("x", "y", "z")}
    points = data[:, [idx["x"], idx["y"], idx["z"]]]
    extra = {
        name: data[:, i]
        for i, name in enumerate(vert_props)
        if name not in ("x", "y", "z")
    }
    return TriMesh(PointCloud3D(points), faces), extra
