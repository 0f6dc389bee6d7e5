"""2D Delaunay triangulation via Bowyer-Watson incremental insertion.

Points are normalized to the unit box and inserted in index order into a
triangulation seeded with a large enclosing triangle. For each insertion the
cavity is the set of triangles whose circumcircle strictly contains the new
point; the cavity is re-triangulated as a fan from the point to its boundary
edges.

Tie-break for cocircular configurations: the strict in-circle test uses a
small tolerance, so a point lying on (or within tolerance of) a circumcircle
does not tear that triangle down. Equivalently, each point is perturbed
infinitesimally outward in insertion-index order, so the earlier-inserted
diagonal of a cocircular quad persists. This keeps the algorithm
deterministic and every output face passes the empty-circumcircle test to
the same tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import TriangulationError

__all__ = ["delaunay_2d", "circumcircles"]

_EPS_INCIRCLE = 1e-12
_SUPER = 1.0e3


def circumcircles(points: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and squared radii of triangles (vectorized)."""
    a = points[tris[:, 0]]
    b = points[tris[:, 1]] - a
    c = points[tris[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(np.abs(d) < 1e-300):
        raise TriangulationError("degenerate (collinear) triangle encountered")
    b2 = (b * b).sum(axis=1)
    c2 = (c * c).sum(axis=1)
    ux = (c[:, 1] * b2 - b[:, 1] * c2) / d
    uy = (b[:, 0] * c2 - c[:, 0] * b2) / d
    cc = a + np.column_stack([ux, uy])
    r2 = ux * ux + uy * uy
    return cc, r2


class _TriStore:
    """Grow-only parallel arrays of triangles with an alive mask."""

    def __init__(self, capacity: int):
        self.tri = np.empty((capacity, 3), dtype=np.int64)
        self.cc = np.empty((capacity, 2))
        self.r2 = np.empty(capacity)
        self.alive = np.zeros(capacity, dtype=bool)
        self.n = 0

    def _grow(self, need: int):
        cap = len(self.alive)
        if self.n + need <= cap:
            return
        new_cap = max(2 * cap, self.n + need)
        for name in ("tri", "cc", "r2", "alive"):
            old = getattr(self, name)
            shape = (new_cap,) + old.shape[1:]
            new = np.zeros(shape, dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def add(self, verts, points):
        self._grow(1)
        i = self.n
        self.tri[i] = verts
        cc, r2 = circumcircles(points, self.tri[i : i + 1])
        self.cc[i] = cc[0]
        self.r2[i] = r2[0]
        self.alive[i] = True
        self.n += 1
        return i


def _orient(a, b, p):
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _contains(tri_pts, p, tol):
    s0 = _orient(tri_pts[0], tri_pts[1], p)
    s1 = _orient(tri_pts[1], tri_pts[2], p)
    s2 = _orient(tri_pts[2], tri_pts[0], p)
    return s0 >= -tol and s1 >= -tol and s2 >= -tol


def _cavity_component(bad_idx, store, pts, p):
    """Keep only the edge-connected component of the cavity that contains
    (or is nearest to) the inserted point."""
    if len(bad_idx) == 1:
        return bad_idx
    edge_map: dict[tuple[int, int], list[int]] = {}
    for t in bad_idx:
        i, j, k = store.tri[t]
        for a, b in ((i, j), (j, k), (k, i)):
            e = (int(a), int(b)) if a < b else (int(b), int(a))
            edge_map.setdefault(e, []).append(t)
    seed = None
    for t in bad_idx:
        if _contains(pts[store.tri[t]], p, 1e-12):
            seed = t
            break
    if seed is None:
        depth = store.r2[bad_idx] - ((store.cc[bad_idx] - p) ** 2).sum(axis=1)
        seed = bad_idx[int(np.argmax(depth))]
    comp = {int(seed)}
    frontier = [int(seed)]
    while frontier:
        t = frontier.pop()
        i, j, k = store.tri[t]
        for a, b in ((i, j), (j, k), (k, i)):
            e = (int(a), int(b)) if a < b else (int(b), int(a))
            for other in edge_map[e]:
                if other not in comp:
                    comp.add(other)
                    frontier.append(other)
    if len(comp) == len(bad_idx):
        return bad_idx
    return np.array(sorted(comp), dtype=np.int64)


def delaunay_2d(points) -> np.ndarray:
    """Triangulate 2D points; returns (m,3) CCW faces indexing the input.

    Rejects fewer than 3 points, exact duplicates, and all-collinear input.
    """
    pts_in = np.asarray(points, dtype=np.float64)
    if pts_in.ndim != 2 or pts_in.shape[1] != 2:
        raise TriangulationError(f"points must be (n,2), got {pts_in.shape}")
    n = len(pts_in)
    if n < 3:
        raise TriangulationError(f"need at least 3 points, got {n}")
    uniq = np.unique(pts_in, axis=0)
    if len(uniq) != n:
        raise TriangulationError("duplicate plan-view points")

    lo = pts_in.min(axis=0)
    span = float(max(np.ptp(pts_in, axis=0).max(), 1e-30))
    norm = (pts_in - lo) / span
    centered = norm - norm.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-30):
        raise TriangulationError("all points collinear in projection")

    # Enclosing triangle; slightly asymmetric to dodge symmetric ties.
    pts = np.vstack(
        [norm, [[-_SUPER, -_SUPER * 0.97], [_SUPER * 1.03, -_SUPER], [0.49, _SUPER]]]
    )
    s0, s1, s2 = n, n + 1, n + 2
    store = _TriStore(8 * n + 64)
    store.add((s0, s1, s2), pts)

    for pi in range(n):
        p = pts[pi]
        live = store.alive[: store.n]
        d2 = ((store.cc[: store.n] - p) ** 2).sum(axis=1)
        margin = np.maximum(store.r2[: store.n], 1.0) * _EPS_INCIRCLE
        bad = live & (d2 < store.r2[: store.n] - margin)
        bad_idx = np.nonzero(bad)[0]
        if bad_idx.size == 0:
            # Point on / within tolerance of circumcircles only: fall back to
            # the triangle that geometrically contains it.
            found = None
            for t in np.nonzero(live)[0]:
                if _contains(pts[store.tri[t]], p, 1e-12):
                    found = t
                    break
            if found is None:
                raise TriangulationError(f"insertion point {pi} not locatable")
            bad_idx = np.array([found], dtype=np.int64)
        else:
            bad_idx = _cavity_component(bad_idx, store, pts, p)

        edge_count: dict[tuple[int, int], int] = {}
        directed: list[tuple[int, int]] = []
        for t in bad_idx:
            i, j, k = (int(v) for v in store.tri[t])
            for a, b in ((i, j), (j, k), (k, i)):
                e = (a, b) if a < b else (b, a)
                edge_count[e] = edge_count.get(e, 0) + 1
                directed.append((a, b))
        store.alive[bad_idx] = False
        for a, b in directed:
            e = (a, b) if a < b else (b, a)
            if edge_count[e] != 1:
                continue
            # Cavity triangles are CCW, so their once-used directed edges run
            # CCW around the cavity and (a, b, pi) stays CCW.
            if _orient(pts[a], pts[b], p) <= 0:
                a, b = b, a
            store.add((a, b, pi), pts)

    live = store.alive[: store.n]
    tri = store.tri[: store.n][live]
    real = (tri < n).all(axis=1)
    return np.ascontiguousarray(tri[real])
