"""Planar domains and graded conforming triangulations.

Meshes are produced by Shewchuk's Triangle (quality switch ``q20``) driven by
an area-constraint refinement loop that realises a geometric size field around
the grading centres.  Slits are represented by duplicating the interior slit
vertices so the two sides carry independent degrees of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import triangle
from shapely.geometry import LineString, Point, Polygon

BOUNDARY = 1
SLIT = 2
POLE = 4
ORIGIN = 8

_BOUNDARY_MARK = 1
_SLIT_MARK = 2


class MeshError(ValueError):
    """Raised when a mesh cannot be generated from the given geometry."""


@dataclass(frozen=True)
class DomainSpec:
    kind: str  # "disk" | "polygon"
    radius: float = 1.0
    boundary_segments: int = 256
    vertices: Optional[tuple] = None

    @classmethod
    def disk(cls, radius: float = 1.0, boundary_segments: int = 256) -> "DomainSpec":
        return cls("disk", radius=float(radius), boundary_segments=int(boundary_segments))

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "DomainSpec":
        return cls("polygon", vertices=tuple((float(x), float(y)) for x, y in vertices))

    def boundary_polygon(self) -> np.ndarray:
        """Counter-clockwise boundary vertices, shape (n, 2)."""
        if self.kind == "disk":
            if self.radius <= 0:
                raise MeshError("disk radius must be positive")
            if self.boundary_segments < 3:
                raise MeshError("disk needs at least 3 boundary segments")
            t = 2.0 * np.pi * np.arange(self.boundary_segments) / self.boundary_segments
            return self.radius * np.column_stack([np.cos(t), np.sin(t)])
        if self.kind == "polygon":
            pts = np.asarray(self.vertices, dtype=float)
            if pts.ndim != 2 or len(pts) < 3:
                raise MeshError("polygon needs at least 3 vertices")
            poly = Polygon(pts)
            if not poly.is_valid:
                raise MeshError("polygon is not simple")
            if _signed_area(pts) <= 0:
                raise MeshError("polygon must be positively oriented")
            return pts
        raise MeshError(f"unknown domain kind {self.kind!r}")

    def area(self) -> float:
        return _signed_area(self.boundary_polygon())

    def shape(self) -> Polygon:
        return Polygon(self.boundary_polygon())


@dataclass(frozen=True)
class Obstacle:
    """Open polyline removed from the domain (slit)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise MeshError("obstacle needs at least two 2D points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def segment(cls, p, q) -> "Obstacle":
        return cls(np.array([p, q], dtype=float))


@dataclass(frozen=True)
class GradingPolicy:
    refine_centers: tuple
    target_h_at_center: float
    growth_ratio: float = 1.25

    def size(self, x: np.ndarray, h_max: float) -> np.ndarray:
        """Target edge length at points ``x``: grows by ``growth_ratio`` per element ring."""
        h = np.full(len(x), h_max, dtype=float)
        for c in self.refine_centers:
            d = np.hypot(x[:, 0] - c[0], x[:, 1] - c[1])
            h = np.minimum(h, self.target_h_at_center + (self.growth_ratio - 1.0) * d)
        return h


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    flags: np.ndarray
    poles: tuple = ()
    origin: Optional[int] = None
    h_max: float = np.inf

    def __post_init__(self):
        for name in ("vertices", "triangles", "flags"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_vertex_flags(self) -> np.ndarray:
        return (self.flags & BOUNDARY) != 0

    @property
    def slit_vertex_flags(self) -> np.ndarray:
        return (self.flags & SLIT) != 0

    @property
    def marked_vertices(self) -> dict:
        out = {f"pole{k}": int(i) for k, i in enumerate(self.poles)}
        if self.origin is not None:
            out["origin"] = int(self.origin)
        return out

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges (sorted vertex pairs) and the number of triangles sharing each."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq, counts


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _snap_into_polyline(pts: np.ndarray, q: np.ndarray, tol: float) -> np.ndarray:
    """Insert point ``q`` into the polyline if it lies within ``tol`` of an interior portion."""
    best = None
    for k in range(len(pts) - 1):
        p0, p1 = pts[k], pts[k + 1]
        d = p1 - p0
        t = np.clip(np.dot(q - p0, d) / np.dot(d, d), 0.0, 1.0)
        dist = np.hypot(*(p0 + t * d - q))
        if best is None or dist < best[0]:
            best = (dist, k, t)
    dist, k, t = best
    if dist > tol:
        return pts
    if np.any(np.all(pts == q, axis=1)):
        return pts
    # replace a vertex that is too close, otherwise split the segment
    near = np.hypot(*(pts - q).T)
    j = int(np.argmin(near))
    if near[j] < tol and 0 < j < len(pts) - 1:
        out = pts.copy()
        out[j] = q
        return out
    if t <= 0.0 or t >= 1.0:
        return pts
    return np.vstack([pts[: k + 1], q[None, :], pts[k + 1 :]])


def generate_mesh(
    domain: DomainSpec,
    poles: Sequence[Sequence[float]] = (),
    obstacle: Optional[Obstacle] = None,
    h_max: float = 0.1,
    grading: Optional[GradingPolicy] = None,
    mark_origin: bool = True,
    max_rounds: int = 40,
) -> Mesh:
    """Triangulate ``domain`` with the poles (and the origin) as exact vertices.

    With an ``obstacle`` the polyline becomes a union of mesh edges and its
    interior vertices are duplicated, one copy per side.
    """
    boundary = domain.boundary_polygon()
    shape = Polygon(boundary)
    poles = np.asarray(poles, dtype=float).reshape(-1, 2)
    if h_max <= 0:
        raise MeshError("h_max must be positive")
    if grading is not None:
        if not grading.target_h_at_center <= h_max:
            raise MeshError("unsatisfiable grading: target_h_at_center exceeds h_max")
        if not (1.0 < grading.growth_ratio <= 2.0):
            raise MeshError("unsatisfiable grading: growth_ratio must lie in (1, 2]")
        if grading.target_h_at_center <= 0:
            raise MeshError("unsatisfiable grading: target_h_at_center must be positive")

    tol = 1e-9 * max(1.0, float(np.max(np.abs(boundary))))
    for p in poles:
        if not shape.contains(Point(p)) or shape.exterior.distance(Point(p)) <= tol:
            raise MeshError(f"pole {tuple(p)} is not strictly interior to the domain")
    origin = np.zeros(2)
    if mark_origin and (not shape.contains(Point(origin)) or shape.exterior.distance(Point(origin)) <= tol):
        raise MeshError("origin is not strictly interior to the domain")

    slit_pts = None
    if obstacle is not None:
        slit_pts = np.array(obstacle.points, dtype=float)
        line = LineString(slit_pts)
        if not line.is_simple:
            raise MeshError("obstacle polyline self-intersects")
        if line.intersects(shape.exterior) or not shape.contains(line):
            raise MeshError("obstacle intersects the domain boundary")
        if len(poles) == 2:
            ends = {tuple(slit_pts[0]), tuple(slit_pts[-1])}
            if ends != {tuple(poles[0]), tuple(poles[1])}:
                raise MeshError("obstacle endpoints must be the two poles")
        if mark_origin:
            snap = 0.25 * (grading.size(origin[None], h_max)[0] if grading else h_max)
            slit_pts = _snap_into_polyline(slit_pts, origin, snap)

    # planar straight line graph
    pts = [boundary]
    segs = [np.column_stack([np.arange(len(boundary)), (np.arange(len(boundary)) + 1) % len(boundary)])]
    seg_marks = [np.full(len(boundary), _BOUNDARY_MARK)]
    extra = [p for p in poles]
    if mark_origin:
        extra.append(origin)
    n0 = len(boundary)
    index_of = {}

    def add_point(p):
        key = (float(p[0]), float(p[1]))
        if key not in index_of:
            index_of[key] = n0 + len(index_of)
        return index_of[key]

    for p in extra:
        add_point(p)
    if slit_pts is not None:
        ids = [add_point(p) for p in slit_pts]
        segs.append(np.column_stack([ids[:-1], ids[1:]]))
        seg_marks.append(np.full(len(ids) - 1, _SLIT_MARK))
    if index_of:
        pts.append(np.array(list(index_of.keys()), dtype=float))
    pslg = {
        "vertices": np.vstack(pts),
        "segments": np.vstack(segs).astype(np.int32),
        "segment_markers": np.concatenate(seg_marks).astype(np.int32)[:, None],
    }
    area_cap = np.sqrt(3.0) / 4.0 * h_max**2
    tri = triangle.triangulate(pslg, f"pq20Qa{area_cap:.17g}")
    for _ in range(max_rounds):
        P, T = tri["vertices"], tri["triangles"]
        c = P[T].mean(axis=1)
        h = grading.size(c, h_max) if grading else np.full(len(T), h_max)
        target = np.sqrt(3.0) / 4.0 * h**2
        p = P[T]
        area = 0.5 * np.abs(_cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
        if np.all(area <= target * (1.0 + 1e-9)):
            break
        tri["triangle_max_area"] = target[:, None]
        tri = triangle.triangulate(tri, "rpq20Qa")
    else:
        raise MeshError("unsatisfiable grading: refinement did not converge")

    V = np.array(tri["vertices"], dtype=float)
    T = np.array(tri["triangles"], dtype=np.int64)
    S = np.array(tri["segments"], dtype=np.int64)
    SM = np.array(tri["segment_markers"], dtype=np.int64).ravel()
    flags = np.zeros(len(V), dtype=np.int64)
    flags[np.unique(S[SM == _BOUNDARY_MARK])] |= BOUNDARY
    pole_ids = tuple(index_of[(float(p[0]), float(p[1]))] for p in poles)
    for i in pole_ids:
        flags[i] |= POLE
    origin_id = None
    if mark_origin:
        origin_id = index_of[(0.0, 0.0)]
        flags[origin_id] |= ORIGIN
    # consistent orientation
    p = V[T]
    neg = _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) < 0
    T[neg] = T[neg][:, [0, 2, 1]]
    if slit_pts is not None:
        slit_edges = S[SM == _SLIT_MARK]
        V, T, flags = _duplicate_slit(V, T, flags, slit_edges)
    mesh = Mesh(V, T, flags, poles=pole_ids, origin=origin_id, h_max=float(h_max))
    _validate(mesh)
    return mesh


def _duplicate_slit(V, T, flags, slit_edges):
    """Split the vertex fan at every interior slit vertex into its two sides."""
    slit_set = {tuple(sorted(e)) for e in slit_edges.tolist()}
    deg = {}
    for a, b in slit_set:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    for v in deg:
        flags[v] |= SLIT
    interior = sorted(v for v, d in deg.items() if d == 2)
    inc = {v: [] for v in interior}
    for t, tri in enumerate(T.tolist()):
        for v in tri:
            if v in inc:
                inc[v].append(t)
    new_V = [V]
    new_flags = [flags]
    T = T.copy()
    n = len(V)
    for v in interior:
        tris = inc[v]
        parent = {t: t for t in tris}

        def find(t):
            while parent[t] != t:
                parent[t] = parent[parent[t]]
                t = parent[t]
            return t

        by_edge = {}
        for t in tris:
            for w in T[t]:
                if w != v:
                    by_edge.setdefault(tuple(sorted((v, int(w)))), []).append(t)
        for e, ts in by_edge.items():
            if e in slit_set or len(ts) != 2:
                continue
            ra, rb = find(ts[0]), find(ts[1])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups = sorted({find(t) for t in tris})
        if len(groups) != 2:
            raise MeshError("slit vertex fan does not split into two sides")
        keep = groups[0]
        moved = [t for t in tris if find(t) != keep]
        new_V.append(V[v][None, :])
        new_flags.append(np.array([flags[v]]))
        for t in moved:
            T[t][T[t] == v] = n
        n += 1
    return np.vstack(new_V), T, np.concatenate(new_flags)


def _validate(mesh: Mesh) -> None:
    a = mesh.areas()
    if np.any(a <= 0):
        raise MeshError("degenerate or negatively oriented triangle")
    _, counts = mesh.edges()
    if np.any(counts > 2):
        raise MeshError("non-conforming mesh: edge shared by more than two triangles")


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four through its edge midpoints."""
    T = mesh.triangles
    nv = mesh.n_vertices
    e = np.sort(T[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inv, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1, 3)
    mid = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    f0, f1 = mesh.flags[uniq[:, 0]], mesh.flags[uniq[:, 1]]
    single = counts == 1
    mflags = np.zeros(len(uniq), dtype=np.int64)
    both_b = (f0 & BOUNDARY) & (f1 & BOUNDARY)
    both_s = (f0 & SLIT) & (f1 & SLIT)
    mflags[single & (both_b != 0)] |= BOUNDARY
    mflags[single & (both_b == 0) & (both_s != 0)] |= SLIT
    m = nv + inv  # midpoint ids for edges (01, 12, 20)
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    newT = np.vstack(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([m01, b, m12]),
            np.column_stack([m20, m12, c]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    out = Mesh(
        np.vstack([mesh.vertices, mid]),
        newT,
        np.concatenate([mesh.flags, mflags]),
        poles=mesh.poles,
        origin=mesh.origin,
        h_max=mesh.h_max / 2.0,
    )
    return out


def triangle_angles(mesh: Mesh) -> np.ndarray:
    """Interior angles in degrees, shape (T, 3)."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_triangles, 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        out[:, k] = np.degrees(np.arctan2(np.abs(_cross(u, v)), np.sum(u * v, axis=1)))
    return out


def mesh_quality(mesh: Mesh) -> dict:
    uniq, _ = mesh.edges()
    lengths = np.hypot(*(mesh.vertices[uniq[:, 1]] - mesh.vertices[uniq[:, 0]]).T)
    return {
        "min_angle": float(triangle_angles(mesh).min()),
        "h_max": float(lengths.max()),
        "h_min": float(lengths.min()),
        "vertex_count": mesh.n_vertices,
        "triangle_count": mesh.n_triangles,
    }


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"vertices {mesh.n_vertices} triangles {mesh.n_triangles}"]
    lines += [f"{x!r} {y!r} {int(f)}" for (x, y), f in zip(mesh.vertices.tolist(), mesh.flags.tolist())]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    rows = Path(path).read_text().splitlines()
    head = rows[0].split()
    if head[0] != "vertices" or head[2] != "triangles":
        raise MeshError("bad mesh header")
    n, t = int(head[1]), int(head[3])
    vx = np.array([r.split() for r in rows[1 : 1 + n]], dtype=float)
    tri = np.array([r.split() for r in rows[1 + n : 1 + n + t]], dtype=np.int64).reshape(-1, 3)
    flags = vx[:, 2].astype(np.int64)
    poles = tuple(int(i) for i in np.flatnonzero(flags & POLE))
    origin = np.flatnonzero(flags & ORIGIN)
    return Mesh(vx[:, :2].copy(), tri, flags, poles=poles, origin=int(origin[0]) if len(origin) else None)
