"""Nodal sets of magnetic-real P1 fields as planar graphs.

A magnetic-real field is locally exp(i psi) times a real function, so the sign
of that real function along an edge (i, j) is read from
Re(w_j conj(w_i) exp(-i theta_ij)) with theta_ij the line integral of A along
the edge.  No global branch of the phase is needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .geometry import BOUNDARY, POLE, SLIT, Mesh, Obstacle
from .potential import PoleSet, edge_phase, gauge_double


class NodalError(ValueError):
    pass


@dataclass
class Node:
    id: int
    position: np.ndarray
    degree: int
    kind: str  # "pole" | "crossing" | "endpoint"
    component: int = -1


@dataclass
class Edge:
    id: int
    a: int
    b: int
    points: np.ndarray
    component: int = -1


@dataclass
class NodalGraph:
    nodes: list
    edges: list
    b1: int
    mu: int
    pole_nodes: dict = field(default_factory=dict)  # pole index -> node id
    alignment_residual: float = 0.0


@dataclass(frozen=True)
class NodalStats:
    d_a: float
    single_arc: bool
    log_ratio: float


def _edge_key(i, j):
    return ("e", i, j) if i < j else ("e", j, i)


def extract_nodal_set(
    mesh: Mesh,
    w,
    config: Optional[PoleSet] = None,
    align_tol: float = 1e-4,
    zero_rel: float = 1e-14,
) -> NodalGraph:
    """Zero set of the per-vertex field ``w`` by marching triangles.

    Triangles touching a Dirichlet vertex (boundary, slit, pole) are skipped;
    arcs entering a pole's one-ring are joined to the pole, arcs leaving the
    active region end at degree-1 endpoints.
    """
    w = np.asarray(w, dtype=complex)
    if w.shape != (mesh.n_vertices,):
        raise NodalError("field must have one value per mesh vertex")
    X = mesh.vertices
    cfg = config if config is not None else PoleSet((), ())
    pole_ids = []
    for p in cfg.points:
        hit = np.flatnonzero((X[:, 0] == p[0]) & (X[:, 1] == p[1]))
        if len(hit) != 1:
            raise NodalError(f"pole {p} is not a unique mesh vertex")
        pole_ids.append(int(hit[0]))
    inactive = (mesh.flags & (BOUNDARY | SLIT | POLE)) != 0
    inactive[pole_ids] = True

    norm = np.linalg.norm(w[~inactive])
    if norm == 0:
        raise NodalError("field vanishes identically")
    keep = ~inactive
    g = gauge_double(cfg, X[keep]) if len(cfg.points) else np.ones(keep.sum())
    align = float(np.linalg.norm(g * np.conj(w[keep]) - w[keep]) / norm)
    if align > align_tol:
        raise NodalError(f"field is not magnetic-real (conjugation residual {align:.2e})")

    mag = np.abs(w)
    zero = mag <= zero_rel * mag[keep].max()
    T = mesh.triangles
    active = ~inactive[T].any(axis=1)

    # sign changes per edge in the local gauge
    e = np.sort(T[active][:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    E = np.unique(e, axis=0)
    i, j = E[:, 0], E[:, 1]
    theta = edge_phase(cfg, X[i], X[j]) if len(cfg.points) else np.zeros(len(E))
    prod = w[j] * np.conj(w[i]) * np.exp(-1j * theta)
    crossing = (prod.real < 0) & ~zero[i] & ~zero[j]
    cross_at = {}
    for a, b in zip(i[crossing].tolist(), j[crossing].tolist()):
        t = mag[a] / (mag[a] + mag[b])
        cross_at[(a, b)] = (1.0 - t) * X[a] + t * X[b]

    pos = {}
    adj = {}

    def link(u, v):
        if u == v:
            return
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    def vnode(k):
        key = ("v", k)
        pos[key] = X[k]
        return key

    def enode(a, b):
        key = _edge_key(a, b)
        pos[key] = cross_at[(key[1], key[2])]
        return key

    for tri in T[active].tolist():
        z = [zero[k] for k in tri]
        nz = sum(z)
        if nz == 3:
            continue
        if nz == 2:
            a, b = [tri[k] for k in range(3) if z[k]]
            link(vnode(a), vnode(b))
            continue
        if nz == 1:
            k0 = z.index(True)
            a, b = tri[(k0 + 1) % 3], tri[(k0 + 2) % 3]
            if (min(a, b), max(a, b)) in cross_at:
                link(vnode(tri[k0]), enode(a, b))
            continue
        hits = [(tri[k], tri[(k + 1) % 3]) for k in range(3)
                if (min(tri[k], tri[(k + 1) % 3]), max(tri[k], tri[(k + 1) % 3])) in cross_at]
        if len(hits) == 2:
            link(enode(*hits[0]), enode(*hits[1]))
        elif len(hits) != 0:
            raise NodalError("inconsistent sign pattern in a triangle; field not magnetic-real")

    # join arcs that stop at a pole's one-ring
    for k, pid in enumerate(pole_ids):
        pkey = ("p", k)
        pos[pkey] = X[pid]
        adj.setdefault(pkey, set())
        ring_tris = T[(T == pid).any(axis=1)]
        ring_vertices = set(ring_tris.ravel().tolist()) - {pid}
        link_edges = set()
        for tri in ring_tris.tolist():
            a, b = [v for v in tri if v != pid]
            link_edges.add((min(a, b), max(a, b)))
        for key in list(adj):
            if key[0] == "p" or len(adj[key]) > 1:
                continue
            if (key[0] == "e" and (key[1], key[2]) in link_edges) or (key[0] == "v" and key[1] in ring_vertices):
                link(pkey, key)

    return _build_graph(pos, adj, len(pole_ids), align)


def _components(keys, adj):
    comp = {}
    c = 0
    for k in keys:
        if k in comp:
            continue
        stack = [k]
        comp[k] = c
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp[v] = c
                    stack.append(v)
        c += 1
    return comp, c


def count_faces(pos, adj) -> int:
    """Faces of the straight-line embedding, unbounded face included, by half-edge tracing."""
    order = {}
    for v, nbrs in adj.items():
        nb = sorted(nbrs, key=lambda u: np.arctan2(pos[u][1] - pos[v][1], pos[u][0] - pos[v][0]))
        order[v] = {u: idx for idx, u in enumerate(nb)}
        order[v]["_list"] = nb
    comp, ncomp = _components(sorted(adj, key=str), adj)
    cycles = [0] * ncomp
    seen = set()
    for u in sorted(adj, key=str):
        for v in order[u]["_list"]:
            if (u, v) in seen:
                continue
            cycles[comp[u]] += 1
            a, b = u, v
            while (a, b) not in seen:
                seen.add((a, b))
                lst = order[b]["_list"]
                c = lst[(order[b][a] - 1) % len(lst)]
                a, b = b, c
    # isolated vertices bound no face of their own
    faces = 1
    for c in range(ncomp):
        faces += max(cycles[c], 1) - 1
    return faces


def _build_graph(pos, adj, n_poles, align) -> NodalGraph:
    keys = sorted(adj, key=str)
    comp, ncomp = _components(keys, adj)
    is_node = {k: (k[0] == "p" or len(adj[k]) != 2) for k in keys}
    # loops without any branch or end point get one artificial node
    has_node = set(comp[k] for k in keys if is_node[k])
    for k in keys:
        if comp[k] not in has_node:
            is_node[k] = True
            has_node.add(comp[k])
    node_id = {}
    nodes = []
    pole_nodes = {}
    for k in keys:
        if not is_node[k]:
            continue
        deg = len(adj[k])
        kind = "pole" if k[0] == "p" else ("endpoint" if deg == 1 else "crossing")
        node_id[k] = len(nodes)
        nodes.append(Node(len(nodes), np.array(pos[k], dtype=float), deg, kind, comp[k]))
        if k[0] == "p":
            pole_nodes[k[1]] = node_id[k]
    edges = []
    used = set()
    for k in keys:
        if not is_node[k]:
            continue
        for nxt in sorted(adj[k], key=str):
            if (k, nxt) in used:
                continue
            chain = [k, nxt]
            used.add((k, nxt))
            prev, cur = k, nxt
            while not is_node[cur]:
                a, b = adj[cur]
                step = b if a == prev else a
                used.add((cur, step))
                prev, cur = cur, step
                chain.append(cur)
            used.add((chain[-1], chain[-2]))
            pts = np.array([pos[c] for c in chain], dtype=float)
            edges.append(Edge(len(edges), node_id[chain[0]], node_id[chain[-1]], pts, comp[k]))
    mu = count_faces(pos, adj)
    return NodalGraph(nodes, edges, ncomp, mu, pole_nodes, align)


def euler_check(graph: NodalGraph) -> int:
    """mu - b1 - sum(nu/2 - 1) - 1; zero for a correctly embedded planar graph."""
    twice = 2 * graph.mu - 2 * graph.b1 - sum(n.degree - 2 for n in graph.nodes) - 2
    return twice // 2 if twice % 2 == 0 else twice / 2


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    try:
        points = points[ConvexHull(points).vertices]
    except QhullError:
        pass
    return float(pdist(points).max())


def nodal_stats(graph: NodalGraph, config) -> NodalStats:
    if len(graph.pole_nodes) < 2:
        raise NodalError("poles missing from the nodal graph")
    pole_ids = [graph.pole_nodes[k] for k in sorted(graph.pole_nodes)]
    comps = {graph.nodes[i].component for i in pole_ids}
    pts = [graph.nodes[i].position[None, :] for i in pole_ids]
    pts += [e.points for e in graph.edges if e.component in comps]
    d_a = _diameter(np.unique(np.vstack(pts), axis=0))
    c = graph.nodes[pole_ids[0]].component
    in_comp_nodes = [n for n in graph.nodes if n.component == c]
    in_comp_edges = [e for e in graph.edges if e.component == c]
    single = (
        len(comps) == 1
        and len(in_comp_nodes) == 2
        and all(n.kind == "pole" and n.degree == 1 for n in in_comp_nodes)
        and len(in_comp_edges) == 1
    )
    a = config.a
    ratio = abs(np.log(a)) / abs(np.log(d_a)) if 0 < d_a != 1 else np.inf
    return NodalStats(d_a, single, float(ratio))


def export_curve(graph: NodalGraph, config, min_spacing: float = 0.0) -> Obstacle:
    """The arc joining a- to a+ as a slit polyline with bit-exact pole endpoints.

    Interior points closer than ``min_spacing`` to the previously kept point
    (or to the final pole) are dropped.
    """
    stats = nodal_stats(graph, config)
    if not stats.single_arc:
        raise NodalError("nodal set near the poles is not a single arc")
    start, end = graph.pole_nodes[0], graph.pole_nodes[1]
    e = next(e for e in graph.edges if {e.a, e.b} == {start, end})
    pts = e.points if e.a == start else e.points[::-1]
    p_minus = np.array(config.points[0], dtype=float)
    p_plus = np.array(config.points[1], dtype=float)
    kept = [p_minus]
    for q in pts[1:-1]:
        if np.hypot(*(q - kept[-1])) >= min_spacing and np.hypot(*(q - p_plus)) >= min_spacing:
            kept.append(q)
    kept.append(p_plus)
    return Obstacle(np.array(kept))


def write_graph(graph: NodalGraph, path) -> None:
    lines = [f"node {n.id} {float(n.position[0])!r} {float(n.position[1])!r} {n.degree} {n.kind}" for n in graph.nodes]
    for e in graph.edges:
        lines.append(f"edge {e.id} {e.a} {e.b} {len(e.points)}")
        lines += [f"{x!r} {y!r}" for x, y in e.points.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> tuple[list, list]:
    """Nodes as (id, x, y, degree, kind) and edges as (id, a, b, points)."""
    rows = Path(path).read_text().splitlines()
    nodes, edges = [], []
    k = 0
    while k < len(rows):
        parts = rows[k].split()
        if parts[0] == "node":
            nodes.append((int(parts[1]), float(parts[2]), float(parts[3]), int(parts[4]), parts[5]))
            k += 1
        elif parts[0] == "edge":
            n = int(parts[4])
            pts = np.array([r.split() for r in rows[k + 1 : k + 1 + n]], dtype=float)
            edges.append((int(parts[1]), int(parts[2]), int(parts[3]), pts))
            k += 1 + n
        else:
            raise ValueError(f"unexpected line {rows[k]!r}")
    return nodes, edges


def graph_svg(graph: NodalGraph, mesh: Mesh, window=None, size: int = 600) -> str:
    """Nodal set over the mesh outline; ``window`` = (xmin, xmax, ymin, ymax) zooms."""
    uniq, counts = mesh.edges()
    outline = uniq[counts == 1]
    if window is None:
        lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
        window = (lo[0], hi[0], lo[1], hi[1])
    x0, x1, y0, y1 = window
    s = size / max(x1 - x0, y1 - y0)

    def tr(p):
        return (p[0] - x0) * s, (y1 - p[1]) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for a, b in outline.tolist():
        (ax, ay), (bx, by) = tr(mesh.vertices[a]), tr(mesh.vertices[b])
        out.append(f'<line x1="{ax:.3f}" y1="{ay:.3f}" x2="{bx:.3f}" y2="{by:.3f}" stroke="#888" stroke-width="1"/>')
    for e in graph.edges:
        pts = " ".join("%.3f,%.3f" % tr(p) for p in e.points)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#c00" stroke-width="1.5"/>')
    for n in graph.nodes:
        cx, cy = tr(n.position)
        color = "#00c" if n.kind == "pole" else "#090"
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="3" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
