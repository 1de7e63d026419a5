"""P1 assembly of the magnetic form |(i grad + A) u|^2 and of the Dirichlet Laplacian."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_jacobi, roots_legendre

from .geometry import BOUNDARY, SLIT, Mesh
from .potential import PoleSet, edge_phase, eval_A

# local vertex pairs (row, col) of a triangle, in a fixed order
_R = np.repeat(np.arange(3), 3)
_C = np.tile(np.arange(3), 3)


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on a triangle in barycentric coordinates; weights sum to one."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Jacobi x Gauss-Legendre product rule exact to ``order``.

    Nodes are strictly interior and weights positive; the rule is not symmetric.
    """
    n = max(1, -(-(order + 1) // 2))
    tu, wu = roots_jacobi(n, 1.0, 0.0)
    tv, wv = roots_legendre(n)
    u = 0.5 * (1.0 + tu)
    v = 0.5 * (1.0 + tv)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = W.ravel() / W.sum()
    nodes = np.column_stack([1.0 - x - y, x, y])
    nodes.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(order, nodes, w)


@dataclass(frozen=True)
class AssembledSystem:
    S: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray  # vertex -> dof, -1 when eliminated
    free: np.ndarray  # dof -> vertex
    kind: str
    config: Optional[PoleSet] = None

    @property
    def dim(self) -> int:
        return len(self.free)

    @property
    def eliminated(self) -> np.ndarray:
        return np.flatnonzero(self.dof_map < 0)

    def to_vertices(self, v) -> np.ndarray:
        out = np.zeros(len(self.dof_map), dtype=np.result_type(v, float))
        out[self.free] = v
        return out

    def restrict(self, field) -> np.ndarray:
        return np.asarray(field)[self.free]


def _gradients(mesh: Mesh):
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        raise AssemblyError("degenerate triangle")
    area = 0.5 * det
    # gradients of barycentric coordinates: rows are grad(phi_k)
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    G = np.stack([-g1 - g2, g1, g2], axis=1)
    return G, area


def _mass_local(area: np.ndarray, mass: str) -> np.ndarray:
    if mass == "consistent":
        base = (np.ones((3, 3)) + np.eye(3)) / 12.0
        return area[:, None, None] * base[None]
    if mass == "lumped":
        return area[:, None, None] * (np.eye(3) / 3.0)[None]
    raise ValueError(f"unknown mass option {mass!r}")


def _global(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    T = mesh.triangles
    rows = T[:, _R].ravel()
    cols = T[:, _C].ravel()
    data = local.reshape(len(T), 9).ravel()
    # canonical summation order, so the result does not depend on triangle order
    order = np.lexsort((np.imag(data), np.real(data), cols, rows))
    n = mesh.n_vertices
    A = sp.coo_matrix((data[order], (rows[order], cols[order])), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def _finish(A: sp.csr_matrix, free: np.ndarray, hermitian: bool) -> sp.csr_matrix:
    A = A[free][:, free].tocsr()
    if hermitian:
        A = ((A + A.getH()) * 0.5).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def _dofs(mesh: Mesh, eliminated_mask: np.ndarray):
    free = np.flatnonzero(~eliminated_mask)
    dof_map = np.full(mesh.n_vertices, -1, dtype=np.int64)
    dof_map[free] = np.arange(len(free))
    return free, dof_map


def stiffness_local(mesh: Mesh) -> np.ndarray:
    G, area = _gradients(mesh)
    return area[:, None, None] * np.einsum("tid,tjd->tij", G, G)


def assemble_laplacian(mesh: Mesh, mass: str = "lumped") -> AssembledSystem:
    """Dirichlet Laplacian; outer boundary and slit vertices are eliminated."""
    G, area = _gradients(mesh)
    K = _global(mesh, area[:, None, None] * np.einsum("tid,tjd->tij", G, G))
    M = _global(mesh, _mass_local(area, mass))
    elim = (mesh.flags & (BOUNDARY | SLIT)) != 0
    free, dof_map = _dofs(mesh, elim)
    return AssembledSystem(_finish(K, free, True), _finish(M, free, True), dof_map, free, "laplacian")


def pole_vertices(mesh: Mesh, config: PoleSet) -> np.ndarray:
    out = []
    for p in config.points:
        hit = np.flatnonzero((mesh.vertices[:, 0] == p[0]) & (mesh.vertices[:, 1] == p[1]))
        if len(hit) == 0:
            raise AssemblyError(f"pole {p} is not a mesh vertex")
        out.extend(hit.tolist())
    return np.array(sorted(set(out)), dtype=np.int64)


def local_edge_phases(mesh: Mesh, config: PoleSet) -> np.ndarray:
    """theta[t, r, c] = integral of A from vertex c to vertex r of triangle t."""
    p = mesh.vertices[mesh.triangles]
    theta = edge_phase(config, p[:, _C], p[:, _R])
    return theta.reshape(-1, 3, 3)


def _quadrature_local(mesh: Mesh, config: PoleSet, quad: QuadratureRule, pole_quad: QuadratureRule):
    G, area = _gradients(mesh)
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_triangles, 3, 3), dtype=complex)
    touching = np.zeros(mesh.n_triangles, dtype=bool)
    if len(config.points):
        touching = np.isin(mesh.triangles, pole_vertices(mesh, config)).any(axis=1)
    for mask, rule in ((~touching, quad), (touching, pole_quad)):
        if not mask.any():
            continue
        lam = rule.nodes  # (Q, 3)
        x = np.einsum("qk,tkd->tqd", lam, p[mask])
        A = eval_A(config, x)  # (t, Q, 2)
        B = 1j * G[mask][:, None, :, :] + A[:, :, None, :] * lam[None, :, :, None]  # (t,Q,3,2)
        out[mask] = area[mask, None, None] * np.einsum("q,tqcd,tqrd->trc", rule.weights, B, B.conj())
    return out


def assemble_magnetic(
    mesh: Mesh,
    config: PoleSet,
    quad: Optional[QuadratureRule] = None,
    scheme: str = "connection",
    mass: str = "lumped",
) -> AssembledSystem:
    """Magnetic form (i grad + A)^2 with Dirichlet data on boundary, slit and poles.

    ``scheme="connection"`` multiplies each P1 stiffness entry by exp(i theta)
    where theta is the exact line integral of A along the edge; the discrete
    operator is then gauge covariant, so on a slit mesh where A is a pure
    gauge it is unitarily similar to the discrete Laplacian.  With consistent
    mass the same phases are carried by the mass entries.

    ``scheme="quadrature"`` integrates (i grad phi_j + A phi_j).conj(...) with
    ``quad`` (order 6 by default) and an order-10 rule on triangles touching a pole.
    """
    G, area = _gradients(mesh)
    elim = (mesh.flags & (BOUNDARY | SLIT)) != 0
    if len(config.points):
        elim[pole_vertices(mesh, config)] = True
    free, dof_map = _dofs(mesh, elim)
    Ml = _mass_local(area, mass)
    if scheme == "connection":
        phase = np.exp(1j * local_edge_phases(mesh, config))
        Kl = area[:, None, None] * np.einsum("tid,tjd->tij", G, G)
        S = _global(mesh, Kl * phase)
        M = _global(mesh, Ml * phase) if mass == "consistent" else _global(mesh, Ml)
    elif scheme == "quadrature":
        quad = quad or triangle_rule(6)
        S = _global(mesh, _quadrature_local(mesh, config, quad, triangle_rule(10)))
        M = _global(mesh, Ml)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return AssembledSystem(_finish(S, free, True), _finish(M, free, True), dof_map, free, "magnetic", config)


def rayleigh_quotient(system: AssembledSystem, v) -> float:
    v = np.asarray(v)
    den = np.vdot(v, system.M @ v)
    if den.real <= 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float((np.vdot(v, system.S @ v) / den).real)


def dump_matrix(A, path) -> None:
    """Coordinate text dump, one ``i j re im`` line per stored nonzero."""
    C = sp.coo_matrix(A)
    data = C.data.astype(complex)
    lines = [f"{i} {j} {z.real!r} {z.imag!r}" for i, j, z in zip(C.row.tolist(), C.col.tolist(), data.tolist())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
