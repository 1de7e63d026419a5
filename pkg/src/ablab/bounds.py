"""Logarithmic cut-off, test functions exp(i psi) rho u_j and the resulting upper bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad

from .eig import SpectrumSlice
from .fem import AssembledSystem, triangle_rule
from .geometry import BOUNDARY, Mesh
from .potential import PoleConfig, phase_psi


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class CutoffParams:
    epsilon: float
    tau: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise BoundsError("epsilon must lie in (0, 1)")
        if not (0.0 < self.tau < 1.0):
            raise BoundsError("tau must lie in (0, 1)")

    @property
    def outer(self) -> float:
        return self.epsilon**self.tau

    @property
    def slope(self) -> float:
        """(tau - 1) log(epsilon), positive."""
        return (self.tau - 1.0) * np.log(self.epsilon)


def rho(x, params: CutoffParams) -> np.ndarray:
    """0 inside |x| <= eps, 1 outside |x| >= eps^tau, linear in log|x| between."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    with np.errstate(divide="ignore"):
        mid = (np.log(r) - np.log(params.epsilon)) / params.slope
    return np.clip(np.where(r <= params.epsilon, 0.0, mid), 0.0, 1.0)


def rho_radial(r, params: CutoffParams):
    r = np.asarray(r, dtype=float)
    return rho(np.stack([r, np.zeros_like(r)], axis=-1), params)


def grad_rho(x, params: CutoffParams) -> np.ndarray:
    """x / ((tau - 1) log(eps) |x|^2) on the annulus, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    inside = (r2 > params.epsilon**2) & (r2 < params.outer**2)
    safe = np.where(inside, r2, 1.0)
    return np.where(inside[..., None], x / (params.slope * safe[..., None]), 0.0)


def cutoff_energy_closed_form(params: CutoffParams) -> float:
    return float(2.0 * np.pi / params.slope)


def cutoff_energy(params: CutoffParams) -> tuple[float, float]:
    """Closed form of the Dirichlet energy of rho and a radial quadrature of it."""
    def integrand(r):
        g = grad_rho(np.array([r, 0.0]), params)
        return 2.0 * np.pi * r * (g[0] ** 2 + g[1] ** 2)

    # integrate in s = log r, where the integrand is smooth
    val, _ = quad(lambda s: integrand(np.exp(s)) * np.exp(s), np.log(params.epsilon), np.log(params.outer),
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return cutoff_energy_closed_form(params), float(val)


def cutoff_mass_defect(params: CutoffParams) -> float:
    """Integral over the plane of 1 - rho^2 (supported in the disk of radius eps^tau)."""
    inner = np.pi * params.epsilon**2
    val, _ = quad(lambda r: 2.0 * np.pi * r * (1.0 - rho_radial(r, params) ** 2),
                  params.epsilon, params.outer, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(inner + val)


@dataclass(frozen=True)
class TestFunctionBasis:
    vectors: np.ndarray  # (n_vertices, N) complex vertex values of exp(i psi) rho u_j
    u: np.ndarray  # (n_vertices, N) real Laplacian eigenfunctions
    lambdas: np.ndarray
    a: float
    tau: float

    __test__ = False


@dataclass(frozen=True)
class QuadFormMatrix:
    matrix: np.ndarray
    a: float
    tau: float
    N: int


def _boundary_distance(mesh: Mesh) -> float:
    uniq, counts = mesh.edges()
    e = uniq[(counts == 1) & ((mesh.flags[uniq[:, 0]] & BOUNDARY) != 0)]
    p, q = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
    d = q - p
    t = np.clip(-np.sum(p * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
    return float(np.min(np.hypot(*(p + t[:, None] * d).T)))


def build_test_basis(
    mesh: Mesh,
    laplacian_slice: SpectrumSlice,
    laplacian_system: AssembledSystem,
    config: PoleConfig,
    tau: float = 0.5,
) -> TestFunctionBasis:
    params = CutoffParams(2.0 * config.a, tau)
    if params.outer >= _boundary_distance(mesh):
        raise BoundsError("a too large: the cut-off annulus leaves the domain")
    u = np.column_stack([np.real(laplacian_system.to_vertices(p.vector)) for p in laplacian_slice.pairs])
    X = mesh.vertices
    r = rho(X, params)
    phase = np.ones(len(X), dtype=complex)
    on = r > 0
    phase[on] = np.exp(1j * phase_psi(config, X[on]))
    V = (phase * r)[:, None] * u
    return TestFunctionBasis(V, u, laplacian_slice.values.copy(), config.a, tau)


def basis_gram(basis: TestFunctionBasis, system: AssembledSystem) -> np.ndarray:
    V = basis.vectors[system.free]
    return V.conj().T @ (system.M @ V)


def _subdivide(p: np.ndarray, levels: int) -> np.ndarray:
    """Split each triangle (t, 3, 2) into 4**levels similar pieces."""
    for _ in range(levels):
        m01 = 0.5 * (p[:, 0] + p[:, 1])
        m12 = 0.5 * (p[:, 1] + p[:, 2])
        m20 = 0.5 * (p[:, 2] + p[:, 0])
        p = np.concatenate([
            np.stack([p[:, 0], m01, m20], 1),
            np.stack([m01, p[:, 1], m12], 1),
            np.stack([m20, m12, p[:, 2]], 1),
            np.stack([m01, m12, m20], 1),
        ])
    return p


def _interp_p1(mesh: Mesh, values: np.ndarray, tri_ids: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate P1 fields (n_vertices, N) at points x (m, 2) lying in triangles tri_ids (m,)."""
    T = mesh.triangles[tri_ids]
    p = mesh.vertices[T]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    d = x - p[:, 0]
    l1 = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
    l2 = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
    lam = np.column_stack([1.0 - l1 - l2, l1, l2])
    return np.einsum("mk,mkn->mn", lam, values[T])


def assemble_M_matrix(
    mesh: Mesh,
    laplacian_slice: SpectrumSlice,
    laplacian_system: AssembledSystem,
    config: PoleConfig,
    tau: float = 0.5,
    order: int = 8,
    levels: int = 3,
) -> QuadFormMatrix:
    """Entries (l_j + l_k)/2 int rho^2 u_j u_k + int u_j u_k |grad rho|^2 - l_N delta_jk.

    rho and grad rho are evaluated in closed form at quadrature nodes;
    triangles cut by either cut-off circle are subdivided ``levels`` times.
    """
    params = CutoffParams(2.0 * config.a, tau)
    u = np.column_stack([np.real(laplacian_system.to_vertices(p.vector)) for p in laplacian_slice.pairs])
    lam = laplacian_slice.values
    N = len(lam)
    rule = triangle_rule(order)
    P = mesh.vertices[mesh.triangles]
    r = np.hypot(P[..., 0], P[..., 1])
    rmin = r.min(axis=1)
    rmax = r.max(axis=1)
    cut = ((rmin <= params.epsilon) & (rmax >= params.epsilon)) | ((rmin <= params.outer) & (rmax >= params.outer))
    # nearest-point test misses circles passing through an edge interior; widen by the diameter
    diam = np.max(np.hypot(*(P - np.roll(P, 1, axis=1)).transpose(2, 0, 1)), axis=1)
    for c in (params.epsilon, params.outer):
        cut |= (rmin - diam <= c) & (rmax >= c)
    pieces = []
    for mask, lev in ((~cut, 0), (cut, levels)):
        ids = np.flatnonzero(mask)
        if len(ids) == 0:
            continue
        sub = _subdivide(P[ids], lev)
        owner = np.tile(ids, 4**lev)
        pieces.append((sub, owner))
    mass = np.zeros((N, N))
    grad = np.zeros((N, N))
    for sub, owner in pieces:
        area = 0.5 * np.abs((sub[:, 1, 0] - sub[:, 0, 0]) * (sub[:, 2, 1] - sub[:, 0, 1])
                            - (sub[:, 1, 1] - sub[:, 0, 1]) * (sub[:, 2, 0] - sub[:, 0, 0]))
        x = np.einsum("qk,tkd->tqd", rule.nodes, sub).reshape(-1, 2)
        wts = (area[:, None] * rule.weights[None, :]).ravel()
        own = np.repeat(owner, len(rule.weights))
        uq = _interp_p1(mesh, u, own, x)
        g = grad_rho(x, params)
        rq = rho(x, params)
        mass += uq.T @ ((wts * rq**2)[:, None] * uq)
        grad += uq.T @ ((wts * (g[:, 0] ** 2 + g[:, 1] ** 2))[:, None] * uq)
    M = 0.5 * (lam[:, None] + lam[None, :]) * mass + grad - lam[-1] * np.eye(N)
    M = 0.5 * (M + M.T)
    return QuadFormMatrix(M, config.a, tau, N)


def max_eig_quadform(Q) -> float:
    """Maximum of sum m_jk z_j conj(z_k) over the unit sphere of C^N."""
    m = Q.matrix if isinstance(Q, QuadFormMatrix) else np.asarray(Q)
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])


def leading_term(u0_sq: float, a: float, tau: float) -> float:
    """2 pi u_N(0)^2 / ((1 - tau) |log a|)."""
    return 2.0 * np.pi * u0_sq / ((1.0 - tau) * abs(np.log(a)))


def upper_bound(
    mesh: Mesh,
    magnetic_system: AssembledSystem,
    laplacian_slice: SpectrumSlice,
    laplacian_system: AssembledSystem,
    config: PoleConfig,
    tau: float = 0.5,
    basis: TestFunctionBasis | None = None,
) -> float:
    """Largest Ritz value of the assembled magnetic pencil on span{exp(i psi) rho u_j}.

    By the discrete min-max principle this bounds the N-th discrete magnetic eigenvalue.
    """
    if basis is None:
        basis = build_test_basis(mesh, laplacian_slice, laplacian_system, config, tau)
    V = basis.vectors[magnetic_system.free]
    A = V.conj().T @ (magnetic_system.S @ V)
    B = V.conj().T @ (magnetic_system.M @ V)
    A = 0.5 * (A + A.conj().T)
    B = 0.5 * (B + B.conj().T)
    evB = np.linalg.eigvalsh(B)
    if evB[0] <= 1e-10 * evB[-1]:
        raise BoundsError("test functions are numerically dependent (singular Gram matrix)")
    return float(sla.eigh(A, B, eigvals_only=True)[-1])
