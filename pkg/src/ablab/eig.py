"""Lowest eigenpairs of the Hermitian pencil (S, M) and magnetic-real alignment."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import AssembledSystem
from .geometry import Mesh

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual=np.inf):
        super().__init__(f"{msg} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class NearDegenerateError(ValueError):
    """Eigenvalue too close to a neighbour for a well-defined magnetic-real representative."""


@dataclass(frozen=True)
class EigenPair:
    lam: float
    vector: np.ndarray
    residual: float


@dataclass(frozen=True)
class SpectrumSlice:
    pairs: tuple
    gap_to_next: float

    @property
    def values(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def relative_gap(self, k: int) -> float:
        """Relative distance of the k-th value (0-based) to its neighbours in the slice."""
        lam = self.values
        gaps = []
        if k > 0:
            gaps.append(lam[k] - lam[k - 1])
        gaps.append(self.gap_to_next if k == len(lam) - 1 else lam[k + 1] - lam[k])
        return float(min(gaps) / abs(lam[k]))


def residual(S, M, lam, v) -> float:
    """||S v - lam M v|| / (|lam| ||M v||), a dimensionless backward residual."""
    Mv = M @ v
    r = S @ v - lam * Mv
    return float(np.linalg.norm(r) / (max(abs(lam), 1e-300) * np.linalg.norm(Mv)))


def _m_orthonormalize(V, M):
    G = V.conj().T @ (M @ V)
    G = 0.5 * (G + G.conj().T)
    L = np.linalg.cholesky(G)
    return sla.solve_triangular(L, V.conj().T, lower=True).conj().T


def _dense(S, M, k):
    Sd = S.toarray() if sp.issparse(S) else np.asarray(S)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    w, V = sla.eigh(Sd, Md, subset_by_index=[0, k - 1])
    return w, V


def solve_pencil(S, M, count: int, tol: float = 1e-10, method: str = "auto") -> SpectrumSlice:
    """The ``count`` smallest eigenpairs; one extra value is computed for the gap.

    Sparse path: ARPACK shift-invert about sigma = -1 (S is positive
    semidefinite, so S + M is definite and the LU never meets a singular shift).
    """
    n = S.shape[0]
    if count < 1 or count > n:
        raise ValueError("count must lie in [1, dimension]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    want = min(count + 1, n)
    if method == "auto":
        method = "dense" if (n <= 64 or want >= n - 1) else "sparse"
    if method == "sparse":
        if want >= n - 1:
            raise ValueError("sparse path needs count + 1 < dimension")
        Sc, Mc = sp.csc_matrix(S), sp.csc_matrix(M)
        dtype = np.result_type(Sc.dtype, Mc.dtype)
        lu = spla.splu((Sc + Mc).astype(dtype).tocsc())
        OPinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=dtype)
        best = np.inf
        v0 = np.ones(n, dtype=dtype)
        for ncv in (max(2 * want + 1, 20), max(4 * want + 1, 40)):
            try:
                w, V = spla.eigsh(
                    Sc, k=want, M=Mc, sigma=-1.0, which="LM", OPinv=OPinv, tol=tol * 1e-3,
                    ncv=min(ncv, n), v0=v0, maxiter=20 * n,
                )
            except spla.ArpackNoConvergence as exc:  # pragma: no cover - rare
                best = min(best, np.inf)
                log.warning("ARPACK did not converge with ncv=%d: %s", ncv, exc)
                continue
            order = np.argsort(w)
            w, V = w[order].real, V[:, order]
            V = _m_orthonormalize(V, Mc)
            res = [residual(Sc, Mc, lam, V[:, j]) for j, lam in enumerate(w)]
            best = min(best, max(res[:count]))
            if max(res[:count]) <= tol:
                break
        else:
            raise ConvergenceError("shift-invert Lanczos did not reach the residual bound", best)
    elif method == "dense":
        w, V = _dense(S, M, want)
        res = [residual(S, M, lam, V[:, j]) for j, lam in enumerate(w)]
    else:
        raise ValueError(f"unknown method {method!r}")
    pairs = tuple(EigenPair(float(w[j]), V[:, j], float(res[j])) for j in range(count))
    gap = float(w[count] - w[count - 1]) if want > count else np.inf
    if max(p.residual for p in pairs) > tol:
        raise ConvergenceError("eigenpairs miss the residual bound", max(p.residual for p in pairs))
    return SpectrumSlice(pairs, gap)


def solve_lowest(system: AssembledSystem, count: int, tol: float = 1e-10, method: str = "auto") -> SpectrumSlice:
    if count >= system.dim:
        raise ValueError("count must be smaller than the number of free dofs")
    return solve_pencil(system.S, system.M, count, tol=tol, method=method)


def conjugation_residual(w, gauge, M) -> float:
    """||psi conj(w) - w||_M / ||w||_M for the antilinear conjugation u -> psi conj(u)."""
    d = gauge * np.conj(w) - w
    return float(np.sqrt(np.vdot(d, M @ d).real / np.vdot(w, M @ w).real))


def make_magnetic_real(
    pair: EigenPair,
    gauge,
    mass,
    rel_gap: float = np.inf,
    min_rel_gap: float = 1e-6,
) -> tuple[EigenPair, float]:
    """Rotate ``pair.vector`` by a unit phase so it is fixed by u -> gauge * conj(u).

    The phase comes from the mass-weighted projection c^2 = <gauge conj(v), v>_M.
    The sign is chosen so the largest entry, read in the local gauge
    sqrt(gauge), has positive real part.  Returns the aligned pair and the
    conjugation residual.
    """
    if rel_gap < min_rel_gap:
        raise NearDegenerateError(
            f"relative spectral gap {rel_gap:.2e} below {min_rel_gap:.0e}; magnetic-real alignment ill-conditioned"
        )
    v = np.asarray(pair.vector, dtype=complex)
    gauge = np.asarray(gauge, dtype=complex)
    z = np.vdot(v, mass @ (gauge * np.conj(v)))
    if abs(z) == 0:
        raise NearDegenerateError("conjugation projection vanished")
    c = np.sqrt(z / abs(z))
    w = c * v
    w = w / np.sqrt(np.vdot(w, mass @ w).real)
    m = int(np.argmax(np.abs(w)))
    if (w[m] * np.conj(np.sqrt(gauge[m]))).real < 0:
        w = -w
    res = conjugation_residual(w, gauge, mass)
    return EigenPair(pair.lam, w, pair.residual), res


def orient_at_origin(pair: EigenPair, mesh: Mesh, system: AssembledSystem) -> EigenPair:
    """Real representative with a nonnegative value at the origin."""
    v = np.asarray(pair.vector)
    if np.iscomplexobj(v):
        m = int(np.argmax(np.abs(v)))
        v = v * (abs(v[m]) / v[m])
        v = v.real
    dof = _origin_dof(mesh, system)
    if v[dof] < 0:
        v = -v
    return EigenPair(pair.lam, v, pair.residual)


def _origin_dof(mesh: Mesh, system: AssembledSystem) -> int:
    if mesh.origin is None:
        raise ValueError("mesh has no marked origin vertex")
    dof = int(system.dof_map[mesh.origin])
    if dof < 0:
        raise ValueError("origin vertex is eliminated (on the boundary or a slit)")
    return dof


def value_at_origin(pair: EigenPair, mesh: Mesh, system: AssembledSystem) -> float:
    return float(np.real(pair.vector[_origin_dof(mesh, system)]))
