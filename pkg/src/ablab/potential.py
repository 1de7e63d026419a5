"""Two-pole Aharonov-Bohm vector potential, its phase, line integrals and gauge."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


class PoleError(ValueError):
    """Evaluation at (or too close to) a pole or the phase cut."""


@dataclass(frozen=True)
class PoleSet:
    """Poles with circulation 1/2 each; ``charges[k] = +1`` adds A_p, ``-1`` subtracts it."""

    points: tuple
    charges: tuple

    @property
    def scale(self) -> float:
        if len(self.points) < 2:
            return 1.0
        p = np.asarray(self.points)
        return float(np.max(np.hypot(*(p[:, None] - p[None, :]).transpose(2, 0, 1)))) / 2.0


@dataclass(frozen=True)
class PoleConfig(PoleSet):
    """Poles a- = (-a, 0) with charge -1 and a+ = (a, 0) with charge +1."""

    a: float = 0.0

    def __init__(self, a: float):
        if not a > 0:
            raise PoleError("pole half-distance a must be positive")
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "points", ((-float(a), 0.0), (float(a), 0.0)))
        object.__setattr__(self, "charges", (-1, 1))

    @property
    def a_minus(self) -> tuple:
        return self.points[0]

    @property
    def a_plus(self) -> tuple:
        return self.points[1]


def single_pole(center=(0.0, 0.0)) -> PoleSet:
    return PoleSet(((float(center[0]), float(center[1])),), (1,))


def no_poles() -> PoleSet:
    return PoleSet((), ())


def eval_single_A(pole, x) -> np.ndarray:
    """1/2 (-(x2 - p2), x1 - p1) / |x - p|^2; ``x`` may be a point or an (n, 2) array."""
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(pole, dtype=float)
    r2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if np.any(r2 == 0.0):
        raise PoleError("vector potential evaluated at its pole")
    return 0.5 * np.stack([-d[..., 1], d[..., 0]], axis=-1) / r2[..., None]


def eval_A(config: PoleSet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=float)
    for p, q in zip(config.points, config.charges):
        out = out + q * eval_single_A(p, x)
    return out


def phase_psi(config: PoleConfig, x, tol: float = 1e-12) -> np.ndarray:
    """Half-difference of principal angles, a potential for A off the segment s_a."""
    x = np.asarray(x, dtype=float)
    on_cut = (np.abs(x[..., 1]) <= tol) & (np.abs(x[..., 0]) <= config.a + tol)
    if np.any(on_cut):
        raise PoleError("phase evaluated on the segment joining the poles")
    out = np.zeros(x.shape[:-1])
    for p, q in zip(config.points, config.charges):
        out = out + 0.5 * q * np.arctan2(x[..., 1] - p[1], x[..., 0] - p[0])
    return out


def gauge_double(config: PoleSet, x) -> np.ndarray:
    """exp(2 i psi): product of unit directions, single valued away from the poles."""
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1], dtype=complex)
    for p, q in zip(config.points, config.charges):
        z = (x[..., 0] - p[0]) + 1j * (x[..., 1] - p[1])
        if np.any(z == 0):
            raise PoleError("gauge evaluated at a pole")
        u = z / np.abs(z)
        out = out * (u if q > 0 else np.conj(u))
    return out


def edge_phase(config: PoleSet, p, q) -> np.ndarray:
    """Exact line integral of A along straight segments p -> q.

    Each pole contributes half the signed angle the segment subtends at it.
    A segment ending at a pole is radial for that pole and gets no contribution.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.zeros(np.broadcast_shapes(p.shape, q.shape)[:-1])
    for c, s in zip(config.points, config.charges):
        u = (p[..., 0] - c[0]) + 1j * (p[..., 1] - c[1])
        v = (q[..., 0] - c[0]) + 1j * (q[..., 1] - c[1])
        prod = v * np.conj(u)
        ang = np.where(prod == 0, 0.0, np.angle(prod))
        out = out + 0.5 * s * ang
    return out


def _segment_integral(config: PoleSet, p0, p1, depth=0) -> float:
    d = p1 - p0
    length = float(np.hypot(*d))
    if not length**2 > 0.0:
        return 0.0
    # distance from the segment to the nearest pole
    dist = np.inf
    for c in config.points:
        c = np.asarray(c)
        t = np.clip(np.dot(c - p0, d) / length**2, 0.0, 1.0)
        dist = min(dist, float(np.hypot(*(p0 + t * d - c))))
    if dist < 1e-9:
        raise PoleError("path touches a pole")
    if length > dist / 4.0 and depth < 60:
        m = 0.5 * (p0 + p1)
        return _segment_integral(config, p0, m, depth + 1) + _segment_integral(config, m, p1, depth + 1)
    x = p0 + 0.5 * (_GAUSS_X[:, None] + 1.0) * d
    return float(0.5 * np.sum(_GAUSS_W * (eval_A(config, x) @ d)))


def line_integral(config: PoleSet, path) -> float:
    """Integral of A along an open polyline by per-segment 8-point Gauss rules.

    Segments are bisected until each piece is shorter than a quarter of its
    distance to the nearest pole, which resolves the scale-a structure.
    """
    path = np.asarray(path, dtype=float)
    return sum(_segment_integral(config, path[k], path[k + 1]) for k in range(len(path) - 1))


def winding_integral(config: PoleSet, path) -> float:
    """(1/2pi) times the circulation of A around a closed polyline."""
    path = np.asarray(path, dtype=float)
    if not np.array_equal(path[0], path[-1]):
        path = np.vstack([path, path[:1]])
    return line_integral(config, path) / (2.0 * np.pi)


def winding_number(point, path) -> int:
    """Winding number of a closed polyline around ``point`` by summed exact angles."""
    path = np.asarray(path, dtype=float)
    if not np.array_equal(path[0], path[-1]):
        path = np.vstack([path, path[:1]])
    z = (path[:, 0] - point[0]) + 1j * (path[:, 1] - point[1])
    return int(round(np.sum(np.angle(z[1:] * np.conj(z[:-1]))) / (2.0 * np.pi)))
