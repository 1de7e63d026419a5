"""Independent closed-form references for the unit disk.

Bessel functions are summed from their power series and zeros are isolated by
bisection, so nothing here shares code with the finite-element path.
"""
from __future__ import annotations

import math


def bessel_j(nu: float, x: float, terms: int = 80) -> float:
    """J_nu(x) from the ascending series; cancellation limits it to about 1e-11 absolute for x <= 15."""
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    total = 0.0
    term = half**nu / math.gamma(nu + 1.0)
    for k in range(terms):
        total += term
        term *= -(half * half) / ((k + 1) * (k + 1 + nu))
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def bessel_zero(nu: float, k: int = 1, step: float = 0.05) -> float:
    """k-th positive zero of J_nu by sign scan and bisection."""
    found = 0
    lo = step
    f_lo = bessel_j(nu, lo)
    while True:
        hi = lo + step
        f_hi = bessel_j(nu, hi)
        if f_lo == 0.0 or f_lo * f_hi < 0:
            found += 1
            if found == k:
                break
        lo, f_lo = hi, f_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(nu, mid)
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo < 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


def j0_zero(k: int = 1) -> float:
    return bessel_zero(0.0, k)


def disk_laplacian_lambda1(radius: float = 1.0) -> float:
    """Ground Dirichlet eigenvalue of the disk, j_{0,1}^2 / R^2."""
    return j0_zero(1) ** 2 / radius**2


def disk_ground_state_at_center(radius: float = 1.0) -> float:
    """u_1(0) for the L2-normalised positive ground state, 1/(sqrt(pi) R J_1(j_{0,1}))."""
    j = j0_zero(1)
    return 1.0 / (math.sqrt(math.pi) * radius * abs(bessel_j(1.0, j)))


def predicted_slope(radius: float = 1.0) -> float:
    """2 pi u_1(0)^2: leading coefficient of lambda^a - lambda against 1/|log a|."""
    return 2.0 * math.pi * disk_ground_state_at_center(radius) ** 2


def single_pole_disk_lambda1(radius: float = 1.0) -> float:
    """Centred half-flux pole: lowest mode is J_{1/2}(kr) ~ sin(kr)/sqrt(r), zero at pi."""
    return (bessel_zero(0.5, 1) / radius) ** 2


def annulus_lambda1(inner: float, radius: float = 1.0) -> float:
    """Ground Dirichlet eigenvalue of a concentric annulus (Bessel Y via scipy).

    Used only as a model for the capacity-equivalent hole, never as a test oracle.
    """
    from scipy.optimize import brentq
    from scipy.special import j0, y0

    f = lambda k: j0(k * radius) * y0(k * inner) - y0(k * radius) * j0(k * inner)  # noqa: E731
    lo = j0_zero(1) / radius
    while f(lo) * f(lo + 0.01 / radius) > 0:
        lo += 0.01 / radius
    k = brentq(f, lo, lo + 0.01 / radius, xtol=1e-14)
    return k * k


ORACLES = {
    "j0_zero1": lambda: j0_zero(1),
    "j0_zero2": lambda: j0_zero(2),
    "j1_at_j0_zero1": lambda: bessel_j(1.0, j0_zero(1)),
    "disk_lambda1": disk_laplacian_lambda1,
    "disk_u1_origin": disk_ground_state_at_center,
    "predicted_slope": predicted_slope,
    "half_zero1": lambda: bessel_zero(0.5, 1),
    "single_pole_lambda1": single_pole_disk_lambda1,
}
