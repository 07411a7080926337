"""Free-space wave with tent-shaped initial velocity, evaluated by Kirchhoff's formula.

The wave ``v`` solves ``v_ss = Lap v`` in R^3 with ``v(., 0) = 0`` and
``v_s(., 0) = Psi_B``.  Because ``Psi_B`` is radial about ``p`` the spherical
mean reduces to a one-dimensional integral in ``rho = |y - p|``::

    v(d, s) = 1/(2d) * int_{|d-s|}^{min(d+s, eta)} (eta - rho) rho drho,   d = |x - p|

which is a piecewise cubic in ``(d, s)``.  ``v`` vanishes unless
``s - eta < d < s + eta`` (strong Huygens principle).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import ProbeBall

# below this distance from p the d = 0 branch is used
_D_TINY = 1e-9


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    x, w = leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _G(rho, eta):
    # antiderivative of (eta - rho) * rho
    return rho * rho * (0.5 * eta - rho / 3.0)


def _Gp(rho, eta):
    return (eta - rho) * rho


def psi_B(x, probe: ProbeBall) -> float:
    """Initial velocity (eta - |x-p|) on B, zero outside."""
    d = float(np.linalg.norm(np.asarray(x, float) - probe.center))
    return probe.eta - d if d < probe.eta else 0.0


def psi_radial(rho, eta: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.where(rho < eta, eta - rho, 0.0)


def kirchhoff_radial(d, s, eta: float):
    """Vectorized ``(v, dv/ds, dv/dd)`` at distance ``d`` from p and wave time ``s``.

    Derivatives at piece boundaries are right limits; ``v`` is C^1 so the
    one-sided limits coincide.
    """
    d, s = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(s, dtype=float))
    lo = np.abs(d - s)
    hi = np.minimum(d + s, eta)
    active = lo < hi
    center = d < _D_TINY
    dd = np.where(center, 1.0, d)

    inner = (d + s < eta).astype(float)
    g_hi = _Gp(hi, eta) * inner
    v = np.where(active, (_G(hi, eta) - _G(lo, eta)) / (2.0 * dd), 0.0)
    v_s = np.where(active, (g_hi - _Gp(lo, eta) * np.sign(s - d)) / (2.0 * dd), 0.0)
    v_d = np.where(active, -v / dd + (g_hi - _Gp(lo, eta) * np.sign(d - s)) / (2.0 * dd), 0.0)

    if np.any(center):
        below = s < eta
        v = np.where(center, np.where(below, s * (eta - s), 0.0), v)
        v_s = np.where(center, np.where(below, eta - 2.0 * s, 0.0), v_s)
        v_d = np.where(center, 0.0, v_d)
    return v, v_s, v_d


def kirchhoff_eval(x, s: float, probe: ProbeBall) -> tuple[float, float]:
    """Closed-form ``(v, dv/ds)`` at point ``x`` and wave time ``s >= 0``."""
    if s < 0:
        raise ValueError("wave time s must be nonnegative")
    d = np.linalg.norm(np.asarray(x, float) - probe.center)
    v, v_s, _ = kirchhoff_radial(d, s, probe.eta)
    return float(v), float(v_s)


def kirchhoff_oracle(x, s: float, probe: ProbeBall, n_quad: int = 64) -> float:
    """Spherical mean of Psi_B over the sphere of radius ``s`` about ``x`` by quadrature.

    Latitude-longitude rule with the pole pointing from ``x`` towards ``p``.  In
    that frame the integrand does not depend on longitude, so the longitude sum
    is exact and only the polar angle is integrated: Gauss-Legendre panels,
    ``n_quad`` nodes each, split where the sphere crosses the edge of B and
    graded geometrically towards the pole when p sits close to the sphere.
    Independent of the antiderivative used by :func:`kirchhoff_eval`.
    """
    if n_quad < 8:
        raise ValueError("n_quad must be >= 8")
    if s == 0:
        return 0.0
    eta = probe.eta
    d = float(np.linalg.norm(np.asarray(x, float) - probe.center))

    def rho_of(theta):
        # |y - p| for y on the sphere at polar angle theta from the pole direction
        return np.sqrt((s - d) ** 2 + 4.0 * s * d * np.sin(0.5 * theta) ** 2)

    breaks = {0.0, np.pi}
    if d > 0:
        c0 = (s * s + d * d - eta * eta) / (2.0 * s * d)
        if -1.0 < c0 < 1.0:
            breaks.add(float(np.arccos(c0)))
        gap = abs(s - d) / np.sqrt(s * d)
        if 0 < gap < 0.5:
            th = gap
            while th < np.pi:
                breaks.add(th)
                th *= 2.0
    edges = np.array(sorted(breaks))

    xg, wg = gauss_legendre(n_quad)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * xg + 0.5 * (b + a)
        vals = psi_radial(rho_of(th), eta) * np.sin(th)
        total += 0.5 * (b - a) * np.dot(wg, vals)
    # (1/(4 pi s)) * s^2 * 2 pi * int_0^pi Psi sin(theta) dtheta
    return 0.5 * s * total


def scaled_wave(x, t: float, tau: float, probe: ProbeBall) -> tuple[float, float]:
    """``v_tau(x, t) = v(x, sqrt(tau) t)/sqrt(tau)`` and its time derivative."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    k = np.sqrt(tau)
    v, v_s = kirchhoff_eval(x, k * t, probe)
    return v / k, v_s


def flux_trace(x_on_boundary, normal, t, T: float, tau: float, probe: ProbeBall, method: str = "analytic"):
    """Time-reversed boundary flux ``(1/sqrt(tau)) d/dnu v(x, sqrt(tau)(T - t))``.

    ``t`` may be an array.  ``method="analytic"`` uses the exact gradient of the
    radial piecewise cubic, which is valid at any point because ``v`` is radial
    about ``p``; ``method="fd"`` uses central differences along the normal with
    step ``1e-5 * eta`` and one Richardson level.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > T):
        raise ValueError("t must lie in [0, T]")
    k = np.sqrt(tau)
    x = np.asarray(x_on_boundary, dtype=float)
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    s = k * (T - t)

    if method == "analytic":
        rel = x - probe.center
        d = np.linalg.norm(rel)
        if d < _D_TINY:
            return np.zeros_like(s)
        _, _, v_d = kirchhoff_radial(d, s, probe.eta)
        return (np.dot(n, rel) / d) * v_d / k
    if method == "fd":
        h = 1e-5 * probe.eta

        def central(step):
            dp = np.linalg.norm(x + step * n - probe.center)
            dm = np.linalg.norm(x - step * n - probe.center)
            vp = kirchhoff_radial(dp, s, probe.eta)[0]
            vm = kirchhoff_radial(dm, s, probe.eta)[0]
            return (vp - vm) / (2.0 * step)

        return (4.0 * central(0.5 * h) - central(h)) / 3.0 / k
    raise ValueError(f"unknown method {method!r}")


def radial_flux(t, T: float, tau: float, R: float, eta: float) -> np.ndarray:
    """Flux on the sphere |x - p| = R with outward normal, for the concentric setting."""
    k = np.sqrt(tau)
    _, _, v_d = kirchhoff_radial(R, k * (T - np.asarray(t, dtype=float)), eta)
    return v_d / k


def flux_support(R: float, T: float, tau: float, eta: float) -> tuple[float, float]:
    """Interval of t in which the flux at distance R from p can be nonzero."""
    k = np.sqrt(tau)
    return T - (R + eta) / k, T - max(R - eta, 0.0) / k
