"""Closed forms tied to the modified Helmholtz operator ``Lap - tau``.

Everything here is a pure function.  Symbols follow the usual convention of
the underlying identity: inside ``H_sum`` the parameters ``tau_hat`` and
``T_hat`` are the heat-problem values ``sqrt(tau)`` and ``sqrt(tau) * T``.

Large arguments go through the ``exp(tau_hat * T_hat)``-scaled variants; the
four-term polynomial assembly of ``H_plus + H_minus`` loses about
``exp(tau_hat * eta)`` in relative accuracy and is refused beyond
``tau_hat * eta > 30``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericRangeError
from .geometry import ProbeBall
from .wave import gauss_legendre, kirchhoff_radial, psi_radial

POLY_CANCELLATION_LIMIT = 30.0
RAW_EXPONENT_LIMIT = 500.0
_SERIES_CROSSOVER = 1e-2


def sinh_kernel_r(r, tau: float):
    """``sinh(sqrt(tau) r)/r`` with its value ``sqrt(tau)`` at r = 0."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    k = np.sqrt(tau)
    r = np.asarray(r, dtype=float)
    kr = k * r
    small = kr < 1e-4
    safe = np.where(small, 1.0, r)
    return np.where(small, k * (1.0 + kr * kr / 6.0), np.sinh(kr) / safe)


def sinh_kernel(x, p, tau: float) -> float:
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(p, float))
    return float(sinh_kernel_r(r, tau))


def f_tau_poly(xi, tau: float, T: float, eta: float):
    """Cubic f_tau(xi) with coefficients depending on (tau, T, eta)."""
    c3 = tau / 6.0
    c2 = 1.0 - 0.25 * tau * (eta + 2 * T)
    c1 = 0.5 * tau * T * (eta + T) - (eta + 2 * T) + 2.0 / tau
    c0 = tau * (eta - 2 * T) * (eta + T) ** 2 / 12.0 + T * (eta + T) - (eta + 2 * T) / tau + 2.0 / tau**2
    return ((c3 * xi + c2) * xi + c1) * xi + c0


def g_tau_poly(xi, tau: float, T: float, eta: float):
    """Companion cubic g_tau(xi)."""
    c3 = -tau / 6.0
    c2 = -(1.0 + 0.25 * tau * (eta - 2 * T))
    c1 = 0.5 * tau * T * (eta - T) - (eta - 2 * T) - 2.0 / tau
    c0 = tau * (eta + 2 * T) * (eta - T) ** 2 / 12.0 + T * (eta - T) - (eta - 2 * T) / tau - 2.0 / tau**2
    return ((c3 * xi + c2) * xi + c1) * xi + c0


@dataclass(frozen=True)
class HCoefficients:
    tau_hat: float
    T_hat: float
    eta: float

    def __post_init__(self):
        if not (self.tau_hat > 0 and self.T_hat > 0 and self.eta > 0):
            raise ValueError(f"H coefficients must be positive: {self}")

    @classmethod
    def from_heat(cls, tau: float, T: float, eta: float) -> "HCoefficients":
        k = float(np.sqrt(tau))
        return cls(k, k * T, eta)


def H_plus(c: HCoefficients) -> float:
    t, T, e = c.tau_hat, c.T_hat, c.eta
    return f_tau_poly(T, t, T, e) * np.exp(-t * T) - f_tau_poly(T + e, t, T, e) * np.exp(-t * (T + e))


def H_minus(c: HCoefficients) -> float:
    t, T, e = c.tau_hat, c.T_hat, c.eta
    return g_tau_poly(T - e, t, T, e) * np.exp(-t * (T - e)) - g_tau_poly(T, t, T, e) * np.exp(-t * T)


def H_sum_poly(c: HCoefficients) -> float:
    """H_+ + H_- assembled from the four polynomial-times-exponential terms."""
    if c.tau_hat * c.eta > POLY_CANCELLATION_LIMIT:
        raise NumericRangeError(
            f"polynomial assembly refused for tau_hat*eta = {c.tau_hat * c.eta:.3g} > {POLY_CANCELLATION_LIMIT}"
        )
    return H_plus(c) + H_minus(c)


def _phi(z: float) -> float:
    # 4 - (z + 2) e^{-z} + (z - 2) e^{z}; series below z = 1 where the terms cancel to O(z^4)
    if z < 1.0:
        total, term = 0.0, 0.5 * z * z
        for k in range(2, 14):
            term *= z * z / ((2 * k - 1) * (2 * k))
            total += (4 * k - 4) * term
        return total
    return 4.0 - (z + 2.0) * np.exp(-z) + (z - 2.0) * np.exp(z)


def H_sum_scaled(tau_hat: float, eta: float) -> float:
    """``exp(tau_hat T_hat) (H_+ + H_-)``; independent of T_hat."""
    return _phi(tau_hat * eta) / tau_hat**2


def H_sum(c: HCoefficients) -> float:
    """H_+ + H_- from the collapsed three-exponential closed form."""
    if c.tau_hat * c.T_hat > RAW_EXPONENT_LIMIT + 200:
        raise NumericRangeError("raw H_sum underflows; use H_sum_scaled")
    return H_sum_scaled(c.tau_hat, c.eta) * np.exp(-c.tau_hat * c.T_hat)


def _g_series(z, eta):
    w2 = (eta * z) ** 2
    # sum_k (-1)^(k+1) 2k/(2k+2)! * (eta z)^(2k-2) * eta^3, k = 1..5
    coeffs = (1 / 12, -1 / 180, 1 / 6720, -1 / 453600, 1 / 47900160)
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * w2 + c
    return eta**3 * acc


def g_even(z, eta: float):
    """``(1/z^3) ((2/(eta z))(1 - cos(eta z)) - sin(eta z))``, even and entire in z."""
    z = np.asarray(z, dtype=complex)
    w = eta * z
    small = np.abs(w) < _SERIES_CROSSOVER
    zs = np.where(small, 1.0, z)
    ws = eta * zs
    direct = ((2.0 / ws) * 2.0 * np.sin(0.5 * ws) ** 2 - np.sin(ws)) / zs**3
    out = np.where(small, _g_series(z, eta), direct)
    return out if out.ndim else complex(out)


def g_imag_axis(tau: float, eta: float) -> float:
    """Closed form of g(i tau; eta), real-valued."""
    return (
        2.0 / (eta * tau**4)
        + (1.0 / (2 * tau**3) - 1.0 / (eta * tau**4)) * np.exp(tau * eta)
        - (1.0 / (2 * tau**3) + 1.0 / (eta * tau**4)) * np.exp(-tau * eta)
    )


def psi_hat(xi, probe: ProbeBall) -> complex:
    """Fourier transform of Psi_B at frequency ``xi`` (convention exp(-i x.xi))."""
    xi = np.asarray(xi, dtype=float)
    return complex(4.0 * np.pi * probe.eta * np.exp(-1j * np.dot(xi, probe.center)) * g_even(np.linalg.norm(xi), probe.eta))


def psi_hat_radial_quadrature(xi_norm: float, eta: float, n: int = 200) -> float:
    """Oracle: ``4 pi int_0^eta rho^2 (eta - rho) sinc(|xi| rho) drho`` by Gauss-Legendre."""
    x, w = gauss_legendre(n)
    rho = 0.5 * eta * (x + 1.0)
    sinc = np.sinc(xi_norm * rho / np.pi)
    return float(4.0 * np.pi * 0.5 * eta * np.dot(w, rho**2 * (eta - rho) * sinc))


def _check_region(d: float, tau: float, T: float, eta: float):
    k = np.sqrt(tau)
    if not d < k * T - eta:
        raise DomainError(
            f"closed form holds only for |x-p| < sqrt(tau) T - eta = {k * T - eta:.6g}; got |x-p| = {d:.6g}"
        )


def w1_star_scaled_r(r, tau: float, T: float, eta: float):
    """``exp(tau T) w1*`` at distances ``r`` from p (array friendly)."""
    r = np.asarray(r, dtype=float)
    _check_region(float(np.max(r)), tau, T, eta)
    k = np.sqrt(tau)
    return H_sum_scaled(k, eta) * sinh_kernel_r(r, tau) / tau


def w1_star_scaled_dr(r, tau: float, T: float, eta: float):
    """Radial derivative of ``exp(tau T) w1*``."""
    r = np.asarray(r, dtype=float)
    _check_region(float(np.max(r)), tau, T, eta)
    k = np.sqrt(tau)
    kr = k * r
    small = kr < 1e-3
    rs = np.where(small, 1.0, r)
    dker = np.where(small, k**3 * r / 3.0, (kr * np.cosh(kr) - np.sinh(kr)) / rs**2)
    return H_sum_scaled(k, eta) * dker / tau


def w1_star(x, tau: float, T: float, probe: ProbeBall, scaled: bool = False) -> float:
    """Closed form of w1* on the ball |x - p| < sqrt(tau) T - eta."""
    d = float(np.linalg.norm(np.asarray(x, float) - probe.center))
    val = float(w1_star_scaled_r(d, tau, T, probe.eta))
    if scaled:
        return val
    if tau * T > RAW_EXPONENT_LIMIT:
        raise NumericRangeError(f"raw w1* needs tau*T <= {RAW_EXPONENT_LIMIT}; use scaled=True")
    return val * np.exp(-tau * T)


def yukawa_potential_radial(r, tau: float, eta: float, n: int = 48):
    """``w_R*`` solving ``(Lap - tau) w + Psi_B = 0`` in R^3, and its radial derivative.

    Radial Green's-function form::

        w(r) = 1/(k r) [ e^{-kr} int_0^r rho Psi sinh(k rho) + sinh(kr) int_r^eta rho Psi e^{-k rho} ]
    """
    k = np.sqrt(tau)
    x, w = gauss_legendre(n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    vals = np.empty_like(r)
    ders = np.empty_like(r)
    for i, ri in enumerate(r):
        lo_top = min(ri, eta)
        rho = 0.5 * lo_top * (x + 1.0)
        A = 0.5 * lo_top * np.dot(w, rho * psi_radial(rho, eta) * np.sinh(k * rho))
        if ri < eta:
            rho2 = ri + 0.5 * (eta - ri) * (x + 1.0)
            B = 0.5 * (eta - ri) * np.dot(w, rho2 * psi_radial(rho2, eta) * np.exp(-k * rho2))
        else:
            B = 0.0
        if ri < 1e-10:
            # limit r -> 0: sinh(kr)/(kr) -> 1, first term vanishes
            vals[i] = B
            ders[i] = 0.0
            continue
        vals[i] = (np.exp(-k * ri) * A + np.sinh(k * ri) * B) / (k * ri)
        ders[i] = -vals[i] / ri + (-k * np.exp(-k * ri) * A + k * np.cosh(k * ri) * B) / (k * ri)
    return vals, ders


@dataclass
class VolumeIdentityQuadrature:
    value: float
    tau_part: float
    dt_part: float
    rel_change: float
    converged: bool
    n_rho: int
    n_mu: int


def _volume_identity_once(d, tau_hat, T_hat, eta, n_rho, n_mu):
    xr, wr = gauss_legendre(n_rho)
    xm, wm = gauss_legendre(n_mu)
    tau_sum = 0.0
    dt_sum = 0.0
    # v(., T_hat) is supported on T_hat - eta <= rho <= T_hat + eta with a kink at rho = T_hat
    for a, b in ((T_hat - eta, T_hat), (T_hat, T_hat + eta)):
        rho = 0.5 * (b - a) * xr + 0.5 * (b + a)
        wrho = 0.5 * (b - a) * wr
        v, v_s, _ = kirchhoff_radial(rho, T_hat, eta)
        if d > 0:
            ell = np.sqrt(d * d + rho[:, None] ** 2 - 2.0 * d * rho[:, None] * xm[None, :])
            ang = (np.exp(-tau_hat * ell) / ell) @ wm
        else:
            ang = 2.0 * np.exp(-tau_hat * rho) / rho
        base = wrho * rho**2 * ang
        tau_sum += np.dot(base, tau_hat * v)
        dt_sum += np.dot(base, v_s)
    pref = tau_hat**2 / (4.0 * np.pi) * 2.0 * np.pi
    return pref * tau_sum, pref * dt_sum


def volume_identity_lhs(x, tau_hat: float, T_hat: float, probe: ProbeBall, n_rho: int = 32, n_mu: int = 32,
               tol: float = 1e-6, max_levels: int = 6) -> VolumeIdentityQuadrature:
    """Volume quadrature of ``(tau^2/4pi) int e^{-tau|x-y|}/|x-y| (tau v - v_t)(y, T) dy``.

    Tensor Gauss-Legendre in (rho, cos theta) about p over the support shell of
    ``v(., T_hat)``, doubled until successive values agree to ``tol``.
    """
    eta = probe.eta
    d = float(np.linalg.norm(np.asarray(x, float) - probe.center))
    if not T_hat > eta:
        raise DomainError("need T_hat > eta")
    if not d < T_hat - eta:
        raise DomainError(f"need |x-p| < T_hat - eta, got {d}")
    prev = _volume_identity_once(d, tau_hat, T_hat, eta, n_rho, n_mu)
    rel = np.inf
    for _ in range(max_levels):
        n_rho, n_mu = 2 * n_rho, 2 * n_mu
        cur = _volume_identity_once(d, tau_hat, T_hat, eta, n_rho, n_mu)
        val, pval = cur[0] - cur[1], prev[0] - prev[1]
        rel = abs(val - pval) / max(abs(val), 1e-300)
        prev = cur
        if rel <= tol:
            break
    return VolumeIdentityQuadrature(prev[0] - prev[1], prev[0], prev[1], rel, rel <= tol, n_rho, n_mu)


def volume_identity_rhs(x, tau_hat: float, T_hat: float, eta: float, p) -> float:
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(p, float)))
    return H_sum(HCoefficients(tau_hat, T_hat, eta)) * float(sinh_kernel_r(d, tau_hat**2))
