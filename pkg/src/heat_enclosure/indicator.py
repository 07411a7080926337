"""Laplace-in-time transforms, the boundary indicator and its energy decomposition.

All quantities use the scaled convention: transforms carry a factor
``e^{tau T}`` and the indicator ``e^{2 tau T}``.  Writing ``w`` for the
transform of the measured temperature and ``w*`` for that of the time-reversed
wave, the indicator is::

    I_scaled = int_{outer sphere} (w - w*) d_nu w* dS

On the outer sphere ``w - w*`` is evaluated as ``w_D + z`` where ``w_D`` is the
transform of the cavity perturbation from a split solve and ``z = w_ref - w*``
solves ``(Lap - tau) z = u_ref(., T) + Psi_B / tau`` in the cavity-free body
with zero flux on the outer sphere.  Both pieces are computed without
subtracting nearly equal numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from .errors import DomainError, MissingFieldError, NumericRangeError
from .geometry import BodySpec, Discretization, ProbeBall
from .heat import HeatRun, solve_ball
from .laplace import MAX_EXPONENT, laplace_raw, laplace_scaled, trapezoid_weights
from .wave import gauss_legendre, kirchhoff_radial, psi_radial

__all__ = [
    "IndicatorSample",
    "Decomposition",
    "laplace_scaled",
    "laplace_raw",
    "w_star_radial",
    "w_star_scaled_eval",
    "flux_laplace",
    "reference_correction",
    "indicator",
    "indicator_no_cavity",
    "raw_indicator",
    "decomposition_diagnostics",
    "sphere_quadrature",
]


def w_star_radial(r, tau: float, T: float, eta: float, n: int = 40, scaled: bool = True,
                  rule: str = "gauss"):
    """``e^{tau T} w*`` and its radial derivative at distances ``r`` from p.

    ``w*(x) = int_0^T e^{-tau t} v_tau(x, T - t) dt``; substituting the wave time
    ``sigma = sqrt(tau)(T - t)`` gives ``(1/tau) int e^{sqrt(tau) sigma} v(x, sigma) dsigma``
    over the window where ``v(x, .)`` is nonzero, integrated by Gauss-Legendre
    panels split at the kinks of the piecewise cubic.  ``rule="trapezoid"``
    instead uses ``n`` uniform intervals over the window (second order; used
    for refinement studies).
    """
    if rule not in ("gauss", "trapezoid"):
        raise ValueError(f"unknown rule {rule!r}")
    k = math.sqrt(tau)
    xg, wg = gauss_legendre(n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    val = np.zeros_like(r)
    der = np.zeros_like(r)
    smax = k * T
    for i, ri in enumerate(r):
        lo = max(ri - eta, 0.0)
        hi = min(ri + eta, smax)
        if hi <= lo:
            continue
        if k * hi > MAX_EXPONENT:
            raise NumericRangeError(f"e^{{sqrt(tau) sigma}} overflows at tau={tau:g}, r={ri:g}")
        if rule == "trapezoid":
            s = np.linspace(lo, hi, n + 1)
            w = trapezoid_weights(s) * np.exp(k * s)
            v, _, v_d = kirchhoff_radial(ri, s, eta)
            val[i] = np.dot(w, v)
            der[i] = np.dot(w, v_d)
            continue
        pts = [lo, hi] + [b for b in (ri, eta - ri) if lo < b < hi]
        pts = sorted(set(pts))
        for a, b in zip(pts[:-1], pts[1:]):
            s = 0.5 * (b - a) * xg + 0.5 * (b + a)
            w = 0.5 * (b - a) * wg * np.exp(k * s)
            v, _, v_d = kirchhoff_radial(ri, s, eta)
            val[i] += np.dot(w, v)
            der[i] += np.dot(w, v_d)
    val /= tau
    der /= tau
    if not scaled:
        if tau * T > 500:
            raise NumericRangeError("raw w* requested with tau*T > 500")
        val *= math.exp(-tau * T)
        der *= math.exp(-tau * T)
    return val, der


def w_star_scaled_eval(x, tau: float, T: float, probe: ProbeBall, normal=None) -> tuple[float, float]:
    """Scaled ``w*`` at ``x`` and its derivative along ``normal`` (radial by default)."""
    rel = np.asarray(x, dtype=float) - probe.center
    d = float(np.linalg.norm(rel))
    val, der = w_star_radial(d, tau, T, probe.eta)
    if normal is None or d == 0:
        return float(val[0]), float(der[0]) if d > 0 else 0.0
    n = np.asarray(normal, dtype=float)
    return float(val[0]), float(der[0] * np.dot(n / np.linalg.norm(n), rel / d))


def flux_laplace(run: HeatRun) -> float:
    """Trapezoidal transform of the prescribed flux: the second route to ``d_nu w*``."""
    return laplace_scaled(run.flux, run.t_grid, run.tau, run.T)


def _require_reduced_equation(tau: float, T: float, eta: float, R_omega: float):
    # the wave at time sqrt(tau) T must have left the body for (Lap - tau) w* = e^{-tau T} F0 there
    need = ((eta + R_omega) / T) ** 2
    if tau < need:
        raise DomainError(f"tau must be >= ((eta + R_Omega)/T)^2 = {need:.6g}, got {tau:g}")


def _helmholtz_radial(r_nodes, tau, rhs, core_radius, core_dz):
    """Solve ``(Lap - tau) z = rhs`` radially with zero flux at the outer radius.

    ``r_nodes`` is the uniform node list; with ``core_radius == 0`` the first
    node is the centre, otherwise ``dz/dr(core) = core_dz`` is imposed.
    """
    h = r_nodes[1] - r_nodes[0]
    if core_radius == 0.0:
        r = r_nodes[1:]
        f = rhs[1:]
    else:
        r = r_nodes
        f = rhs
    m = r.size
    b = r[-1]
    lower = np.full(m - 1, 1.0 / h**2)
    upper = np.full(m - 1, 1.0 / h**2)
    diag = np.full(m, -2.0 / h**2 - tau)
    lower[-1] = 2.0 / h**2
    diag[-1] += 2.0 / (h * b)
    g = r * f
    if core_radius > 0:
        upper[0] = 2.0 / h**2
        diag[0] -= 2.0 / (h * core_radius)
        g[0] += 2.0 * core_radius * core_dz / h
    *_, Y, info = lapack.dgtsv(lower, diag, upper, g)
    if info != 0:
        raise ArithmeticError("singular Helmholtz system")
    z = Y / r
    if core_radius == 0.0:
        z = np.concatenate([[(4.0 * z[0] - z[1]) / 3.0], z])
    return z


def reference_correction(run: HeatRun) -> np.ndarray:
    """``e^{tau T}(w_ref - w*)`` on the reference grid of a split run."""
    if run.split is None:
        raise MissingFieldError("reference correction needs a split run")
    body, probe = run.body, run.probe
    _require_reduced_equation(run.tau, run.T, probe.eta, body.R_omega)
    sp = run.split
    rhs = sp.reference_final_slice + psi_radial(sp.reference_r, probe.eta) / run.tau
    core_dz = 0.0
    if sp.core_radius > 0:
        core_dz = -float(w_star_radial(sp.core_radius, run.tau, run.T, probe.eta)[1][0])
    return _helmholtz_radial(sp.reference_r, run.tau, rhs, sp.core_radius, core_dz)


@dataclass
class IndicatorSample:
    tau: float
    I_scaled: float
    log_I_scaled: float
    positive: bool
    w_diff: float = math.nan          # (w - w*) on the outer sphere, scaled
    dnu_w_star: float = math.nan      # d_nu w* on the outer sphere, scaled
    J: float = math.nan
    E: float = math.nan
    Rh: float = math.nan
    residual: float = math.nan
    wall_time: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def _sample(tau, I, **kw) -> IndicatorSample:
    pos = bool(I > 0)
    return IndicatorSample(tau=tau, I_scaled=float(I), log_I_scaled=math.log(I) if pos else math.nan,
                           positive=pos, **kw)


def indicator(run: HeatRun) -> IndicatorSample:
    """Scaled boundary indicator from a radial forward run.

    Split runs use ``w_D + z`` for ``w - w*``.  Direct runs subtract the
    quadrature value of ``w*`` from the transform of the measured trace; that
    route cancels catastrophically once ``tau`` is moderately large and is kept
    for cross-checks at small ``tau``.
    """
    t0 = time.perf_counter()
    body, probe = run.body, run.probe
    R = body.R_omega
    wst, dwst = w_star_radial(R, run.tau, run.T, probe.eta)
    if run.split is not None:
        z = reference_correction(run)
        diff = run.split.cavity_laplace_boundary + z[-1]
    else:
        diff = run.laplace_boundary - wst[0]
    I = 4.0 * math.pi * R**2 * diff * dwst[0]
    return _sample(run.tau, I, w_diff=float(diff), dnu_w_star=float(dwst[0]),
                   wall_time=time.perf_counter() - t0)


def raw_indicator(run: HeatRun) -> float:
    """Unscaled indicator from a direct run, for small ``tau T`` only.

    Exists to check ``I_scaled = e^{2 tau T} I`` against an independent path.
    """
    if run.tau * run.T > 20:
        raise NumericRangeError("raw indicator is only evaluated for tau*T <= 20")
    R = run.body.R_omega
    w = laplace_raw(run.boundary_trace, run.t_grid, run.tau)
    wst, dwst = w_star_radial(R, run.tau, run.T, run.probe.eta, scaled=False)
    return 4.0 * math.pi * R**2 * (w - wst[0]) * dwst[0]


def _radial_integral_gl(fun, a: float, b: float, breaks=(), n: int = 64) -> float:
    """``4 pi int_a^b fun(r) r^2 dr`` with Gauss-Legendre panels."""
    xg, wg = gauss_legendre(n)
    pts = sorted({a, b, *[c for c in breaks if a < c < b]})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        r = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(wg, fun(r) * r**2)
    return 4.0 * math.pi * total


def _shell_integral(values, r) -> float:
    return 4.0 * math.pi * float(np.dot(trapezoid_weights(r), values * r**2))


@dataclass
class Decomposition:
    I: float
    J: float
    E: float
    Rh: float
    residual: float

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / abs(self.I)


def decomposition_diagnostics(run: HeatRun) -> Decomposition:
    """Energy split ``I = J + E + R_h`` evaluated independently of the boundary formula.

    ``J``: energy of ``w*`` in the cavity; ``E``: energy of ``R = w - w*`` in the
    body; ``R_h``: the source couplings through ``F = u(., T)`` and
    ``F0 = -Psi_B / tau``.  Needs a split run solved with ``keep_profile=True``.
    """
    if run.split is None or run.split.cavity_laplace_profile is None:
        raise MissingFieldError("decomposition needs a split run with keep_profile=True")
    body, probe, tau, T = run.body, run.probe, run.tau, run.T
    eta = probe.eta
    a, b = body.R_cavity, body.R_omega
    r = run.r_grid
    k0 = run.split.reference_r.size - r.size

    z = reference_correction(run)
    Rhat = run.split.cavity_laplace_profile + z[k0:]
    ws, _ = w_star_radial(r, tau, T, eta)
    F = run.final_slice
    F0 = -psi_radial(r, eta) / tau

    def wstar_energy(rr):
        v, dv = w_star_radial(rr, tau, T, eta)
        return dv**2 + tau * v**2

    def wstar_source(rr):
        v, _ = w_star_radial(rr, tau, T, eta)
        return -psi_radial(rr, eta) / tau * v

    J = _radial_integral_gl(wstar_energy, 0.0, a, breaks=(eta,))
    dR = np.gradient(Rhat, r, edge_order=2)
    E = _shell_integral(dR**2 + tau * Rhat**2, r)
    Rh = (_radial_integral_gl(wstar_source, 0.0, a, breaks=(eta,))
          + _shell_integral(F * Rhat, r)
          + _shell_integral((F0 - F) * ws, r))
    _, dwb = w_star_radial(b, tau, T, eta)
    I = 4.0 * math.pi * b**2 * Rhat[-1] * dwb[0]
    return Decomposition(I=I, J=J, E=E, Rh=Rh, residual=I - (J + E + Rh))


def indicator_no_cavity(R_omega: float, probe: ProbeBall, disc: Discretization, tau: float,
                        diagnostics: bool = False) -> tuple[IndicatorSample, Optional[Decomposition]]:
    """Indicator for a body without cavity (full ball about p).

    Here ``w - w* = z`` exactly; the indicator reduces to source-coupling terms
    and is not zero, but is exponentially smaller than with a cavity once the
    probe constraint holds.
    """
    t0 = time.perf_counter()
    T, eta = disc.T, probe.eta
    _require_reduced_equation(tau, T, eta, R_omega)
    sol = solve_ball(R_omega, probe, disc, tau)
    r = sol.r
    rhs = sol.final_slice + psi_radial(r, eta) / tau
    z = _helmholtz_radial(r, tau, rhs, 0.0, 0.0)
    _, dwb = w_star_radial(R_omega, tau, T, eta)
    I = 4.0 * math.pi * R_omega**2 * z[-1] * dwb[0]
    dec = None
    if diagnostics:
        ws, _ = w_star_radial(r, tau, T, eta)
        F = sol.final_slice
        F0 = -psi_radial(r, eta) / tau
        dz = np.gradient(z, r, edge_order=2)
        E = _shell_integral(dz**2 + tau * z**2, r)
        Rh = _shell_integral(F * z, r) + _shell_integral((F0 - F) * ws, r)
        dec = Decomposition(I=I, J=0.0, E=E, Rh=Rh, residual=I - (E + Rh))
    sample = _sample(tau, I, w_diff=float(z[-1]), dnu_w_star=float(dwb[0]),
                     wall_time=time.perf_counter() - t0)
    if dec is not None:
        sample.J, sample.E, sample.Rh, sample.residual = dec.J, dec.E, dec.Rh, dec.residual
    return sample, dec


def sphere_quadrature(func: Callable, center, radius: float, n_lat: int = 32, n_lon: int = 64) -> float:
    """Latitude-longitude rule for ``int_{|x-center|=radius} func(x, nu) dS``.

    ``func`` receives arrays of points and unit outward normals of shape (N, 3)
    and returns N values.  Gauss-Legendre in cos(theta), uniform in longitude.
    """
    mu, wmu = gauss_legendre(n_lat)
    phi = 2.0 * np.pi * np.arange(n_lon) / n_lon
    st = np.sqrt(1.0 - mu**2)
    nrm = np.stack([
        (st[:, None] * np.cos(phi)[None, :]).ravel(),
        (st[:, None] * np.sin(phi)[None, :]).ravel(),
        np.repeat(mu, n_lon),
    ], axis=1)
    pts = np.asarray(center, dtype=float) + radius * nrm
    vals = np.asarray(func(pts, nrm), dtype=float).reshape(n_lat, n_lon)
    return float(radius**2 * (2.0 * np.pi / n_lon) * np.dot(wmu, vals.sum(axis=1)))
