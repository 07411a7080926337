"""Forward heat problem on a concentric spherical shell (or full ball).

With ``U = r u`` the radial heat equation becomes ``U_t = U_rr``.  Boundary
conditions in the U variable:

* insulated sphere of radius a (cavity side):  ``U_r = U / a``
* outer sphere of radius b with flux f:        ``U_r = U / b + b f``
* ball centre:                                 ``U = 0``

Crank-Nicolson in time, ghost nodes at Neumann/Robin ends, one tridiagonal
LU factorization per solve.

``solve_radial_heat`` has two modes.  ``direct`` marches the cavity problem as
is.  ``split`` (default) marches a cavity-free reference body on the same grid
and then the cavity perturbation ``D = u_f - u_ref``, which obeys the same
scheme with a source at the cavity node.  The two give the same discrete
``u_f`` up to rounding, but ``split`` keeps ``D`` as a separately computed
field: the cavity signal in the boundary transform is smaller than the
transform itself by roughly ``exp(-2 sqrt(tau) (R_Omega - R_D))``, far below
the discretization error of either solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from .errors import ConfigError, HeatSolverError, NumericRangeError
from .geometry import BodySpec, Discretization, ProbeBall
from .laplace import MAX_EXPONENT, ScaledAccumulator
from .wave import radial_flux

PIVOT_FLOOR = 1e-14
MIN_WINDOW_STEPS = 20
STEPS_PER_WINDOW = 40


def flux_onset(tau: float, T: float, R_omega: float, eta: float) -> float:
    """First time at which the time-reversed flux can be nonzero on the outer sphere."""
    return max(0.0, T - (R_omega + eta) / math.sqrt(tau))


def time_grid(tau: float, T: float, eta: float, n_t: int, resolve_window: bool = True) -> np.ndarray:
    dt = T / n_t
    if resolve_window:
        dt = min(dt, (2.0 * eta / math.sqrt(tau)) / STEPS_PER_WINDOW)
    n = int(math.ceil(T / dt - 1e-9))
    return np.linspace(0.0, T, n + 1)


@dataclass
class AnnulusSolution:
    r: np.ndarray
    t: np.ndarray
    boundary_trace: np.ndarray           # u(b, t_n)
    final_slice: np.ndarray              # u(r, T)
    field: Optional[np.ndarray] = None   # u(t_n, r_j), when kept
    laplace_boundary: float = 0.0        # scaled transform of u(b, .)
    laplace_profile: Optional[np.ndarray] = None
    probe_values: Optional[np.ndarray] = None  # U at requested node indices, per step
    heat_content: Optional[np.ndarray] = None  # discrete int u dx per step


def _operator(r: np.ndarray, h: float, inner: str, inner_radius: float):
    """Tridiagonal (lower, diag, upper) of the U-Laplacian on the unknown nodes."""
    m = r.size
    lower = np.full(m - 1, 1.0 / h**2)
    upper = np.full(m - 1, 1.0 / h**2)
    diag = np.full(m, -2.0 / h**2)
    if inner == "insulated":
        upper[0] = 2.0 / h**2
        diag[0] = (-2.0 - 2.0 * h / inner_radius) / h**2
    b = r[-1]
    lower[-1] = 2.0 / h**2
    diag[-1] = (-2.0 + 2.0 * h / b) / h**2
    return lower, diag, upper


def _trap_weights_r(r: np.ndarray, h: float, inner: str) -> np.ndarray:
    w = np.full(r.size, h)
    w[-1] = 0.5 * h
    if inner == "insulated":
        w[0] = 0.5 * h
    return w


def solve_annulus(
    r_inner: float,
    r_outer: float,
    n_r: int,
    t_grid,
    flux,
    *,
    source: Optional[Callable] = None,
    node0_forcing=None,
    tau: Optional[float] = None,
    T: Optional[float] = None,
    keep_field: bool = False,
    keep_profile: bool = False,
    probe_nodes=(),
    track_heat: bool = False,
) -> AnnulusSolution:
    """Crank-Nicolson solve of ``u_t = Lap u`` on ``r_inner <= r <= r_outer``.

    ``r_inner == 0`` means the full ball.  ``flux`` is the outward normal
    derivative on the outer sphere sampled on ``t_grid``; ``source(r, t)`` is an
    optional volumetric source (verification only); ``node0_forcing`` is a per
    step array added (with a minus sign) to the U-equation at the innermost
    unknown.  With ``tau`` given, scaled Laplace transforms are accumulated.
    ``probe_nodes`` are indices into the full node list (including r = 0)
    whose U values are recorded every step.
    """
    t = np.asarray(t_grid, dtype=float)
    flux = np.asarray(flux, dtype=float)
    if flux.shape != t.shape:
        raise ValueError("flux must be sampled on t_grid")
    h = (r_outer - r_inner) / n_r
    nodes = r_inner + h * np.arange(n_r + 1)
    nodes[-1] = r_outer
    if r_inner == 0.0:
        inner = "center"
        r = nodes[1:]
        off = 1
    else:
        inner = "insulated"
        r = nodes
        off = 0
    m = r.size
    b = r_outer

    lower, diag, upper = _operator(r, h, inner, r_inner)
    dt_all = np.diff(t)
    if not np.allclose(dt_all, dt_all[0], rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform")
    dt = dt_all[0]

    a_low = -0.5 * dt * lower
    a_diag = 1.0 - 0.5 * dt * diag
    a_up = -0.5 * dt * upper
    dl, d, du, du2, ipiv, info = lapack.dgttrf(a_low, a_diag, a_up)
    if info != 0 or np.min(np.abs(d)) < PIVOT_FLOOR:
        raise HeatSolverError(f"tridiagonal factorization hit a pivot below {PIVOT_FLOOR}")

    def apply_L(U):
        out = diag * U
        out[:-1] += upper * U[1:]
        out[1:] += lower * U[:-1]
        return out

    def forcing(n):
        g = np.zeros(m)
        g[-1] = 2.0 * b * flux[n] / h
        if source is not None:
            g += r * source(r, t[n])
        if node0_forcing is not None:
            g[0] -= node0_forcing[n]
        return g

    nt = t.size
    U = np.zeros(m)
    trace = np.zeros(nt)
    fld = np.zeros((nt, m)) if keep_field else None
    probes = np.zeros((nt, len(probe_nodes))) if probe_nodes else None
    probe_idx = [j - off for j in probe_nodes]
    heat = np.zeros(nt) if track_heat else None
    wr = 4.0 * np.pi * r * _trap_weights_r(r, h, inner)

    acc_b = acc_p = None
    if tau is not None:
        acc_b = ScaledAccumulator(t, tau, T)
        if keep_profile:
            acc_p = ScaledAccumulator(t, tau, T)

    def record(n, U):
        trace[n] = U[-1] / b
        if fld is not None:
            fld[n] = U / r
        if probes is not None:
            for q, j in enumerate(probe_idx):
                probes[n, q] = 0.0 if j < 0 else U[j]
        if heat is not None:
            heat[n] = np.dot(wr, U)
        if acc_b is not None:
            acc_b.add(n, U[-1] / b)
            if acc_p is not None:
                acc_p.add(n, U / r)

    record(0, U)
    g_old = forcing(0)
    for n in range(1, nt):
        g_new = forcing(n)
        if not U.any() and not g_new.any() and not g_old.any():
            # zero state, zero data: the step is exactly zero
            g_old = g_new
            record(n, U)
            continue
        rhs = U + 0.5 * dt * apply_L(U) + 0.5 * dt * (g_new + g_old)
        U, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
        g_old = g_new
        record(n, U)

    sol = AnnulusSolution(
        r=r if inner == "insulated" else nodes,
        t=t,
        boundary_trace=trace,
        final_slice=U / r if inner == "insulated" else np.concatenate([[_center_value(U, h)], U / r]),
        field=fld,
        probe_values=probes,
        heat_content=heat,
    )
    if acc_b is not None:
        sol.laplace_boundary = float(acc_b.result())
        if acc_p is not None:
            prof = acc_p.result(shape=(m,))
            sol.laplace_profile = prof if inner == "insulated" else np.concatenate([[_extrapolate0(prof)], prof])
    if fld is not None and inner == "center":
        sol.field = np.concatenate([_center_column(fld), fld], axis=1)
    return sol


def _center_value(U, h):
    # u(0) = U_r(0): one-sided second-order difference with U(0) = 0
    return (4.0 * U[0] - U[1]) / (2.0 * h)


def _extrapolate0(prof):
    # quadratic extrapolation of a smooth even profile to r = 0
    return (4.0 * prof[0] - prof[1]) / 3.0 if prof.size > 1 else prof[0]


def _center_column(fld):
    return ((4.0 * fld[:, 0] - fld[:, 1]) / 3.0)[:, None]


@dataclass
class SplitParts:
    """Cavity-free reference solve and the cavity perturbation on the shell."""

    reference_r: np.ndarray
    core_radius: float                 # 0 for a full ball, else a tiny insulated core
    reference_final_slice: np.ndarray
    reference_boundary_trace: np.ndarray
    reference_laplace_boundary: float
    cavity_boundary_trace: np.ndarray
    cavity_laplace_boundary: float
    cavity_laplace_profile: Optional[np.ndarray] = None
    reference_laplace_profile: Optional[np.ndarray] = None


@dataclass
class HeatRun:
    r_grid: np.ndarray
    t_grid: np.ndarray
    tau: float
    T: float
    flux: np.ndarray
    boundary_trace: np.ndarray
    final_slice: np.ndarray
    laplace_boundary: float
    u: Optional[np.ndarray] = None
    laplace_profile: Optional[np.ndarray] = None
    split: Optional[SplitParts] = None
    method: str = "split"
    body: Optional[BodySpec] = None
    probe: Optional[ProbeBall] = None
    meta: dict = field(default_factory=dict)

    @property
    def onset(self) -> float:
        return flux_onset(self.tau, self.T, self.body.R_omega, self.probe.eta)


def _check_radial(body: BodySpec, probe: ProbeBall):
    if not np.allclose(body.center, probe.p, rtol=0, atol=1e-12):
        raise ConfigError("radial mode requires the probe centre p to coincide with the body centre")


def _check_window(t: np.ndarray, onset: float, T: float):
    inside = int(np.sum(t >= onset)) - 1
    if inside < MIN_WINDOW_STEPS:
        dt_needed = (T - onset) / MIN_WINDOW_STEPS
        raise HeatSolverError(
            f"only {inside} time steps inside the flux window [{onset:.6g}, {T:.6g}]; "
            f"need n_t >= {int(math.ceil(T / dt_needed))}"
        )


def solve_radial_heat(
    body: BodySpec,
    probe: ProbeBall,
    disc: Discretization,
    tau: float,
    *,
    method: str = "split",
    keep_field: bool = False,
    keep_profile: bool = False,
    resolve_window: bool = True,
) -> HeatRun:
    """Forward solve with the time-reversed wave flux on the outer sphere."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    _check_radial(body, probe)
    a, b, eta, T = body.R_cavity, body.R_omega, probe.eta, disc.T
    t = time_grid(tau, T, eta, disc.n_t, resolve_window)
    onset = flux_onset(tau, T, b, eta)
    if onset > 0 and tau * (T - onset) > MAX_EXPONENT:
        # tau (T - onset) = sqrt(tau) (R_Omega + eta)
        tau_max = (MAX_EXPONENT / (b + eta)) ** 2
        raise NumericRangeError(
            f"scaled weights reach exp({tau * (T - onset):.1f}) at tau={tau:g}; admissible tau <= {tau_max:.6g}"
        )
    _check_window(t, onset, T)
    f = radial_flux(t, T, tau, b, eta)
    h = (b - a) / disc.n_r

    if method == "direct":
        sol = solve_annulus(a, b, disc.n_r, t, f, tau=tau, T=T, keep_field=keep_field, keep_profile=keep_profile)
        return HeatRun(sol.r, t, tau, T, f, sol.boundary_trace, sol.final_slice, sol.laplace_boundary,
                       u=sol.field, laplace_profile=sol.laplace_profile, method="direct", body=body, probe=probe)
    if method != "split":
        raise ValueError(f"unknown method {method!r}")

    # reference grid shares the shell nodes and extends inwards to a core radius c in [0, 1.5h)
    k = int(math.floor(a / h + 1e-9))
    c = a - k * h
    if c < 1e-9 * h:
        c = 0.0
    elif c < 0.5 * h and k > 0:
        k -= 1
        c += h
    n_ref = k + disc.n_r
    ref = solve_annulus(c, b, n_ref, t, f, tau=tau, T=T, keep_field=keep_field, keep_profile=keep_profile,
                        probe_nodes=(k - 1, k, k + 1) if k > 0 else ())
    if k > 0:
        Um, U0, Up = ref.probe_values.T
        mismatch = (Um - Up + (2.0 * h / a) * U0) / h**2
        pert = solve_annulus(a, b, disc.n_r, t, np.zeros_like(t), node0_forcing=mismatch, tau=tau, T=T,
                             keep_field=keep_field, keep_profile=keep_profile)
        D_trace, D_lap, D_prof, D_final, D_field = (pert.boundary_trace, pert.laplace_boundary,
                                                    pert.laplace_profile, pert.final_slice, pert.field)
    else:
        m = disc.n_r + 1
        D_trace, D_lap, D_final = np.zeros_like(t), 0.0, np.zeros(m)
        D_prof = np.zeros(m) if keep_profile else None
        D_field = np.zeros((t.size, m)) if keep_field else None

    r_shell = ref.r[k:]
    final = ref.final_slice[k:] + D_final
    u = ref.field[:, k:] + D_field if keep_field else None
    prof = ref.laplace_profile[k:] + D_prof if keep_profile else None
    split = SplitParts(
        reference_r=ref.r,
        core_radius=c,
        reference_final_slice=ref.final_slice,
        reference_boundary_trace=ref.boundary_trace,
        reference_laplace_boundary=ref.laplace_boundary,
        cavity_boundary_trace=D_trace,
        cavity_laplace_boundary=D_lap,
        cavity_laplace_profile=D_prof,
        reference_laplace_profile=ref.laplace_profile,
    )
    return HeatRun(r_shell.copy(), t, tau, T, f, ref.boundary_trace + D_trace, final,
                   ref.laplace_boundary + D_lap, u=u, laplace_profile=prof, split=split,
                   method="split", body=body, probe=probe)


def solve_ball(R_omega: float, probe: ProbeBall, disc: Discretization, tau: float, *,
               keep_field: bool = False, keep_profile: bool = False) -> AnnulusSolution:
    """Cavity-free body: the full ball of radius ``R_omega`` about ``p``."""
    T, eta = disc.T, probe.eta
    t = time_grid(tau, T, eta, disc.n_t)
    _check_window(t, flux_onset(tau, T, R_omega, eta), T)
    f = radial_flux(t, T, tau, R_omega, eta)
    return solve_annulus(0.0, R_omega, disc.n_r, t, f, tau=tau, T=T, keep_field=keep_field,
                         keep_profile=keep_profile)


def l2_norms(run: HeatRun) -> dict:
    """L2 proxies of the moderateness estimate: ||u||_{L2(0,T;L2)} and ||u(., T)||_{L2}."""
    from .laplace import trapezoid_weights

    r = run.r_grid
    wr = 4.0 * np.pi * r**2 * trapezoid_weights(r)
    out = {"final": float(np.sqrt(np.dot(wr, run.final_slice**2)))}
    if run.u is not None:
        per_t = run.u**2 @ wr
        out["space_time"] = float(np.sqrt(np.dot(trapezoid_weights(run.t_grid), per_t)))
    return out


def flux_l2_norm(run: HeatRun) -> float:
    """Discrete L2(0,T; L2(outer sphere)) norm of the prescribed flux."""
    from .laplace import trapezoid_weights

    area = 4.0 * np.pi * run.body.R_omega**2
    return float(np.sqrt(area * np.dot(trapezoid_weights(run.t_grid), run.flux**2)))
