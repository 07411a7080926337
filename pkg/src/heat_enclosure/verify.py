"""Oracle suites behind ``verify-*`` subcommands and the acceptance tests."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .forms import HCoefficients, H_sum, H_sum_poly, volume_identity_lhs, volume_identity_rhs
from .geometry import BodySpec, Discretization, ProbeBall
from .heat import solve_radial_heat
from .indicator import decomposition_diagnostics
from .wave import kirchhoff_oracle, kirchhoff_radial


@dataclass
class SuiteResult:
    name: str
    max_error: float
    tol: float
    seconds: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error) and self.max_error <= self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<14s} max_err={self.max_error:.3e}  tol={self.tol:.0e}  {self.seconds:6.2f}s  {self.detail}"


# (tau_hat, T_hat, eta, |x - p|); the first is the reference point
VOLUME_IDENTITY_POINTS = (
    (2.0, 1.5, 0.5, 0.3),
    (1.0, 2.0, 0.5, 1.0),
    (4.0, 1.5, 0.2, 0.9),
    (3.0, 3.0, 1.5, 1.0),
    (2.0, 1.2, 0.5, 0.0),
    (8.0, 2.0, 1.0, 0.5),
)


def suite_volume_identity(tol: float = 1e-4) -> SuiteResult:
    t0 = time.perf_counter()
    worst = 0.0
    for th, Th, eta, d in VOLUME_IDENTITY_POINTS:
        probe = ProbeBall((0.0, 0.0, 0.0), eta)
        lhs = volume_identity_lhs((d, 0.0, 0.0), th, Th, probe)
        rhs = volume_identity_rhs((d, 0.0, 0.0), th, Th, eta, probe.p)
        worst = max(worst, abs(lhs.value - rhs) / abs(rhs))
    return SuiteResult("prop31", worst, tol, time.perf_counter() - t0, f"{len(VOLUME_IDENTITY_POINTS)} points")


def forms_grid():
    """75 (tau_hat, T_hat, eta) triples with 0.5 <= tau_hat*eta <= 10."""
    pts = []
    for z, eta, m in itertools.product((0.5, 1.0, 2.0, 5.0, 10.0), (0.25, 0.5, 1.0), (1.0, 1.5, 2.0, 3.0, 5.0)):
        pts.append((z / eta, eta * (1.0 + m), eta))
    return pts


def suite_forms(tol: float = 1e-10) -> SuiteResult:
    t0 = time.perf_counter()
    worst = 0.0
    grid = forms_grid()
    for th, Th, eta in grid:
        c = HCoefficients(th, Th, eta)
        closed = H_sum(c)
        worst = max(worst, abs(closed - H_sum_poly(c)) / abs(closed))
    return SuiteResult("forms", worst, tol, time.perf_counter() - t0, f"{len(grid)} points")


def suite_kirchhoff(tol: float = 1e-8, n: int = 50, n_quad: int = 256, eta: float = 0.5) -> SuiteResult:
    """Closed form vs surface quadrature on an n x n (d, s) grid; support must be exact."""
    t0 = time.perf_counter()
    probe = ProbeBall((0.0, 0.0, 0.0), eta)
    grid = np.linspace(0.0, 1.5, n)
    worst = 0.0
    support_bad = 0
    for d in grid:
        v, _, _ = kirchhoff_radial(d, grid, eta)
        for s, vc in zip(grid, v):
            vq = kirchhoff_oracle((d, 0.0, 0.0), s, probe, n_quad=n_quad)
            inside = abs(d - s) < eta
            if not inside and (vc != 0.0 or vq != 0.0):
                support_bad += 1
            if vq != 0.0:
                worst = max(worst, abs(vc - vq) / abs(vq))
            elif vc != 0.0:
                support_bad += 1
    if support_bad:
        worst = np.inf
    return SuiteResult("kirchhoff", worst, tol, time.perf_counter() - t0,
                       f"{n}x{n} grid, support violations={support_bad}")


def reference_setup():
    body = BodySpec(1.0, 0.4, (0.0, 0.0, 0.0))
    probe = ProbeBall((0.0, 0.0, 0.0), 0.5)
    return body, probe


def suite_decomposition(tol: float = 1e-2, tau: float = 50.0, n_r: int = 600, n_t: int = 4000) -> SuiteResult:
    t0 = time.perf_counter()
    body, probe = reference_setup()
    run = solve_radial_heat(body, probe, Discretization(n_r, n_t, 1.0), tau, keep_profile=True)
    dec = decomposition_diagnostics(run)
    return SuiteResult("decomposition", dec.relative_residual, tol, time.perf_counter() - t0,
                       f"tau={tau:g} I={dec.I:.6e} J={dec.J:.3e} E={dec.E:.3e} Rh={dec.Rh:.3e}")


SUITES = {
    "prop31": suite_volume_identity,
    "forms": suite_forms,
    "kirchhoff": suite_kirchhoff,
    "decomposition": suite_decomposition,
}


def run_verifications(selector: str = "all") -> list[SuiteResult]:
    if selector == "all":
        names = list(SUITES)
    elif selector in SUITES:
        names = [selector]
    else:
        raise ValueError(f"unknown suite {selector!r}; choose from {sorted(SUITES) + ['all']}")
    return [SUITES[n]() for n in names]
