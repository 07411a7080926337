import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heat_enclosure.errors import DomainError, NumericRangeError
from heat_enclosure.forms import (
    HCoefficients, H_minus, H_plus, H_sum, H_sum_poly, H_sum_scaled, g_even, g_imag_axis, psi_hat,
    psi_hat_radial_quadrature, volume_identity_lhs, volume_identity_rhs, sinh_kernel, sinh_kernel_r, w1_star,
    w1_star_scaled_dr, w1_star_scaled_r, yukawa_potential_radial,
)
from heat_enclosure.geometry import ProbeBall
from heat_enclosure.verify import VOLUME_IDENTITY_POINTS, forms_grid


def _h_exact(t, T, e):
    mp.mp.dps = 40
    t, T, e = mp.mpf(t), mp.mpf(T), mp.mpf(e)
    return mp.exp(-t * T) * (4 - (t * e + 2) * mp.exp(-t * e) + (t * e - 2) * mp.exp(t * e)) / t**2


def test_sinh_kernel_limits():
    assert float(sinh_kernel_r(0.0, 9.0)) == pytest.approx(3.0)
    assert float(sinh_kernel_r(1e-7, 9.0)) == pytest.approx(3.0, rel=1e-12)
    assert float(sinh_kernel_r(0.5, 4.0)) == pytest.approx(math.sinh(1.0) / 0.5)
    assert sinh_kernel((1, 0, 0), (0, 0, 0), 1.0) == pytest.approx(math.sinh(1.0))
    with pytest.raises(ValueError):
        sinh_kernel_r(1.0, 0.0)


def test_sinh_kernel_solves_helmholtz():
    # (Lap - tau) sinh(k r)/r = 0 for r > 0: check (r w)'' = tau (r w)
    tau, r, h = 7.0, 0.8, 1e-4
    f = lambda s: s * float(sinh_kernel_r(s, tau))
    assert (f(r + h) - 2 * f(r) + f(r - h)) / h**2 == pytest.approx(tau * f(r), rel=1e-6)


def test_h_sum_closed_form_matches_poly_reference_point():
    c = HCoefficients(2.0, 1.5, 0.5)
    assert H_sum(c) == pytest.approx(H_sum_poly(c), rel=1e-12)
    assert H_sum(c) == pytest.approx(float(_h_exact(2.0, 1.5, 0.5)), rel=1e-14)
    assert H_plus(c) + H_minus(c) == pytest.approx(H_sum(c), rel=1e-12)


def test_h_sum_grid_identity():
    grid = forms_grid()
    assert len(grid) == 75
    worst = max(abs(H_sum(HCoefficients(*p)) - H_sum_poly(HCoefficients(*p))) / abs(H_sum(HCoefficients(*p)))
                for p in grid)
    assert worst <= 1e-10


@given(st.floats(1e-4, 20), st.floats(0.05, 2))
def test_h_sum_scaled_accurate(t, e):
    exact = float(_h_exact(t, 0.0, e))
    assert H_sum_scaled(t, e) == pytest.approx(exact, rel=1e-12)


def test_h_sum_guards():
    with pytest.raises(NumericRangeError):
        H_sum_poly(HCoefficients(100.0, 1.0, 0.5))
    with pytest.raises(ValueError):
        HCoefficients(0.0, 1.0, 1.0)
    c = HCoefficients.from_heat(4.0, 1.5, 0.5)
    assert (c.tau_hat, c.T_hat) == (2.0, 3.0)


def test_g_even_small_argument_and_symmetry():
    assert complex(g_even(1e-8, 1.0)).real == pytest.approx(1.0 / 12.0, rel=1e-10)
    for z in (0.003, 0.5, 2.0 + 1.0j, 7.0):
        assert complex(g_even(z, 0.7)) == pytest.approx(complex(g_even(-z, 0.7)), rel=1e-12)
    # series and direct branches agree across the crossover
    lo, hi = complex(g_even(0.00999, 1.0)), complex(g_even(0.01001, 1.0))
    assert abs(lo - hi) < 1e-6


@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
@settings(max_examples=50)
def test_g_even_is_even(z):
    a, b = complex(g_even(z, 0.5)), complex(g_even(-z, 0.5))
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


def test_g_on_imaginary_axis():
    for tau in (0.5, 3.0, 10.0):
        assert complex(g_even(1j * tau, 0.5)).real == pytest.approx(g_imag_axis(tau, 0.5), rel=1e-10)


def test_psi_hat_against_radial_quadrature():
    probe = ProbeBall((0, 0, 0), 0.5)
    assert psi_hat((0, 0, 0), probe).real == pytest.approx(math.pi * 0.5**4 / 3.0, rel=1e-12)
    for k in (0.5, 3.0, 12.0):
        assert psi_hat((k, 0, 0), probe).real == pytest.approx(psi_hat_radial_quadrature(k, 0.5), rel=1e-10)
    shifted = ProbeBall((0.3, 0, 0), 0.5)
    val = psi_hat((2.0, 0, 0), shifted)
    assert abs(val) == pytest.approx(abs(psi_hat((2.0, 0, 0), probe)), rel=1e-12)


def test_w1_star_helmholtz_and_derivative():
    tau, T, eta = 50.0, 1.0, 0.5
    r = np.array([0.2, 0.6, 1.0])
    h = 1e-5
    fd = (w1_star_scaled_r(r + h, tau, T, eta) - w1_star_scaled_r(r - h, tau, T, eta)) / (2 * h)
    assert np.allclose(w1_star_scaled_dr(r, tau, T, eta), fd, rtol=1e-7)
    probe = ProbeBall((0, 0, 0), eta)
    assert w1_star((0.5, 0, 0), tau, T, probe) == pytest.approx(
        math.exp(-tau * T) * w1_star((0.5, 0, 0), tau, T, probe, scaled=True))


def test_w1_star_domain_and_range():
    probe = ProbeBall((0, 0, 0), 0.5)
    with pytest.raises(DomainError):
        w1_star((10.0, 0, 0), 50.0, 1.0, probe)
    with pytest.raises(NumericRangeError):
        w1_star((0.1, 0, 0), 1000.0, 1.0, probe)


def test_yukawa_potential_solves_equation():
    # (r w)'' - tau (r w) = -r Psi
    tau, eta = 30.0, 0.5
    h = 1e-4
    for r in (0.2, 0.45, 0.8):
        f = lambda s: s * yukawa_potential_radial(s, tau, eta)[0][0]
        lhs = (f(r + h) - 2 * f(r) + f(r - h)) / h**2 - tau * f(r)
        rhs = -r * max(eta - r, 0.0)
        assert lhs == pytest.approx(rhs, abs=1e-5)
    v, d = yukawa_potential_radial(np.array([0.3]), tau, eta)
    fd = (yukawa_potential_radial(0.3 + 1e-6, tau, eta)[0] - yukawa_potential_radial(0.3 - 1e-6, tau, eta)[0]) / 2e-6
    assert d[0] == pytest.approx(fd[0], rel=1e-6)


@pytest.mark.parametrize("point", VOLUME_IDENTITY_POINTS)
def test_volume_identity_identity(point):
    th, Th, eta, d = point
    probe = ProbeBall((0, 0, 0), eta)
    lhs = volume_identity_lhs((d, 0, 0), th, Th, probe)
    rhs = volume_identity_rhs((d, 0, 0), th, Th, eta, probe.p)
    assert lhs.converged
    assert lhs.value == pytest.approx(rhs, rel=1e-10)


def test_volume_identity_parts_cancel_exactly():
    # the tau part and the time-derivative part are equal and opposite
    q = volume_identity_lhs((0.3, 0, 0), 2.0, 1.5, ProbeBall((0, 0, 0), 0.5))
    assert q.tau_part / q.dt_part == pytest.approx(-1.0, rel=1e-10)


def test_volume_identity_domain():
    probe = ProbeBall((0, 0, 0), 0.5)
    with pytest.raises(DomainError):
        volume_identity_lhs((1.2, 0, 0), 2.0, 1.5, probe)
    with pytest.raises(DomainError):
        volume_identity_lhs((0.0, 0, 0), 2.0, 0.4, probe)
