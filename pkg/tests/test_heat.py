import math

import numpy as np
import pytest

from heat_enclosure.errors import ConfigError, HeatSolverError, NumericRangeError
from heat_enclosure.geometry import BodySpec, Discretization, ProbeBall
from heat_enclosure.heat import (
    flux_l2_norm, flux_onset, l2_norms, solve_annulus, solve_ball, solve_radial_heat, time_grid,
)
from heat_enclosure.laplace import trapezoid_weights

A, B = 0.4, 1.0


def mms_error(n):
    """Max error for u = sin(t) ((r - a)^2 + 1) with insulated r = a and matching flux at r = b."""
    t = np.linspace(0.0, 1.0, n + 1)
    flux = np.sin(t) * 2.0 * (B - A)

    def source(r, tt):
        phi = (r - A) ** 2 + 1.0
        return math.cos(tt) * phi - math.sin(tt) * (2.0 + 4.0 * (r - A) / r)

    sol = solve_annulus(A, B, n, t, flux, source=source)
    exact = math.sin(1.0) * ((sol.r - A) ** 2 + 1.0)
    return np.max(np.abs(sol.final_slice - exact))


def test_mms_second_order():
    errs = [mms_error(n) for n in (20, 40, 80)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), orders


def test_heat_conservation_insulated_cavity():
    # int u dx changes only through the outer flux: d/dt H = 4 pi b^2 f
    t = np.linspace(0, 1, 801)
    f = np.sin(4 * t) ** 2
    sol = solve_annulus(A, B, 200, t, f, track_heat=True)
    gained = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))]) * 4 * np.pi * B**2
    assert np.max(np.abs(sol.heat_content - gained)) <= 1e-10 * np.max(np.abs(gained))


def test_full_ball_conservation():
    t = np.linspace(0, 1, 401)
    f = t * (1 - t)
    sol = solve_annulus(0.0, B, 100, t, f, track_heat=True)
    total = 4 * np.pi * B**2 * np.dot(trapezoid_weights(t), f)
    assert sol.heat_content[-1] == pytest.approx(total, rel=1e-10)
    assert sol.r[0] == 0.0 and sol.final_slice.size == 101


def test_zero_data_gives_exact_zero():
    t = np.linspace(0, 1, 101)
    sol = solve_annulus(A, B, 50, t, np.zeros_like(t), keep_field=True)
    assert not sol.field.any()


def test_time_grid_resolves_window():
    t = time_grid(400.0, 1.0, 0.5, 100)
    dt = t[1] - t[0]
    assert dt <= (2 * 0.5 / 20.0) / 40 + 1e-15
    assert t[0] == 0.0 and t[-1] == 1.0
    assert time_grid(1.0, 1.0, 0.5, 100).size == 101
    assert flux_onset(400.0, 1.0, 1.0, 0.5) == pytest.approx(1.0 - 1.5 / 20.0)
    assert flux_onset(1.0, 1.0, 1.0, 0.5) == 0.0


def test_trace_zero_before_onset(reference_body, reference_probe):
    run = solve_radial_heat(reference_body, reference_probe, Discretization(100, 500, 1.0), 100.0)
    before = run.t_grid < run.onset - 1e-12
    assert before.any()
    assert np.all(run.boundary_trace[before] == 0.0)
    assert np.all(run.flux[before] == 0.0)


@pytest.mark.parametrize("tau", [50.0, 400.0])
def test_split_matches_direct(reference_body, reference_probe, tau):
    disc = Discretization(300, 2000, 1.0)
    s = solve_radial_heat(reference_body, reference_probe, disc, tau, method="split", keep_profile=True)
    d = solve_radial_heat(reference_body, reference_probe, disc, tau, method="direct", keep_profile=True)
    scale = np.max(np.abs(d.boundary_trace))
    assert np.max(np.abs(s.boundary_trace - d.boundary_trace)) <= 1e-9 * scale
    assert s.laplace_boundary == pytest.approx(d.laplace_boundary, rel=1e-9)
    assert np.allclose(s.final_slice, d.final_slice, rtol=1e-8, atol=1e-12 * np.max(np.abs(d.final_slice)))


def test_field_storage_shapes(reference_body, reference_probe):
    run = solve_radial_heat(reference_body, reference_probe, Discretization(40, 200, 1.0), 60.0, keep_field=True)
    assert run.u.shape == (run.t_grid.size, run.r_grid.size)
    assert np.allclose(run.u[-1], run.final_slice)
    norms = l2_norms(run)
    assert norms["space_time"] > 0 and norms["final"] > 0


def test_refuses_off_centre_probe(reference_body):
    with pytest.raises(ConfigError):
        solve_radial_heat(reference_body, ProbeBall((0.1, 0, 0), 0.5), Discretization(), 50.0)


def test_refuses_unresolved_window(reference_body, reference_probe):
    with pytest.raises(HeatSolverError, match="need n_t"):
        solve_radial_heat(reference_body, reference_probe, Discretization(50, 100, 1.0), 400.0,
                          resolve_window=False)


def test_range_guard(reference_body, reference_probe):
    with pytest.raises(NumericRangeError, match="admissible tau"):
        solve_radial_heat(reference_body, reference_probe, Discretization(50, 100, 1.0), 3e5)


def test_ball_solution(reference_probe):
    sol = solve_ball(1.0, reference_probe, Discretization(100, 500, 1.0), 100.0, keep_profile=True)
    assert sol.r[0] == 0.0
    assert np.all(np.isfinite(sol.laplace_profile))


def test_flux_norm_bounded_in_tau(reference_body, reference_probe):
    disc = Discretization(60, 400, 1.0)
    n50 = flux_l2_norm(solve_radial_heat(reference_body, reference_probe, disc, 50.0))
    n400 = flux_l2_norm(solve_radial_heat(reference_body, reference_probe, disc, 400.0))
    assert n400 <= 2 * n50
