import time

import pytest

from heat_enclosure.geometry import BodySpec, Discretization, ProbeBall
from heat_enclosure.heat import flux_l2_norm, solve_radial_heat
from heat_enclosure.indicator import decomposition_diagnostics, indicator

REFERENCE_TAUS = (50.0, 75.0, 110.0, 160.0, 220.0, 290.0, 360.0, 400.0)


@pytest.fixture(scope="session")
def reference_body():
    return BodySpec(1.0, 0.4, (0.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def reference_probe():
    return ProbeBall((0.0, 0.0, 0.0), 0.5)


@pytest.fixture(scope="session")
def reference_sweep(reference_body, reference_probe):
    """Indicator samples, decompositions and flux norms over the reference sweep."""
    disc = Discretization(600, 4000, 1.0)
    out = {"samples": [], "decomp": {}, "flux_l2": {}}
    t0 = time.perf_counter()
    for tau in REFERENCE_TAUS:
        run = solve_radial_heat(reference_body, reference_probe, disc, tau, keep_profile=True)
        out["samples"].append(indicator(run))
        out["decomp"][tau] = decomposition_diagnostics(run)
        out["flux_l2"][tau] = flux_l2_norm(run)
    out["seconds"] = time.perf_counter() - t0
    return out
