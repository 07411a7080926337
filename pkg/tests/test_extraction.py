import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heat_enclosure.errors import EstimationError
from heat_enclosure.extraction import (
    Verdict, build_report, classify_T, estimate_enclosure, fit_log_indicator, rate_check, samples_to_arrays,
)
from heat_enclosure.indicator import IndicatorSample

TAUS = np.geomspace(50, 400, 8)


def model(taus, a, b=0.0, c=0.0):
    return 2 * np.sqrt(taus) * a + b * np.log(taus) + c


def test_pure_exponential_recovered():
    e = estimate_enclosure(TAUS, model(TAUS, 0.9), eta=0.5)
    assert e.L_hat == pytest.approx(0.9, abs=1e-10)
    assert e.fit.b == pytest.approx(0.0, abs=1e-8)
    assert e.fit.c == pytest.approx(0.0, abs=1e-7)
    assert e.R_D_hat == pytest.approx(0.4, abs=1e-10)
    assert e.naive_L == pytest.approx(0.9)


def test_full_model_recovered():
    f = fit_log_indicator(TAUS, model(TAUS, 0.9, 1.5, 2.0))
    assert (f.a, f.b, f.c) == pytest.approx((0.9, 1.5, 2.0), abs=1e-10)
    assert f.predict(TAUS) == pytest.approx(model(TAUS, 0.9, 1.5, 2.0))


@given(st.floats(1e-3, 1e3))
def test_rescaling_only_moves_c(s):
    y = model(TAUS, 0.8, -2.0, 1.0)
    f0 = fit_log_indicator(TAUS, y)
    f1 = fit_log_indicator(TAUS, y + math.log(s))
    assert f1.a == pytest.approx(f0.a, abs=1e-9)
    assert f1.b == pytest.approx(f0.b, abs=1e-7)
    assert f1.c == pytest.approx(f0.c + math.log(s), abs=1e-6)


def test_too_few_or_clustered_samples():
    with pytest.raises(EstimationError):
        estimate_enclosure(TAUS[:3], model(TAUS[:3], 0.9), 0.5)
    y = model(TAUS, 0.9)
    y[:5] = np.nan   # non-positive indicator values carry NaN logs
    with pytest.raises(EstimationError, match="at least 4"):
        estimate_enclosure(TAUS, y, 0.5)
    clustered = np.full(6, 100.0)
    with pytest.raises(EstimationError, match="singular"):
        fit_log_indicator(clustered, np.ones(6))


def test_unsorted_input_is_sorted():
    idx = np.array([3, 0, 7, 5, 1, 6, 2, 4])
    e1 = estimate_enclosure(TAUS[idx], model(TAUS, 0.9, 1.0)[idx], 0.5)
    e2 = estimate_enclosure(TAUS, model(TAUS, 0.9, 1.0), 0.5)
    assert e1.L_hat == pytest.approx(e2.L_hat)
    assert e1.naive_tau == 400.0


def test_truncation_stability():
    # the change from dropping the last sample shrinks as the sweep grows
    def noisy(t):
        return model(t, 0.9, 1.0, 0.5) + 1.0 / t
    changes = []
    for hi in (400, 1600, 6400):
        t = np.geomspace(50, hi, 8)
        changes.append(abs(fit_log_indicator(t, noisy(t)).a - fit_log_indicator(t[:-1], noisy(t)[:-1]).a))
    assert changes[0] > changes[1] > changes[2]


def test_classifier_on_model_data():
    y = model(TAUS, 0.9, 1.0)
    assert classify_T(TAUS, y, 4.0) is Verdict.DECAY
    assert classify_T(TAUS, y, 0.5) is Verdict.GROWTH
    # at the threshold only the algebraic term remains: rise of log(400/220) < guard
    assert classify_T(TAUS, y, 1.8) is Verdict.INDETERMINATE
    assert classify_T(TAUS[:3], y[:3], 4.0) is Verdict.INDETERMINATE


def test_classifier_monotone_in_T():
    y = model(TAUS, 0.9, 1.0)
    order = {Verdict.GROWTH: 0, Verdict.INDETERMINATE: 1, Verdict.DECAY: 2}
    verdicts = [order[classify_T(TAUS, y, T)] for T in np.linspace(0.2, 4.0, 60)]
    assert verdicts == sorted(verdicts)


def test_rate_check_recovers_K():
    K, L = 1.3, 0.9
    t = TAUS
    y = np.sqrt(t) * (2 * L + K * np.log(t) / np.sqrt(t))
    rc = rate_check(t, y, L)
    assert rc.K == pytest.approx(K, rel=0.05)
    assert rc.decreasing and rc.converging
    assert np.all(rc.within_bound)


def test_rate_check_constant_input_flagged():
    rc = rate_check(TAUS, np.zeros_like(TAUS), 0.9)
    assert np.allclose(rc.residual, 1.8)
    assert not rc.converging


def test_report_and_sample_conversion():
    samples = [IndicatorSample(t, math.exp(v), v, True) for t, v in zip(TAUS, model(TAUS, 0.9, 1.0))]
    taus, logs = samples_to_arrays(samples)
    rep = build_report(taus, logs, eta=0.5, T=1.0, L_true=0.9)
    assert rep["L_hat"] == pytest.approx(0.9)
    assert rep["classifier"]["verdict"] == "growth_to_infinity"
    assert len(rep["residual_table"]) == 8
    assert "rate_check" in rep
    t2, l2 = samples_to_arrays([s.as_dict() for s in samples])
    assert np.array_equal(t2, taus) and np.array_equal(l2, logs)
