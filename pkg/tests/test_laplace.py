import math

import numpy as np
import pytest

from heat_enclosure.errors import NumericRangeError
from heat_enclosure.laplace import ScaledAccumulator, laplace_raw, laplace_scaled, trapezoid_weights


def test_trapezoid_weights_sum():
    t = np.linspace(0, 2, 11)
    assert trapezoid_weights(t).sum() == pytest.approx(2.0)


def test_constant_series():
    tau, T, c = 3.0, 1.0, 2.5
    t = np.linspace(0, T, 4001)
    val = laplace_scaled(np.full_like(t, c), t, tau, T)
    assert val == pytest.approx(c * (math.exp(tau * T) - 1) / tau, rel=1e-6)


def test_zero_series():
    t = np.linspace(0, 1, 11)
    assert laplace_scaled(np.zeros_like(t), t, 1e6, 1.0) == 0.0


def test_weights_cancel_exactly():
    tau, T = 40.0, 1.5
    t = np.linspace(0, T, 301)
    assert laplace_scaled(np.exp(-tau * (T - t)), t, tau, T) == pytest.approx(T, rel=1e-14)


def test_scaled_equals_raw_times_exponential():
    tau, T = 8.0, 1.0
    t = np.linspace(0, T, 501)
    s = np.sin(3 * t) * t
    assert laplace_scaled(s, t, tau, T) == pytest.approx(math.exp(tau * T) * laplace_raw(s, t, tau), rel=1e-13)


def test_second_order_in_time():
    tau, T = 5.0, 1.0
    exact = math.exp(tau * T) * (T / tau - 1.0 / tau**2) + 1.0 / tau**2   # int e^{tau(T-t)} (T - t) dt
    errs = []
    for n in (50, 100, 200):
        t = np.linspace(0, T, n + 1)
        errs.append(abs(laplace_scaled(T - t, t, tau, T) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.95)


def test_overflow_guard_names_tau():
    t = np.linspace(0, 1, 11)
    with pytest.raises(NumericRangeError, match="tau <= 700"):
        laplace_scaled(np.ones_like(t), t, 1000.0, 1.0)
    # data starting late keeps the exponent small
    s = np.where(t >= 0.9, 1.0, 0.0)
    assert np.isfinite(laplace_scaled(s, t, 1000.0, 1.0))


def test_axis_and_accumulator_agree():
    tau, T = 30.0, 1.0
    t = np.linspace(0, T, 201)
    data = np.outer(np.maximum(t - 0.7, 0.0), np.array([1.0, 2.0, -1.0]))
    full = laplace_scaled(data, t, tau, T, axis=0)
    acc = ScaledAccumulator(t, tau, T)
    for n in range(t.size):
        acc.add(n, data[n])
    assert np.allclose(acc.result((3,)), full, rtol=1e-14)
    assert np.allclose(laplace_scaled(data.T, t, tau, T, axis=1), full)
    with pytest.raises(ValueError):
        laplace_scaled(data[:-1], t, tau, T)
