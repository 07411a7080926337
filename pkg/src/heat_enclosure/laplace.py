"""Scaled Laplace-in-time transforms ``int_0^T e^{tau (T - t)} g(t) dt``.

The ``e^{tau T}`` scaling keeps large-tau transforms finite.  The weight
``e^{tau (T - t)}`` is only ever formed at times where the data is nonzero;
time-reversed data vanishes before the flux onset so the largest exponent is
about ``sqrt(tau) (R_Omega + eta)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericRangeError

MAX_EXPONENT = 700.0


def trapezoid_weights(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def check_exponent(tau: float, T: float, t_first: float) -> float:
    expo = tau * (T - t_first)
    if expo > MAX_EXPONENT:
        admissible = MAX_EXPONENT / max(T - t_first, 1e-300)
        raise NumericRangeError(
            f"scaled weight exp({expo:.1f}) overflows at tau={tau:g}; "
            f"with data starting at t={t_first:.6g} need tau <= {admissible:.6g}"
        )
    return expo


def laplace_scaled(series, t_grid, tau: float, T: float, axis: int = 0):
    """Trapezoidal ``int e^{tau (T - t)} series(t) dt`` along ``axis``."""
    s = np.moveaxis(np.asarray(series, dtype=float), axis, 0)
    t = np.asarray(t_grid, dtype=float)
    if s.shape[0] != t.size:
        raise ValueError("series and t_grid lengths differ")
    nz = np.flatnonzero(np.any(s.reshape(s.shape[0], -1) != 0, axis=1))
    if nz.size == 0:
        return np.zeros(s.shape[1:]) if s.ndim > 1 else 0.0
    first = nz[0]
    check_exponent(tau, T, t[first])
    w = trapezoid_weights(t)[first:] * np.exp(tau * (T - t[first:]))
    out = np.tensordot(w, s[first:], axes=(0, 0))
    return out if s.ndim > 1 else float(out)


def laplace_raw(series, t_grid, tau: float, axis: int = 0):
    """Unscaled trapezoidal ``int e^{-tau t} series(t) dt`` (small tau*T only)."""
    s = np.moveaxis(np.asarray(series, dtype=float), axis, 0)
    t = np.asarray(t_grid, dtype=float)
    w = trapezoid_weights(t) * np.exp(-tau * t)
    out = np.tensordot(w, s, axes=(0, 0))
    return out if s.ndim > 1 else float(out)


class ScaledAccumulator:
    """Running trapezoidal transform fed one time level at a time."""

    def __init__(self, t_grid, tau: float, T: float):
        self.t = np.asarray(t_grid, dtype=float)
        self.w = trapezoid_weights(self.t)
        self.tau = tau
        self.T = T
        self.value = None
        self.first_time = None

    def add(self, n: int, values):
        values = np.asarray(values, dtype=float)
        if self.value is None:
            if not np.any(values):
                return
            self.first_time = self.t[n]
            check_exponent(self.tau, self.T, self.t[n])
            self.value = np.zeros_like(values)
        self.value = self.value + self.w[n] * np.exp(self.tau * (self.T - self.t[n])) * values

    def result(self, shape=()):
        if self.value is None:
            return np.zeros(shape) if shape else 0.0
        return self.value
