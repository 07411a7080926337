"""Post-processing of an indicator sweep: enclosure estimate, T-classifier, rate check.

Inputs are pairs ``(tau, log I_scaled)``; only samples with positive indicator
enter any fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import EstimationError

MIN_SAMPLES = 4
# condition-number ceiling for the three-column design matrix
MAX_CONDITION = 1e10


class Verdict(str, Enum):
    DECAY = "decay_to_zero"
    GROWTH = "growth_to_infinity"
    INDETERMINATE = "indeterminate"


@dataclass
class FitModel:
    """``log I_scaled ~ 2 sqrt(tau) a + b log tau + c``."""
    a: float
    b: float
    c: float

    def predict(self, tau):
        tau = np.asarray(tau, dtype=float)
        return 2.0 * np.sqrt(tau) * self.a + self.b * np.log(tau) + self.c


@dataclass
class Estimate:
    L_hat: float
    R_D_hat: float
    fit: FitModel
    naive_L: float          # (1/(2 sqrt(tau))) log I_scaled at the largest tau
    naive_tau: float
    n_used: int


@dataclass
class RateCheck:
    tau: np.ndarray
    residual: np.ndarray    # |(1/sqrt(tau)) log I - 2 L_true|
    K: float                # least-squares slope of residual against log(tau)/sqrt(tau)
    exponent: float         # slope of log residual against log(log(tau)/sqrt(tau))
    within_bound: np.ndarray
    decreasing: bool
    converging: bool


@dataclass
class SweepResult:
    samples: list
    L_hat: float = math.nan
    R_D_hat: float = math.nan
    fit_model: Optional[FitModel] = None
    classifier: Verdict = Verdict.INDETERMINATE
    rate_residuals: list = field(default_factory=list)


def _positive(taus, logs):
    taus = np.asarray(taus, dtype=float)
    logs = np.asarray(logs, dtype=float)
    if taus.shape != logs.shape:
        raise EstimationError("tau and log-indicator arrays differ in length")
    keep = np.isfinite(logs)
    order = np.argsort(taus[keep], kind="stable")
    return taus[keep][order], logs[keep][order]


def samples_to_arrays(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Pull ``(tau, log I_scaled)`` from IndicatorSample-like objects or dicts."""
    def get(s, k):
        return s[k] if isinstance(s, dict) else getattr(s, k)
    taus = np.array([float(get(s, "tau")) for s in samples])
    logs = np.array([float(get(s, "log_I_scaled")) for s in samples])
    return taus, logs


def fit_log_indicator(taus, logs) -> FitModel:
    t, y = _positive(taus, logs)
    if t.size < MIN_SAMPLES:
        raise EstimationError(f"need at least {MIN_SAMPLES} positive samples, got {t.size}")
    A = np.column_stack([2.0 * np.sqrt(t), np.log(t), np.ones_like(t)])
    # column scaling before the conditioning check so units do not matter
    scale = np.linalg.norm(A, axis=0)
    cond = np.linalg.cond(A / scale)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise EstimationError(f"fit matrix is singular (condition {cond:.3g}); tau values too clustered")
    coef, *_ = np.linalg.lstsq(A / scale, y, rcond=None)
    a, b, c = coef / scale
    return FitModel(float(a), float(b), float(c))


def estimate_enclosure(taus, logs, eta: float) -> Estimate:
    """Fit the log-indicator model; ``L_hat = a`` estimates ``eta + R_D(p)``."""
    fit = fit_log_indicator(taus, logs)
    t, y = _positive(taus, logs)
    naive = y[-1] / (2.0 * math.sqrt(t[-1]))
    return Estimate(L_hat=fit.a, R_D_hat=fit.a - eta, fit=fit, naive_L=float(naive),
                    naive_tau=float(t[-1]), n_used=int(t.size))


def classify_T(taus, logs, T: float, guard: float = 2.0) -> Verdict:
    """Growth or decay of ``m = e^{-sqrt(tau) T} I_scaled`` over the top half of the sweep."""
    t, y = _positive(taus, logs)
    if t.size < MIN_SAMPLES:
        return Verdict.INDETERMINATE
    top = slice(t.size // 2, None)
    log_m = y[top] - np.sqrt(t[top]) * T
    steps = np.diff(log_m)
    total = log_m[-1] - log_m[0]
    if np.all(steps < 0) and -total > guard:
        return Verdict.DECAY
    if np.all(steps > 0) and total > guard:
        return Verdict.GROWTH
    return Verdict.INDETERMINATE


def rate_check(taus, logs, L_true: float) -> RateCheck:
    """Compare the naive per-tau estimate with the expected ``O(log tau / sqrt tau)`` rate."""
    t, y = _positive(taus, logs)
    res = np.abs(y / np.sqrt(t) - 2.0 * L_true)
    x = np.log(t) / np.sqrt(t)
    K = float(np.dot(x, res) / np.dot(x, x))
    within = res <= K * x * (1.0 + 1e-12)
    if t.size >= 2 and np.all(res > 0):
        exponent = float(np.polyfit(np.log(x), np.log(res), 1)[0])
    else:
        exponent = math.nan
    decreasing = bool(t.size >= 2 and np.all(np.diff(res) < 0))
    # a converging sequence must shrink relative to its own start
    converging = bool(decreasing and res[-1] < 0.9 * res[0])
    return RateCheck(tau=t, residual=res, K=K, exponent=exponent, within_bound=within,
                     decreasing=decreasing, converging=converging)


def build_report(taus, logs, eta: float, T: float, guard: float = 2.0,
                 L_true: Optional[float] = None) -> dict:
    """JSON-ready summary used by the ``extract`` subcommand."""
    est = estimate_enclosure(taus, logs, eta)
    t, y = _positive(taus, logs)
    report = {
        "L_hat": est.L_hat,
        "R_D_hat": est.R_D_hat,
        "fit": {"a": est.fit.a, "b": est.fit.b, "c": est.fit.c},
        "naive": {"tau": est.naive_tau, "L": est.naive_L},
        "classifier": {"T": T, "guard": guard, "verdict": classify_T(taus, logs, T, guard).value},
        "residual_table": [
            {"tau": float(ti), "residual": float(yi / math.sqrt(ti) - 2.0 * est.L_hat)}
            for ti, yi in zip(t, y)
        ],
        "n_positive": est.n_used,
        "n_samples": int(np.size(taus)),
    }
    if L_true is not None:
        rc = rate_check(taus, logs, L_true)
        report["rate_check"] = {
            "L_true": L_true, "K": rc.K, "exponent": rc.exponent,
            "residual": rc.residual.tolist(), "within_bound": rc.within_bound.tolist(),
            "converging": rc.converging,
        }
    return report
