"""Probe ball, concentric body and discretization value types."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConstraintError

log = logging.getLogger(__name__)


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ConfigError(f"expected a 3-vector, got {v!r}")
    return a


@dataclass(frozen=True)
class ProbeBall:
    """Open ball B of radius ``eta`` about ``p``."""

    p: tuple = (0.0, 0.0, 0.0)
    eta: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(c) for c in _vec3(self.p)))
        if not self.eta > 0:
            raise ConfigError(f"probe radius eta must be positive, got {self.eta}")
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def center(self) -> np.ndarray:
        return np.array(self.p)


@dataclass(frozen=True)
class BodySpec:
    """Spherical body of radius ``R_omega`` with a concentric spherical cavity."""

    R_omega: float = 1.0
    R_cavity: float = 0.4
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in _vec3(self.center)))
        if not 0 < self.R_cavity < self.R_omega:
            raise ConfigError(
                f"need 0 < R_cavity < R_omega, got R_cavity={self.R_cavity}, R_omega={self.R_omega}"
            )
        object.__setattr__(self, "R_omega", float(self.R_omega))
        object.__setattr__(self, "R_cavity", float(self.R_cavity))

    def R_D(self, p) -> float:
        return radius_sup(p, self.center, self.R_cavity)

    def R_Omega(self, p) -> float:
        return radius_sup(p, self.center, self.R_omega)


@dataclass(frozen=True)
class Discretization:
    """Grid floors. ``n_t`` is a floor: the solver refines dt to resolve the flux."""

    n_r: int = 600
    n_t: int = 4000
    T: float = 1.0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n_r) != self.n_r or self.n_r < 16:
            raise ConfigError(f"n_r must be an integer >= 16, got {self.n_r}")
        if int(self.n_t) != self.n_t or self.n_t < 16:
            raise ConfigError(f"n_t must be an integer >= 16, got {self.n_t}")
        if not self.T > 0:
            raise ConfigError(f"final time T must be positive, got {self.T}")
        object.__setattr__(self, "n_r", int(self.n_r))
        object.__setattr__(self, "n_t", int(self.n_t))
        object.__setattr__(self, "T", float(self.T))


def radius_sup(p, center, radius: float) -> float:
    """sup over the ball B(center, radius) of |x - p|."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    return float(np.linalg.norm(_vec3(p) - _vec3(center)) + radius)


def check_constraint(eta: float, R_D: float, R_Omega: float) -> bool:
    """True iff eta + 2 R_D > R_Omega, the admissibility condition on the probe."""
    if not (eta > 0 and R_D > 0 and R_Omega > 0):
        raise ValueError(f"arguments must be positive: eta={eta}, R_D={R_D}, R_Omega={R_Omega}")
    return eta + 2.0 * R_D > R_Omega


def enforce_constraint(eta: float, R_D: float, R_Omega: float, strict: bool = True) -> bool:
    """Refuse (strict) or warn (non-strict) when the probe constraint fails."""
    ok = check_constraint(eta, R_D, R_Omega)
    if not ok:
        msg = (
            f"probe constraint eta + 2*R_D > R_Omega violated: "
            f"{eta} + 2*{R_D} = {eta + 2 * R_D} <= {R_Omega}"
        )
        if strict:
            raise ConstraintError(msg)
        log.warning("%s (continuing: strict mode off)", msg)
    return ok


def safe_eta(R_Omega: float) -> float:
    """Probe radius that satisfies the constraint whatever the cavity is."""
    return float(R_Omega)
