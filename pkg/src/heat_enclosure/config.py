"""YAML run configuration with line-referenced validation errors.

Example::

    probe: {p: [0, 0, 0], eta: 0.5}      # eta may be "safe"
    body:  {R_omega: 1.0, R_cavity: 0.4, center: [0, 0, 0]}
    run:
      T: 1.0
      n_r: 600
      n_t: 4000
      tau_list: [50, 75, 110, 160, 220, 290, 360, 400]
      # or: tau_list: {geometric: {start: 50, stop: 400, n: 8}}
    mode:  {strict: true, diagnostics: false, method: split}
    extract: {guard: 2.0, T_classify: [1.0, 4.0], L_true: 0.9}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError, ConstraintError
from .geometry import BodySpec, Discretization, ProbeBall, enforce_constraint, safe_eta

SCHEMA = {
    "probe": {"p", "eta"},
    "body": {"R_omega", "R_cavity", "center"},
    "run": {"T", "n_r", "n_t", "tau_list"},
    "mode": {"strict", "diagnostics", "method"},
    "extract": {"guard", "T_classify", "L_true"},
}
REQUIRED = {"probe": {"eta"}, "body": {"R_omega", "R_cavity"}, "run": {"tau_list"}}
DEFAULT_TAUS = (50.0, 75.0, 110.0, 160.0, 220.0, 290.0, 360.0, 400.0)


@dataclass
class RunConfig:
    probe: ProbeBall
    body: BodySpec
    disc: Discretization
    taus: tuple
    strict: bool = True
    diagnostics: bool = False
    method: str = "split"
    guard: float = 2.0
    T_classify: tuple = ()
    L_true: Optional[float] = None
    source: Optional[str] = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Plain-data form of the resolved configuration, for manifests."""
        return {
            "probe": {"p": list(self.probe.p), "eta": self.probe.eta},
            "body": {"R_omega": self.body.R_omega, "R_cavity": self.body.R_cavity,
                     "center": list(self.body.center)},
            "run": {"T": self.disc.T, "n_r": self.disc.n_r, "n_t": self.disc.n_t,
                    "tau_list": list(self.taus)},
            "mode": {"strict": self.strict, "diagnostics": self.diagnostics, "method": self.method},
            "extract": {"guard": self.guard, "T_classify": list(self.T_classify), "L_true": self.L_true},
        }


def _line_map(node, path=(), out=None) -> dict:
    """Map key paths to 1-based source lines from a composed YAML node."""
    if out is None:
        out = {}
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            sub = path + (str(k.value),)
            out[sub] = k.start_mark.line + 1
            _line_map(v, sub, out)
    return out


class _Checker:
    def __init__(self, lines: dict, source: str):
        self.lines = lines
        self.source = source

    def fail(self, path: tuple, msg: str, cls=ConfigError):
        line = None
        p = path
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        where = f"{self.source}:{line}" if line else self.source
        raise cls(f"{where}: {'.'.join(path) or '<root>'}: {msg}")

    def number(self, data: dict, path: tuple, default=None, positive=True) -> float:
        key = path[-1]
        if key not in data:
            if default is None:
                self.fail(path, "missing required value")
            return default
        val = data[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"expected a number, got {val!r}")
        if not math.isfinite(val) or (positive and val <= 0):
            self.fail(path, f"expected a positive finite number, got {val!r}")
        return float(val)

    def integer(self, data: dict, path: tuple, default: int) -> int:
        val = data.get(path[-1], default)
        if isinstance(val, bool) or not isinstance(val, int) or val < 16:
            self.fail(path, f"expected an integer >= 16, got {val!r}")
        return val

    def boolean(self, data: dict, path: tuple, default: bool) -> bool:
        val = data.get(path[-1], default)
        if not isinstance(val, bool):
            self.fail(path, f"expected true/false, got {val!r}")
        return val

    def vec3(self, data: dict, path: tuple) -> tuple:
        val = data.get(path[-1], [0.0, 0.0, 0.0])
        if (not isinstance(val, list) or len(val) != 3
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in val)):
            self.fail(path, f"expected a list of 3 numbers, got {val!r}")
        return tuple(float(c) for c in val)


def _taus(chk: _Checker, run: dict) -> tuple:
    path = ("run", "tau_list")
    spec = run.get("tau_list")
    if isinstance(spec, dict):
        geo = spec.get("geometric")
        if set(spec) != {"geometric"} or not isinstance(geo, dict):
            chk.fail(path, "mapping form must be {geometric: {start, stop, n}}")
        start = chk.number(geo, path + ("geometric", "start"))
        stop = chk.number(geo, path + ("geometric", "stop"))
        n = geo.get("n", 8)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            chk.fail(path + ("geometric", "n"), f"expected a positive integer, got {n!r}")
        taus = np.geomspace(start, stop, n)
    elif isinstance(spec, list):
        if not spec:
            chk.fail(path, "tau_list is empty")
        for i, t in enumerate(spec):
            if isinstance(t, bool) or not isinstance(t, (int, float)) or not t > 0 or not math.isfinite(t):
                chk.fail(path, f"entry {i} is not a positive number: {t!r}")
        taus = np.asarray(spec, dtype=float)
    else:
        chk.fail(path, f"expected a list or {{geometric: ...}}, got {spec!r}")
    taus = np.unique(taus)
    return tuple(float(t) for t in taus)


def parse_config(data: Any, lines: Optional[dict] = None, source: str = "<config>",
                 strict: Optional[bool] = None) -> RunConfig:
    """Validate a loaded mapping.  ``strict`` overrides ``mode.strict`` when given."""
    chk = _Checker(lines or {}, source)
    if not isinstance(data, dict):
        chk.fail((), "top level must be a mapping")
    for sec, val in data.items():
        if sec not in SCHEMA:
            chk.fail((str(sec),), f"unknown section; expected one of {sorted(SCHEMA)}")
        if not isinstance(val, dict):
            chk.fail((sec,), "section must be a mapping")
        for key in val:
            if key not in SCHEMA[sec]:
                chk.fail((sec, str(key)), f"unknown key; allowed: {sorted(SCHEMA[sec])}")
    for sec, keys in REQUIRED.items():
        if sec not in data:
            chk.fail((sec,), "missing required section")
        for key in keys:
            if key not in data[sec]:
                chk.fail((sec, key), "missing required value")

    probe_d, body_d = data["probe"], data["body"]
    run_d, mode_d, ex_d = data["run"], data.get("mode", {}), data.get("extract", {})

    R_omega = chk.number(body_d, ("body", "R_omega"))
    R_cavity = chk.number(body_d, ("body", "R_cavity"))
    center = chk.vec3(body_d, ("body", "center"))
    if not R_cavity < R_omega:
        chk.fail(("body", "R_cavity"), f"R_cavity={R_cavity} must be smaller than R_omega={R_omega}")
    body = BodySpec(R_omega, R_cavity, center)
    p = chk.vec3(probe_d, ("probe", "p"))
    if "p" not in probe_d:
        p = center

    eta_raw = probe_d["eta"]
    if eta_raw == "safe":
        eta = safe_eta(body.R_Omega(p))
    else:
        eta = chk.number(probe_d, ("probe", "eta"))
    probe = ProbeBall(p, eta)

    is_strict = chk.boolean(mode_d, ("mode", "strict"), True) if strict is None else bool(strict)
    try:
        enforce_constraint(eta, body.R_D(p), body.R_Omega(p), strict=is_strict)
    except ConstraintError as exc:
        chk.fail(("probe", "eta"), str(exc), ConstraintError)

    method = mode_d.get("method", "split")
    if method not in ("split", "direct"):
        chk.fail(("mode", "method"), f"expected 'split' or 'direct', got {method!r}")

    disc = Discretization(
        n_r=chk.integer(run_d, ("run", "n_r"), 600),
        n_t=chk.integer(run_d, ("run", "n_t"), 4000),
        T=chk.number(run_d, ("run", "T"), 1.0),
    )
    T_cls = ex_d.get("T_classify", [disc.T])
    if not isinstance(T_cls, list) or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0 for t in T_cls):
        chk.fail(("extract", "T_classify"), f"expected a list of positive numbers, got {T_cls!r}")
    L_true = ex_d.get("L_true")
    if L_true is not None:
        L_true = chk.number(ex_d, ("extract", "L_true"))

    return RunConfig(
        probe=probe, body=body, disc=disc, taus=_taus(chk, run_d),
        strict=is_strict,
        diagnostics=chk.boolean(mode_d, ("mode", "diagnostics"), False),
        method=method,
        guard=chk.number(ex_d, ("extract", "guard"), 2.0),
        T_classify=tuple(float(t) for t in T_cls),
        L_true=L_true, source=source, raw=data,
    )


def load_config(path, strict: Optional[bool] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from exc
    lines = _line_map(node) if node is not None else {}
    return parse_config(data, lines, str(path), strict=strict)
