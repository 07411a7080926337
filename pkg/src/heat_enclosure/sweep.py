"""Indicator sweep over tau: parallel solves, CSV rows, manifest and report."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig
from .errors import EstimationError, NumericRangeError
from .extraction import build_report, classify_T, samples_to_arrays
from .heat import solve_radial_heat
from .indicator import IndicatorSample, decomposition_diagnostics, indicator

log = logging.getLogger(__name__)

CSV_COLUMNS = ("tau", "I_scaled", "log_I_scaled", "J", "E", "Rh", "residual", "wall_time")


def run_tau(cfg: RunConfig, tau: float) -> IndicatorSample:
    """Forward solve plus indicator (and optional decomposition) for one tau."""
    t0 = time.perf_counter()
    try:
        run = solve_radial_heat(cfg.body, cfg.probe, cfg.disc, tau, method=cfg.method,
                                keep_profile=cfg.diagnostics)
        sample = indicator(run)
        if cfg.diagnostics and cfg.method == "split":
            dec = decomposition_diagnostics(run)
            sample.J, sample.E, sample.Rh, sample.residual = dec.J, dec.E, dec.Rh, dec.residual
    except NumericRangeError as exc:
        raise NumericRangeError(f"tau={tau:g}: {exc}") from exc
    sample.wall_time = time.perf_counter() - t0
    return sample


def _worker(args):
    cfg, tau = args
    return run_tau(cfg, tau)


def run_sweep(cfg: RunConfig, jobs: int = 1) -> list[IndicatorSample]:
    """Run every tau of the config; results are sorted by tau whatever the scheduling."""
    taus = sorted(cfg.taus)
    if jobs <= 1 or len(taus) == 1:
        samples = [run_tau(cfg, t) for t in taus]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(taus))) as pool:
            samples = list(pool.map(_worker, [(cfg, t) for t in taus]))
    samples.sort(key=lambda s: s.tau)
    return samples


def _fmt(x: float) -> str:
    # shortest repr round-trips exactly, so identical runs give identical bytes
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def write_csv(samples, path, include_wall_time: bool = True):
    path = Path(path)
    cols = CSV_COLUMNS if include_wall_time else CSV_COLUMNS[:-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for s in samples:
            w.writerow([_fmt(getattr(s, c)) for c in cols])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EstimationError(f"{path}: no rows")
    missing = {"tau", "log_I_scaled"} - set(rows[0])
    if missing:
        raise EstimationError(f"{path}: missing columns {sorted(missing)}")
    return [{k: float(v) for k, v in r.items()} for r in rows]


def write_json_atomic(obj, path):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def empirical_tau0(samples) -> Optional[float]:
    """Smallest sweep tau from which every indicator value is positive."""
    tau0 = None
    for s in reversed(sorted(samples, key=lambda s: s.tau)):
        if not s.positive:
            break
        tau0 = s.tau
    return tau0


def make_report(cfg: RunConfig, taus, logs) -> dict:
    report = build_report(taus, logs, cfg.probe.eta, cfg.disc.T, cfg.guard, cfg.L_true)
    report["classifiers"] = [
        {"T": T, "verdict": classify_T(taus, logs, T, cfg.guard).value} for T in cfg.T_classify
    ]
    return report


def execute(cfg: RunConfig, out_dir, jobs: int = 1) -> dict:
    """Run a sweep and write ``sweep.csv``, ``report.json`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    manifest = {
        "version": __version__,
        "config": cfg.echo(),
        "config_source": cfg.source,
        "status": "running",
    }
    samples = run_sweep(cfg, jobs)
    csv_path = out / "sweep.csv"
    write_csv(samples, csv_path)
    taus, logs = samples_to_arrays(samples)
    report_path = out / "report.json"
    try:
        report = make_report(cfg, taus, logs)
        report["empirical_tau0"] = empirical_tau0(samples)
        write_json_atomic(report, report_path)
        status = "complete"
    except EstimationError as exc:
        log.warning("extraction skipped: %s", exc)
        report = None
        status = f"complete (no report: {exc})"
    manifest.update({
        "status": status,
        "timings": {repr(s.tau): s.wall_time for s in samples},
        "total_time": time.perf_counter() - t0,
        "outputs": {"csv": str(csv_path), "report": str(report_path) if report else None},
    })
    write_json_atomic(manifest, out / "manifest.json")
    return {"samples": samples, "report": report, "manifest": manifest}
