"""Command-line entry point ``heat-enclosure``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numeric-range error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import struct
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigError, EstimationError, HeatSolverError, NumericRangeError
from .extraction import samples_to_arrays
from .geometry import ProbeBall
from .heat import solve_radial_heat
from .indicator import flux_laplace
from .sweep import execute, make_report, read_csv, write_json_atomic
from .verify import run_verifications
from .wave import flux_trace, kirchhoff_eval, kirchhoff_oracle

log = logging.getLogger("heat_enclosure")

FIELD_MAGIC = b"HEFIELD1"


def write_field(path, r, t, u):
    """Binary field: 8-byte magic, int64 n_t, int64 n_r, r[n_r], t[n_t], u[n_t, n_r] row-major.

    All numbers little-endian; floats are IEEE doubles.
    """
    u = np.ascontiguousarray(u, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<qq", t.size, r.size))
        fh.write(np.asarray(r, dtype="<f8").tobytes())
        fh.write(np.asarray(t, dtype="<f8").tobytes())
        fh.write(u.tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        if fh.read(8) != FIELD_MAGIC:
            raise ValueError(f"{path}: not a field file")
        n_t, n_r = struct.unpack("<qq", fh.read(16))
        r = np.frombuffer(fh.read(8 * n_r), dtype="<f8")
        t = np.frombuffer(fh.read(8 * n_t), dtype="<f8")
        u = np.frombuffer(fh.read(8 * n_t * n_r), dtype="<f8").reshape(n_t, n_r)
    return r, t, u


def _vec(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return tuple(parts)


def _add_common(sp, config_required=True):
    sp.add_argument("--config", required=config_required, help="YAML run configuration")
    sp.add_argument("--out", default="out", help="output directory (default: out)")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true", default=None,
                   help="refuse probes violating the admissibility constraint")
    g.add_argument("--no-strict", dest="strict", action="store_false",
                   help="warn instead of refusing")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heat-enclosure", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("wave-probe", help="evaluate the auxiliary wave at a point")
    sp.add_argument("--x", type=_vec, required=True, help="point x,y,z")
    sp.add_argument("--p", type=_vec, default=(0.0, 0.0, 0.0), help="probe centre x,y,z")
    sp.add_argument("--eta", type=float, default=0.5)
    sp.add_argument("--s", type=float, nargs="+", required=True, help="wave times")
    sp.add_argument("--oracle", action="store_true", help="also print the surface-quadrature value")

    sp = sub.add_parser("flux-gen", help="write the time-reversed boundary flux for one tau")
    _add_common(sp)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--n-t", type=int, default=None, help="time levels (default: config)")

    sp = sub.add_parser("forward", help="forward heat solve for one tau")
    _add_common(sp)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--field", action="store_true", help="also write the (t, r) field in binary")

    sp = sub.add_parser("indicator-sweep", help="solve and evaluate the indicator over the tau list")
    _add_common(sp)
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers, one per tau")

    sp = sub.add_parser("extract", help="fit a sweep CSV and write the enclosure report")
    _add_common(sp)
    sp.add_argument("--csv", default=None, help="sweep CSV (default: OUT/sweep.csv)")

    sub.add_parser("verify-prop31", help="run the volume-potential identity suite")
    sub.add_parser("verify-all", help="run every oracle suite")
    sp = sub.add_parser("verify", help="run one oracle suite")
    sp.add_argument("suite", choices=["prop31", "kirchhoff", "forms", "decomposition", "all"])
    return ap


def cmd_wave_probe(args) -> int:
    probe = ProbeBall(args.p, args.eta)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["s", "v", "v_s"] + (["v_oracle"] if args.oracle else []))
    for s in args.s:
        v, vs = kirchhoff_eval(args.x, s, probe)
        row = [repr(s), repr(v), repr(vs)]
        if args.oracle:
            row.append(repr(float(kirchhoff_oracle(args.x, s, probe))))
        w.writerow(row)
    return 0


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_flux_gen(args) -> int:
    cfg = load_config(args.config, strict=args.strict)
    from .heat import time_grid

    T = cfg.disc.T
    t = time_grid(args.tau, T, cfg.probe.eta, args.n_t or cfg.disc.n_t)
    # any point of the outer sphere: the flux is the same everywhere on it
    x = cfg.body.center + np.array([cfg.body.R_omega, 0.0, 0.0])
    f = flux_trace(x, x - cfg.body.center, t, T, args.tau, cfg.probe)
    path = _out_dir(args) / f"flux_tau{args.tau:g}.csv"
    np.savetxt(path, np.column_stack([t, f]), delimiter=",", header="t,f", comments="", fmt="%.17g")
    print(path)
    return 0


def cmd_forward(args) -> int:
    cfg = load_config(args.config, strict=args.strict)
    run = solve_radial_heat(cfg.body, cfg.probe, cfg.disc, args.tau, method=cfg.method, keep_field=args.field)
    out = _out_dir(args)
    path = out / f"boundary_tau{args.tau:g}.csv"
    np.savetxt(path, np.column_stack([run.t_grid, run.boundary_trace, run.flux]), delimiter=",",
               header="t,u,f", comments="", fmt="%.17g")
    print(path)
    if args.field:
        fpath = out / f"field_tau{args.tau:g}.bin"
        write_field(fpath, run.r_grid, run.t_grid, run.u)
        print(fpath)
    log.info("scaled transforms: w=%.6e  d_nu w* (flux)=%.6e", run.laplace_boundary, flux_laplace(run))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, strict=args.strict)
    res = execute(cfg, args.out, jobs=args.jobs)
    for s in res["samples"]:
        print(f"tau={s.tau:8.2f}  I_scaled={s.I_scaled: .6e}  {s.wall_time:6.2f}s")
    if res["report"]:
        print(f"L_hat={res['report']['L_hat']:.6f}  R_D_hat={res['report']['R_D_hat']:.6f}")
    return 0


def cmd_extract(args) -> int:
    cfg = load_config(args.config, strict=args.strict)
    csv_path = Path(args.csv) if args.csv else Path(args.out) / "sweep.csv"
    taus, logs = samples_to_arrays(read_csv(csv_path))
    report = make_report(cfg, taus, logs)
    path = _out_dir(args) / "report.json"
    write_json_atomic(report, path)
    print(json.dumps({k: report[k] for k in ("L_hat", "R_D_hat", "classifiers")}, indent=2))
    return 0


def cmd_verify(selector: str) -> int:
    results = run_verifications(selector)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "wave-probe": cmd_wave_probe,
        "flux-gen": cmd_flux_gen,
        "forward": cmd_forward,
        "indicator-sweep": cmd_sweep,
        "extract": cmd_extract,
        "verify-prop31": lambda a: cmd_verify("prop31"),
        "verify-all": lambda a: cmd_verify("all"),
        "verify": lambda a: cmd_verify(a.suite),
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericRangeError as exc:
        print(f"numeric range error: {exc}", file=sys.stderr)
        return 3
    except (EstimationError, HeatSolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
