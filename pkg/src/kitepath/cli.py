"""Command-line front end.

    kitepath evaluate|optimize|sweep|phase-average --config FILE [--shape ellipse|eight]
             [--r M] [--plots] [--out DIR] [--format csv|json]

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible input,
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import KitepathError, SweepAborted
from .geometry import LissajousPath, path_profile
from .model import loyd_power, profile_power
from .optimizer import build_problem, kappa_limit, solve
from .sweep import fit_splines, phase_average, run_sweep

OUT_ENV = "KITEPATH_OUT"


def fmt(value) -> str:
    """Nine significant digits, '.' decimal point, no grouping."""
    return f"{value:.9g}"


def _num(value) -> float:
    return float(fmt(value))


@dataclass(frozen=True)
class OutputRecord:
    r_m: float
    beta0_rad: float
    dbeta_rad: float
    dphi_rad: float
    p_avg_w: float
    p_loyd_w: float
    loyd_ratio: float
    max_kappa: float
    active_constraints: str
    iterations: int
    converged: bool

    @classmethod
    def from_solution(cls, sol) -> "OutputRecord":
        return cls(
            r_m=sol.r,
            beta0_rad=float(sol.x[0]),
            dbeta_rad=float(sol.x[1]),
            dphi_rad=float(sol.x[2]),
            p_avg_w=sol.p_avg,
            p_loyd_w=sol.p_loyd,
            loyd_ratio=sol.p_avg / sol.p_loyd,
            max_kappa=sol.max_kappa_on_grid,
            active_constraints=";".join(sorted(sol.active_constraints)),
            iterations=sol.iterations,
            converged=sol.converged,
        )

    @staticmethod
    def columns() -> list:
        return [f.name for f in fields(OutputRecord)]

    def as_dict(self) -> dict:
        return {k: _cell_json(getattr(self, k)) for k in self.columns()}

    def as_row(self) -> list:
        return [_cell_text(getattr(self, k)) for k in self.columns()]


def _cell_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _cell_json(v):
    if isinstance(v, bool) or not isinstance(v, float):
        return v
    return _num(v)


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(OutputRecord.columns())
    for rec in records:
        w.writerow(rec.as_row())
    return buf.getvalue()


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(report))
    w.writerow([_cell_text(v) for v in report.values()])
    return buf.getvalue()


def report_json(report) -> str:
    if isinstance(report, dict):
        report = {k: _cell_json(v) for k, v in report.items()}
    return json.dumps(report, indent=2) + "\n"


def cmd_evaluate(config, x, r: float) -> dict:
    """Average power and curvature diagnostics of a given path at tether length ``r``."""
    path = LissajousPath.from_vector(x, config.shape_ratio)
    env, kite = config.environment, config.kite
    prof = path_profile(path, r, config.grid_n)
    power, roll = profile_power(prof, env, kite)
    p_avg = float(np.mean(power))
    p_loyd = loyd_power(env, kite)
    return {
        "r_m": float(r),
        "beta0_rad": path.beta0,
        "dbeta_rad": path.dbeta,
        "dphi_rad": path.dphi,
        "p_avg_w": p_avg,
        "p_loyd_w": p_loyd,
        "loyd_ratio": p_avg / p_loyd,
        "max_kappa": float(prof.kappa_geo.max()),
        "kappa_max": kappa_limit(config.phi_max, kite, env),
        "max_roll_deg": math.degrees(float(np.max(roll))),
    }


def cmd_optimize(config, r: float) -> OutputRecord:
    return OutputRecord.from_solution(solve(build_problem(r, config)))


def write_sweep_outputs(sweep, directory: Path, formats=("csv",), plots=False) -> list:
    directory.mkdir(parents=True, exist_ok=True)
    records = [OutputRecord.from_solution(s) for s in sweep.solutions]
    written = []
    target = directory / "sweep.csv"
    target.write_text(records_csv(records))
    written.append(target)
    if "json" in formats:
        target = directory / "sweep.json"
        target.write_text(report_json([r.as_dict() for r in records]))
        written.append(target)
    splines = None
    if len(sweep.grid) >= 4:
        splines = fit_splines(sweep)
        target = directory / "splines.json"
        target.write_text(json.dumps(splines.to_json(), indent=2) + "\n")
        written.append(target)
    if plots and sweep.solutions:
        from .plots import write_all

        written += write_all(sweep, splines, directory)
    return written


def cmd_sweep(config, directory: Path, formats=("csv",), plots=False) -> list:
    """Run the sweep and write its files; partial files are written before re-raising a failure."""
    try:
        sweep = run_sweep(config)
    except SweepAborted as exc:
        write_sweep_outputs(exc.partial, directory, formats, plots)
        raise
    return write_sweep_outputs(sweep, directory, formats, plots)


def cmd_phase_average(config, r_lo: float, r_hi: float, n_r: int = 21) -> dict:
    sweep = run_sweep(config)
    p = phase_average(fit_splines(sweep), r_lo, r_hi, config.environment, config.kite, n_r, config.grid_n)
    p_loyd = loyd_power(config.environment, config.kite)
    return {"r_lo_m": r_lo, "r_hi_m": r_hi, "n_r": n_r, "p_phase_w": p, "p_loyd_w": p_loyd, "loyd_ratio": p / p_loyd}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (defaults apply when omitted)")
    common.add_argument("--shape", choices=sorted(cfgmod.SHAPES), help="override the configured path shape")
    common.add_argument("--r", type=float, help="tether length [m]")
    common.add_argument("--plots", action="store_true", help="also write SVG figures")
    common.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or the config)")
    common.add_argument("--format", choices=("csv", "json"), help="report format")

    parser = _Parser(prog="kitepath", description="Power-maximizing Lissajous paths for pumping kites.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ev = sub.add_parser("evaluate", parents=[common], help="evaluate a given path")
    ev.add_argument("--beta0", type=float, required=True, help="central elevation [deg]")
    ev.add_argument("--dbeta", type=float, required=True, help="elevation half-range [deg]")
    ev.add_argument("--dphi", type=float, required=True, help="azimuth half-range [deg]")
    sub.add_parser("optimize", parents=[common], help="optimize the path for one tether length")
    sub.add_parser("sweep", parents=[common], help="warm-started sweep over tether lengths")
    pa = sub.add_parser("phase-average", parents=[common], help="average power over a reel-out phase")
    pa.add_argument("--r-lo", type=float, help="phase start tether length [m]")
    pa.add_argument("--r-hi", type=float, help="phase end tether length [m]")
    pa.add_argument("--n-r", type=int, default=21, help="quadrature points over tether length")
    return parser


def _load_config(args):
    text = args.config.read_text() if args.config else "{}"
    config = cfgmod.parse_config(text)
    if args.shape:
        config = replace(config, shape=args.shape)
    return config


def _out_dir(args, config) -> Path:
    base = args.out or os.environ.get(OUT_ENV) or config.output.directory or "."
    return Path(base)


def _emit(args, config, name: str, report) -> None:
    fmt_ = args.format or ("json" if "json" in config.output.formats else "csv")
    if isinstance(report, OutputRecord):
        text = records_csv([report]) if fmt_ == "csv" else report_json(report.as_dict())
    else:
        text = report_csv(report) if fmt_ == "csv" else report_json(report)
    sys.stdout.write(text)
    if args.out or os.environ.get(OUT_ENV):
        directory = _out_dir(args, config)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{name}.{fmt_}").write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        r = args.r if args.r is not None else config.sweep.r_min
        if args.command == "evaluate":
            x = np.radians([args.beta0, args.dbeta, args.dphi])
            _emit(args, config, "evaluate", cmd_evaluate(config, x, r))
        elif args.command == "optimize":
            rec = cmd_optimize(config, r)
            _emit(args, config, "optimize", rec)
            if not rec.converged:
                print(f"kitepath: no converged solution at r={r:g} m", file=sys.stderr)
                return 3
        elif args.command == "sweep":
            directory = _out_dir(args, config) / config.shape
            formats = set(config.output.formats) | ({args.format} if args.format else set())
            plots = args.plots or "svg" in formats
            for path in cmd_sweep(config, directory, formats, plots):
                print(path)
        else:
            r_lo = args.r_lo if args.r_lo is not None else config.sweep.r_min
            r_hi = args.r_hi if args.r_hi is not None else config.sweep.r_max
            _emit(args, config, "phase_average", cmd_phase_average(config, r_lo, r_hi, args.n_r))
    except OSError as exc:
        print(f"kitepath: {exc}", file=sys.stderr)
        return 1
    except KitepathError as exc:
        print(f"kitepath: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
