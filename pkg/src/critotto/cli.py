"""Command-line front end: ``critotto {cycle,sweep,taumin,analytic}``.

Exit codes: 0 success, 2 usage error, 3 contradictory physical parameters,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
import warnings
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from . import __version__
from .analysis import (
    SweepSpec,
    analytic_excess_energy,
    analytic_excess_energy_continuum,
    fit_overlay_prefactor,
    fit_power_law,
    log_grid,
    power_curve_at_tau_min,
    run_sweep,
)
from .cycle import ConfigError, CycleConfig, run_cycle
from .output import (
    ANALYTIC_COLUMNS,
    CYCLE_COLUMNS,
    FIT_COLUMNS,
    RESULT_COLUMNS,
    TAUMIN_COLUMNS,
    csv_text,
    cycle_row,
    result_fields,
    write_outputs,
)
from .quantum import SCHEMES, IntegratorOptions
from .svg import svg_from_csv_text

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "CRITOTTO_THREADS"

BASE_KEYS = ("L", "h1", "h2", "Th", "Tc", "tau1", "tau2", "dt_max", "substeps_min", "scheme",
             "power_denominator", "tau_total")
INTEGRATOR_DEFAULTS = {"dt_max": 1e-3, "substeps_min": 100,
                       "scheme": "exact_midpoint_exponential", "power_denominator": "tau2_only",
                       "tau_total": None}


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """``log:lo:hi:n`` or ``list:v1,v2,...``."""
    try:
        kind, _, rest = text.partition(":")
        if kind == "log":
            lo, hi, n = rest.split(":")
            values = log_grid(float(lo), float(hi), int(n)).tolist()
        elif kind == "list":
            values = [float(v) for v in rest.split(",") if v.strip()]
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use log:lo:hi:n or list:v1,v2,...") from None
    if not values:
        raise UsageError(f"grid {text!r} is empty")
    if any(b <= a for a, b in zip(values, values[1:])) or min(values) <= 0:
        raise UsageError(f"grid {text!r} must be positive and strictly increasing")
    return values


def parse_window(text: Optional[str]) -> Optional[tuple[float, float]]:
    if text is None:
        return None
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad window {text!r}; use lo:hi") from None
    if not 0 < lo < hi:
        raise UsageError(f"window {text!r} must satisfy 0 < lo < hi")
    return lo, hi


def _base_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("cycle parameters (override --config)")
    g.add_argument("--config", type=Path, help="JSON file with default parameter values")
    g.add_argument("--L", type=int)
    g.add_argument("--h1", type=float)
    g.add_argument("--h2", type=float)
    g.add_argument("--Th", type=float, help="hot bath temperature")
    g.add_argument("--Tc", type=float, help="cold bath temperature")
    g.add_argument("--tau1", type=float, help="B->C ramp duration")
    g.add_argument("--tau2", type=float, help="D->A ramp duration")
    g.add_argument("--dt-max", dest="dt_max", type=float)
    g.add_argument("--substeps-min", dest="substeps_min", type=int)
    g.add_argument("--scheme", choices=SCHEMES)
    g.add_argument("--power-denominator", dest="power_denominator",
                   choices=("tau2_only", "tau1_plus_tau2", "explicit"))
    g.add_argument("--tau-total", dest="tau_total", type=float)
    g.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    return p


def build_parser() -> argparse.ArgumentParser:
    base = _base_parser()
    parser = argparse.ArgumentParser(prog="critotto", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cycle", parents=[base], help="run one Otto cycle")
    c.add_argument("--out", type=Path, default=Path("results/cycle/cycle.csv"))

    s = sub.add_parser("sweep", parents=[base], help="sweep tau2 or Tc and fit W - W_tilde")
    s.add_argument("--axis", choices=("tau2", "Tc"), required=True)
    s.add_argument("--grid", required=True)
    s.add_argument("--fit-window", dest="fit_window")
    s.add_argument("--plot", help="SVG file name written into the output directory")
    s.add_argument("--out-dir", type=Path, default=Path("results/sweep"))

    t = sub.add_parser("taumin", parents=[base], help="tau_min and |P| = |W_tilde|/tau_min vs Tc")
    t.add_argument("--Tc-grid", dest="Tc_grid", required=True)
    t.add_argument("--tau2-grid", dest="tau2_grid", default="log:1:10000:41")
    t.add_argument("--epsilon", type=float, default=2.0)
    t.add_argument("--fit-window", dest="fit_window")
    t.add_argument("--plot", action="store_true", help="write taumin.svg and power.svg")
    t.add_argument("--out-dir", type=Path, default=Path("results/taumin"))

    a = sub.add_parser("analytic", parents=[base], help="LZ x tanh overlay against the simulation")
    grids = a.add_mutually_exclusive_group(required=True)
    grids.add_argument("--Tc-grid", dest="Tc_grid")
    grids.add_argument("--tau2-grid", dest="tau2_grid")
    a.add_argument("--fit-window", dest="fit_window")
    a.add_argument("--out-dir", type=Path, default=Path("results/analytic"))
    return parser


def resolve_base(args, required: tuple[str, ...]) -> dict:
    values = dict(INTEGRATOR_DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(BASE_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in BASE_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    missing = [k for k in required if values.get(k) is None]
    if missing:
        raise UsageError("missing required parameters: " + ", ".join(f"--{k}" for k in missing))
    return values


def make_config(v: dict, **overrides) -> CycleConfig:
    v = {**v, **overrides}
    try:
        opts = IntegratorOptions(float(v["dt_max"]), int(v["substeps_min"]), v["scheme"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return CycleConfig(L=v["L"], h1=v["h1"], h2=v["h2"], T_H=v["Th"], T_C=v["Tc"],
                       tau1=v["tau1"], tau2=v["tau2"], integrator=opts,
                       power_denominator=v["power_denominator"], tau_total=v["tau_total"])


def resolve_threads(args) -> tuple[int, str]:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads, "flag"
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env)), f"env {THREADS_ENV}"
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return 1, "default"


def _fit_row(name: str, fit) -> list:
    if fit is None:
        return [name, None, None, None, None, None, 0]
    return [name, fit.slope, fit.intercept, fit.r_squared, fit.window[0], fit.window[1],
            fit.n_points]


def _try_fit(xs, ys, window):
    pairs = [(x, y) for x, y in zip(xs, ys) if y is not None and math.isfinite(y) and y > 0]
    try:
        return fit_power_law([p[0] for p in pairs], [p[1] for p in pairs], window)
    except ValueError as exc:
        warnings.warn(f"power-law fit unavailable: {exc}")
        return None


def _sections(command: str, argv: list[str], values: dict, threads: tuple[int, str],
              started: float, extra: Optional[dict] = None) -> dict:
    sections = {
        "run": {"command": command, "argv": " ".join(argv), "tool": "critotto",
                "tool_version": __version__, "python": platform.python_version(),
                "numpy": np.__version__, "numba": numba.__version__,
                "threads": threads[0], "threads_source": threads[1],
                "wall_clock_s": round(time.perf_counter() - started, 3)},
        "config": {k: values.get(k) for k in BASE_KEYS},
        "units": {"hbar": 1, "k_B": 1, "J": 1},
    }
    if extra:
        sections.update(extra)
    return sections


def cmd_cycle(args, argv, started) -> int:
    values = resolve_base(args, ("L", "h1", "h2", "Th", "Tc", "tau1", "tau2"))
    cfg = make_config(values)
    threads = resolve_threads(args)
    r = run_cycle(cfg)
    print(f"cycle  L={cfg.L} h1={cfg.h1} h2={cfg.h2} T_H={cfg.T_H} T_C={cfg.T_C} "
          f"tau1={cfg.tau1} tau2={cfg.tau2}")
    for name in ("E_A", "E_B", "E_C", "E_D", "Q_in", "Q_out", "W", "W_tilde"):
        print(f"  {name:<8} {getattr(r, name): .10g}")
    print(f"  {'W-W~':<8} {r.excess: .10g}   (E_A excess {r.E_A_excess:.6g}, "
          f"E_C residual {r.E_C_excess:.6g})")
    print(f"  {'eta':<8} {'n/a' if r.eta is None else format(r.eta, '.10g')}")
    print(f"  {'P':<8} {r.P: .10g}")
    print(f"  regime   {r.regime}")
    text = csv_text(CYCLE_COLUMNS, [cycle_row(cfg, r)])
    write_outputs(args.out.parent, {args.out.name: text},
                  _sections("cycle", argv, values, threads, started))
    return EXIT_OK


def cmd_sweep(args, argv, started) -> int:
    axis_key = "Tc" if args.axis == "Tc" else "tau2"
    grid = parse_grid(args.grid)
    window = parse_window(args.fit_window)
    required = tuple(k for k in ("L", "h1", "h2", "Th", "Tc", "tau1", "tau2") if k != axis_key)
    values = resolve_base(args, required)
    threads = resolve_threads(args)
    base = make_config(values, **{axis_key: grid[0]})
    spec = SweepSpec(base, "T_C" if args.axis == "Tc" else "tau2", grid)
    # check every grid point up front so a bad value fails before any work
    spec.points()
    table = run_sweep(spec, threads[0])

    col = "T_C" if args.axis == "Tc" else "tau2"
    rows = [[row.params[col]] + result_fields(row.result) for row in table.rows]
    sweep_csv = csv_text((col,) + RESULT_COLUMNS, rows)
    xs = table.axis_values().tolist()
    ys = [r.result.excess if r.result else None for r in table.rows]
    fit = _try_fit(xs, ys, window)
    fit_csv = csv_text(FIT_COLUMNS, [_fit_row("excess", fit)])
    files = {"sweep.csv": sweep_csv, "fit.csv": fit_csv}
    failures = [r for r in table.rows if r.error]
    extra = {"sweep": {"axis": col, "grid": args.grid, "points": len(grid)},
             "fit": {"quantity": "W - W_tilde", "x": col,
                     "window": "" if fit is None else f"{fit.window[0]!r}:{fit.window[1]!r}",
                     "slope": None if fit is None else fit.slope,
                     "r_squared": None if fit is None else fit.r_squared}}
    if failures:
        extra["errors"] = {f"{col}={r.params[col]!r}": r.error for r in failures}

    out_dir = args.out_dir
    if args.plot:
        files[Path(args.plot).name] = svg_from_csv_text(
            sweep_csv, col, "excess", fit.window if fit else None,
            title=f"W - W_tilde vs {col}", note=_note(base))
    write_outputs(out_dir, files, _sections("sweep", argv, values, threads, started, extra))

    for line in sweep_csv.splitlines()[: 1]:
        print(line)
    print(f"{len(table.rows)} points written to {out_dir / 'sweep.csv'}")
    if fit:
        print(f"fit W - W_tilde ~ {col}^slope: slope={fit.slope:.6g} R2={fit.r_squared:.6g} "
              f"window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}] n={fit.n_points}")
    if failures:
        print(f"warning: {len(failures)} sweep points failed", file=sys.stderr)
        if len(failures) == len(table.rows):
            return EXIT_NUMERIC
    return EXIT_OK


def _note(cfg: CycleConfig) -> str:
    return (f"L={cfg.L} h1={cfg.h1} h2={cfg.h2} T_H={cfg.T_H} tau1={cfg.tau1} "
            f"dt_max={cfg.integrator.dt_max}")


def cmd_taumin(args, argv, started) -> int:
    tc_grid = parse_grid(args.Tc_grid)
    tau_grid = parse_grid(args.tau2_grid)
    window = parse_window(args.fit_window)
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    values = resolve_base(args, ("L", "h1", "h2", "Th", "tau1"))
    threads = resolve_threads(args)
    base = make_config(values, Tc=tc_grid[0], tau2=tau_grid[0])
    for tc in tc_grid:
        base.with_(T_C=tc)  # validate T_C against T_H before any work
    curve = power_curve_at_tau_min(base, tc_grid, args.epsilon, tau_grid, threads[0])

    rows = [[p.T_C, p.tau_min_grid, p.tau_min, p.status, abs(p.W_tilde), p.power]
            for p in curve.points]
    taumin_csv = csv_text(TAUMIN_COLUMNS, rows)
    found = [p for p in curve.points if p.status == "found"]
    fit = _try_fit([p.T_C for p in found], [p.tau_min for p in found], window)
    fit_grid = _try_fit([p.T_C for p in found], [p.tau_min_grid for p in found], window)
    files = {"taumin.csv": taumin_csv,
             "fit.csv": csv_text(FIT_COLUMNS, [_fit_row("tau_min_refined", fit),
                                               _fit_row("tau_min_grid", fit_grid)])}
    censored = [p for p in curve.points if p.status == "left_censored"]
    missing = [p for p in curve.points if p.status == "not_found"]
    best = curve.points[curve.argmax()] if not np.all(np.isnan(curve.power)) else None
    extra = {"taumin": {"epsilon": args.epsilon, "tau2_grid": args.tau2_grid,
                        "left_censored": len(censored), "not_found": len(missing),
                        "argmax_T_C": None if best is None else best.T_C,
                        "interior_maximum": best is not None and curve.has_interior_maximum(),
                        "fit_window": "" if fit is None else f"{fit.window[0]!r}:{fit.window[1]!r}"}}
    out_dir = args.out_dir
    if args.plot:
        files["taumin.svg"] = svg_from_csv_text(taumin_csv, "T_C", "tau_min_refined",
                                           fit.window if fit else None,
                                           title=f"tau_min vs T_C (epsilon={args.epsilon})",
                                           note=_note(base))
        files["power.svg"] = svg_from_csv_text(taumin_csv, "T_C", "P_abs",
                                          title="|P| = |W_tilde| / tau_min", note=_note(base))
    write_outputs(out_dir, files, _sections("taumin", argv, values, threads, started, extra))

    print(taumin_csv, end="")
    if fit:
        print(f"fit tau_min ~ T_C^slope: slope={fit.slope:.6g} R2={fit.r_squared:.6g} "
              f"window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}]")
    if best is not None:
        where = "interior" if curve.has_interior_maximum() else "endpoint"
        print(f"max |P| = {best.power:.6g} at T_C = {best.T_C:.6g} ({where})")
    if censored:
        print(f"warning: {len(censored)} of {len(curve.points)} points left-censored at "
              f"tau2 = {tau_grid[0]}", file=sys.stderr)
    if missing:
        print(f"warning: no crossing inside the tau2 grid for {len(missing)} points",
              file=sys.stderr)
    return EXIT_OK


def cmd_analytic(args, argv, started) -> int:
    window = parse_window(args.fit_window)
    if args.Tc_grid is not None:
        grid, key, col = parse_grid(args.Tc_grid), "Tc", "T_C"
    else:
        grid, key, col = parse_grid(args.tau2_grid), "tau2", "tau2"
    required = tuple(k for k in ("L", "h1", "h2", "Th", "Tc", "tau1", "tau2") if k != key)
    values = resolve_base(args, required)
    threads = resolve_threads(args)
    base = make_config(values, **{key: grid[0]})
    spec = SweepSpec(base, "T_C" if key == "Tc" else "tau2", grid)
    table = run_sweep(spec, threads[0])
    failures = [r for r in table.rows if r.error]
    if failures:
        raise FloatingPointError(failures[0].error)

    numeric = [r.result.excess for r in table.rows]
    cfgs = [r.config for r in table.rows]
    ana = [analytic_excess_energy(c) for c in cfgs]
    cont = [analytic_excess_energy_continuum(c) for c in cfgs]
    xs = np.array(grid)
    sel = np.ones(len(grid), bool) if window is None else (xs >= window[0]) & (xs <= window[1])
    if not sel.any():
        raise UsageError("fit window contains no grid points")
    overlay = fit_overlay_prefactor(np.array(ana)[sel], np.array(numeric)[sel])
    scaled = [overlay.prefactor * a for a in ana]
    dev = [abs(s - n) / abs(n) for s, n in zip(scaled, numeric)]
    rows = [[x, n, a, c, s, d] for x, n, a, c, s, d in zip(grid, numeric, ana, cont, scaled, dev)]
    text = csv_text(ANALYTIC_COLUMNS, rows)
    extra = {"sweep": {"axis": col, "grid": args.Tc_grid or args.tau2_grid, "points": len(grid)},
             "overlay": {"axis": col, "prefactor": overlay.prefactor,
                         "fit_window": "all" if window is None else f"{window[0]!r}:{window[1]!r}",
                         "k_cutoff": "pi/2"}}
    write_outputs(args.out_dir, {"analytic.csv": text},
                  _sections("analytic", argv, values, threads, started, extra))
    print(text, end="")
    print(f"fitted prefactor = {overlay.prefactor:.6g}; max relative deviation = {max(dev):.4g}")
    return EXIT_OK


COMMANDS = {"cycle": cmd_cycle, "sweep": cmd_sweep, "taumin": cmd_taumin, "analytic": cmd_analytic}


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        return COMMANDS[args.command](args, argv, started)
    except UsageError as exc:
        print(f"critotto {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"critotto {args.command}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"critotto {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
