"""Command-line entry point: ``homtoc {norm,time,curve,homog,sweep,verify}``.

Exit status: 0 success, 1 solver non-convergence or failing residual,
2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    OUTPUT_ENV,
    ConfigError,
    build_problem,
    load_config,
    parse_config,
    settings_of,
    sweep_config_of,
    tolerances_of,
)
from .control import (
    minimal_norm_curve,
    norm_optimal,
    solution_from_dict,
    solution_to_dict,
    time_optimal,
    verify_solution,
)
from .homogenize import PeriodicCoefficient1D, homogenized_coefficient_1d, reaction_family, resolvent_convergence_report
from .spectral import Mesh1D, state_preset
from .sweep import build_family, emit_report, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("homtoc")


def _residual_table(report, tol, bound, r, out):
    rows = [
        ("bang_bang", report.bang_bang_dev, tol.bang_bang * bound),
        ("transversality", report.transversality_res, tol.transversality * r),
        ("max_principle", report.max_principle_res, tol.max_principle),
        ("duality", report.duality_gap, tol.duality * max(1.0, bound * bound)),
        ("inverse_relation", report.inverse_relation_res, tol.inverse_relation),
    ]
    print(f"  {'residual':<18}{'value':>12}{'limit':>12}  status", file=out)
    for name, value, limit in rows:
        status = "PASS" if report.checks[name] else "FAIL"
        print(f"  {name:<18}{value:>12.3e}{limit:>12.3e}  {status}", file=out)


def _write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _solve(args, cfg, kind):
    problem = build_problem(cfg)
    settings = settings_of(cfg)
    tol = tolerances_of(cfg)
    if kind == "time":
        M = args.M if args.M is not None else cfg.time.M
        if M is None:
            raise ConfigError("time needs a bound: pass --M or set [time] M")
        sol = time_optimal(problem, M, settings)
        print(f"time-optimal control, M = {M:g}")
        print(f"  tau*      = {sol.tau_star:.10f}")
        print(f"  tau_hat   = {sol.tau_hat:.10f}")
        print(f"  N*(tau*)  = {sol.N_at_tau:.10f}")
    else:
        tau = args.tau if args.tau is not None else cfg.norm.tau
        if tau is None:
            raise ConfigError("norm needs a horizon: pass --tau or set [norm] tau")
        sol = norm_optimal(problem, tau, settings)
        print(f"norm-optimal control, tau = {tau:g}")
        print(f"  N*(tau)   = {sol.N_star:.10f}")
        print(f"  V*(tau)   = {sol.V_star:.10f}")
    report = verify_solution(problem, sol, settings, tol)
    _residual_table(report, tol, sol.bound, problem.r, sys.stdout)
    doc = solution_to_dict(sol, {"config": cfg.as_dict(), "verify": report.as_dict()})
    path = cfg.output_dir / f"{kind}_solution.json"
    _write_json(path, doc)
    print(f"  wrote {path}")
    ok = sol.converged and report.passed
    if not sol.converged:
        print("  solver did not converge", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_norm(args, cfg):
    return _solve(args, cfg, "norm")


def cmd_time(args, cfg):
    return _solve(args, cfg, "time")


def cmd_curve(args, cfg):
    taus = args.tau_list if args.tau_list else cfg.curve.taus
    if not taus:
        raise ConfigError("curve needs horizons: pass --tau-list or set [curve] taus")
    problem = build_problem(cfg)
    rows = minimal_norm_curve(problem, sorted(taus), settings_of(cfg))
    path = cfg.output_dir / "curve.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "N_star"])
        for tau, n in rows:
            w.writerow([f"{tau:.17g}", f"{n:.17g}"])
    print(f"  {'tau':>12}  {'N*(tau)':>14}")
    for tau, n in rows:
        print(f"  {tau:>12.6g}  {n:>14.8f}")
    print(f"  wrote {path}")
    values = [n for _, n in rows]
    if any(b >= a for a, b in zip(values, values[1:])):
        print("minimal norm curve is not strictly decreasing", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_homog(args, cfg):
    p = cfg.problem
    mesh = Mesh1D(p.n_interior)
    if p.operator == "modal":
        raise ConfigError("homog needs problem.operator = 'diffusion' or 'reaction'")
    if p.operator == "diffusion":
        base = PeriodicCoefficient1D(p.coefficient, dict(p.coefficient_params))
        a0 = homogenized_coefficient_1d(base)
        y = np.arange(4096) / 4096
        print(f"periodic coefficient '{p.coefficient}' {dict(p.coefficient_params)}")
        print(f"  bounds           = [{base.bounds[0]:.10g}, {base.bounds[1]:.10g}]")
        print(f"  arithmetic mean  = {float(np.mean(base(y))):.10f}")
        print(f"  a_0 (harmonic)   = {a0:.10f}")
        if not base.smooth:
            print("  note: this preset is not W^{2,inf}; it lies outside the convergence theory")
    else:
        fam = reaction_family(p.coefficient, cfg.sweep.epsilons, mesh, dict(p.coefficient_params))
        print(f"reaction family '{p.coefficient}' {dict(p.coefficient_params)}")
        for eps, d in zip(cfg.sweep.epsilons, fam.distances):
            print(f"  eps = {eps:<10g} ||a_eps - a_0||_inf = {d:.6e}")
    sweep_cfg = sweep_config_of(cfg)
    ops, op0, _ = build_family(sweep_cfg, mesh)
    probe = state_preset(mesh, p.psi, **p.psi_params)
    rows = resolvent_convergence_report(ops, op0, [probe], sweep_cfg.epsilons)
    print("  resolvent distance ||A_eps^-1 psi - A_0^-1 psi||")
    for eps, d in rows:
        print(f"    eps = {eps:<10g} {d:.6e}")
    return EXIT_OK


def cmd_sweep(args, cfg):
    sweep_cfg = sweep_config_of(cfg)
    records, summary = run_sweep(sweep_cfg)
    paths = emit_report(records, sweep_cfg, cfg.output_dir, summary)
    print(f"sweep ({sweep_cfg.family}, config {sweep_cfg.config_hash()}): tau*_0 = {summary['tau_star_0']:.10f}")
    print(f"  {'eps':>10} {'tau*':>14} {'|tau err|':>11} {'L2':>11} {'Linf(trunc)':>11} {'semigroup':>11} conv")
    for rec in records:
        vals = [rec.tau_star, rec.tau_err, rec.ctrl_l2, rec.ctrl_linf_trunc, rec.semigroup_dist]
        if any(v is None for v in vals):
            print(f"  {rec.epsilon:>10g}  failed: {rec.residuals.get('error')}")
            continue
        print(f"  {rec.epsilon:>10g} {vals[0]:>14.10f} {vals[1]:>11.3e} {vals[2]:>11.3e} {vals[3]:>11.3e} "
              f"{vals[4]:>11.3e} {'yes' if rec.converged else 'NO'}")
    for path in paths:
        print(f"  wrote {path}")
    return EXIT_OK if all(r.converged for r in records) else EXIT_FAIL


def cmd_verify(args, cfg_unused):
    path = Path(args.solution)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read solution file {path}: {exc}") from exc
    if "config" not in doc:
        raise ConfigError(f"{path} carries no embedded config")
    cfg = parse_config(doc["config"])
    problem = build_problem(cfg)
    sol = solution_from_dict(doc, problem.op.mesh.h)
    tol = tolerances_of(cfg)
    report = verify_solution(problem, sol, settings_of(cfg), tol)
    print(f"verify {path} ({doc['kind']}-optimal solution)")
    _residual_table(report, tol, sol.bound, problem.r, sys.stdout)
    if not report.passed:
        print(f"FAIL: {', '.join(report.failing())}", file=sys.stderr)
        return EXIT_FAIL
    print("all residuals within tolerance")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="homtoc",
        description="Time- and norm-optimal control of 1-D parabolic systems with oscillating coefficients.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_, func):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        p.set_defaults(func=func)
        if name != "verify":
            p.add_argument("-c", "--config", default="homtoc.toml", help="TOML run configuration")
        return p

    p = add("norm", "norm-optimal control for a fixed horizon", cmd_norm)
    p.add_argument("--tau", type=float, default=None, help="horizon; overrides [norm] tau")
    p = add("time", "time-optimal control for a control bound", cmd_time)
    p.add_argument("--M", type=float, default=None, help="control bound; overrides [time] M")
    p = add("curve", "minimal norm N*(tau) over a list of horizons", cmd_curve)
    p.add_argument("--tau-list", type=float, nargs="+", default=None, help="horizons; override [curve] taus")
    add("homog", "homogenized coefficient and resolvent convergence", cmd_homog)
    add("sweep", "epsilon sweep against the homogenized problem", cmd_sweep)
    p = add("verify", "recompute optimality residuals of a solution file", cmd_verify)
    p.add_argument("solution", help="solution JSON written by 'norm' or 'time'")
    parser.epilog = f"The {OUTPUT_ENV} environment variable overrides the output directory."
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = None if args.command == "verify" else load_config(args.config)
        if cfg is not None:
            print(f"# config {json.dumps(cfg.as_dict(), sort_keys=True)}", file=sys.stderr)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
