"""Command-line front end.

Exit codes
----------
check-matching       0 pass, 1 matching fails, 2 config/precondition error
simulate             0 monitor passes, 1 monitor failure (convergence is
                     reported in the summary but does not set the code),
                     2 config/precondition error, 3 synthesis refused
verify-equivalence   0 pass, 1 violation, 2 config error, 3 synthesis refused
count-equations      0, or 2 on invalid n, m
list-models          0
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .errors import DomainError, MatchingError, RankDeficiencyError, ShapestabError
from .matching import count_equations, matching_report
from .model import consistency_check, list_models, model_defaults, validate_equilibrium
from .report import jsonable
from .simulator import convergence_check, integrate, lyapunov_monitor, write_csv
from .synthesis import (ShapingProblem, control_CH, control_LCB, single_actuator_control,
                        verify_equivalence)
from .tensor_core import CotangentState

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REFUSED = 0, 1, 2, 3


def _dump(obj, path=None):
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _err(msg):
    sys.stderr.write(f"shapestab: {msg}\n")


def _preflight(cfg: RunConfig):
    """Model, equilibrium and candidate checks shared by the commands."""
    checks = {
        "model": consistency_check(cfg.model, box=cfg.box, seed=cfg.seed),
        "equilibrium": validate_equilibrium(cfg.model, cfg.equilibrium),
        "candidate": consistency_check(cfg.candidate, equilibrium=cfg.equilibrium,
                                       box=cfg.neighborhood, seed=cfg.seed),
    }
    return checks


def _problem(cfg):
    return ShapingProblem(cfg.model, cfg.candidate, cfg.connection, cfg.gyro, cfg.diss)


def cmd_check_matching(cfg: RunConfig, outdir=None):
    checks = _preflight(cfg)
    rep = matching_report(cfg.model, cfg.candidate, cfg.sampler)
    ok = rep.passed and all(c.passed for c in checks.values())
    out = {
        "command": "check-matching",
        "model": cfg.model.name,
        "seed": cfg.seed,
        "sup_kinetic_residual": rep.values["sup_kinetic_residual"],
        "sup_potential_residual": rep.values["sup_potential_residual"],
        "pass": ok,
        "matching": rep.to_dict(),
        "checks": {k: v.to_dict() for k, v in checks.items()},
    }
    _dump(out, None if outdir is None else os.path.join(outdir, "check_matching.json"))
    if not checks["equilibrium"].passed or not checks["model"].passed:
        return EXIT_CONFIG
    return EXIT_OK if ok else EXIT_FAIL


def _initial_state(cfg):
    n = cfg.model.n
    q0 = cfg.q0 if cfg.q0 is not None else cfg.equilibrium.q_star + 0.1
    p0 = cfg.p0 if cfg.p0 is not None else np.zeros(n)
    return CotangentState(q0, p0)


def cmd_simulate(cfg: RunConfig, route: str, outdir: str):
    if route == "single" and cfg.model.m != 1:
        _err(f"route 'single' needs one actuator; {cfg.model.name} has m = {cfg.model.m}")
        return EXIT_CONFIG
    checks = _preflight(cfg)
    if not checks["model"].passed or not checks["equilibrium"].passed:
        _err("; ".join(checks["model"].failures + checks["equilibrium"].failures))
        return EXIT_CONFIG
    if not checks["candidate"].passed:
        _err("candidate rejected: " + "; ".join(checks["candidate"].failures))
        return EXIT_REFUSED
    problem = _problem(cfg)
    try:
        if route == "ch":
            law = control_CH(problem, sampler=cfg.sampler)
        elif route == "lcb":
            law = control_LCB(problem, sampler=cfg.sampler)
        else:
            law = single_actuator_control(problem, sampler=cfg.sampler)
    except MatchingError as exc:
        _err(f"synthesis refused: {exc}")
        return EXIT_REFUSED
    x0 = _initial_state(cfg)
    if not cfg.box.contains(x0.q):
        _err("initial configuration lies outside the box")
        return EXIT_CONFIG
    rec = integrate(cfg.model, law, x0, cfg.dt, cfg.T, box=cfg.box)
    mon = lyapunov_monitor(rec, rate_scale=None)
    conv = convergence_check(rec, cfg.equilibrium, cfg.conv_radius)
    os.makedirs(outdir, exist_ok=True)
    write_csv(rec, os.path.join(outdir, "trajectory.csv"))
    summary = {
        "command": "simulate",
        "route": route,
        "provenance": law.provenance,
        "model": cfg.model.name,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "T": cfg.T,
        "steps": len(rec) - 1,
        "status": rec.status,
        "Hhat_initial": rec.Hhat_vals[0],
        "Hhat_final": rec.Hhat_vals[-1],
        "monitor": mon.to_dict(),
        "converged": conv,
        "final_distance": rec.final_distance,
        "convergence_radius": cfg.conv_radius,
        "pass": mon.passed,
    }
    if law.info:
        summary["law_info"] = dict(law.info)
    _dump(summary, os.path.join(outdir, "summary.json"))
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def cmd_verify_equivalence(cfg: RunConfig, outdir=None):
    problem = _problem(cfg)
    try:
        rep = verify_equivalence(problem, cfg.sampler)
    except MatchingError as exc:
        _err(f"synthesis refused: {exc}")
        return EXIT_REFUSED
    out = {"command": "verify-equivalence", "model": cfg.model.name, "seed": cfg.seed,
           "sup_law_difference": rep.values["sup_law_difference"], "pass": rep.passed,
           "report": rep.to_dict()}
    _dump(out, None if outdir is None else os.path.join(outdir, "verify_equivalence.json"))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_count_equations(n, m):
    trad, simple = count_equations(n, m)
    _dump({"n": n, "m": m, "traditional": trad, "simple": simple})
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="shapestab",
                                 description="Energy-shaping and Lyapunov-constraint stabilization toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check-matching", help="check the matching conditions of a candidate")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--outdir")
    p = sub.add_parser("simulate", help="synthesize a law and simulate the closed loop")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--route", choices=["ch", "lcb", "single"], default="ch")
    p.add_argument("-o", "--outdir", required=True)
    p = sub.add_parser("verify-equivalence", help="compare the shaping and constraint routes")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--outdir")
    p = sub.add_parser("count-equations", help="number of kinetic matching equations")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    sub.add_parser("list-models", help="list built-in models and their default parameters")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "list-models":
            _dump({"models": {name: model_defaults(name) for name in list_models()}})
            return EXIT_OK
        if args.command == "count-equations":
            return cmd_count_equations(args.n, args.m)
        cfg = load_config(args.config)
        if getattr(args, "outdir", None):
            os.makedirs(args.outdir, exist_ok=True)
        if args.command == "check-matching":
            return cmd_check_matching(cfg, args.outdir)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.route, args.outdir)
        return cmd_verify_equivalence(cfg, args.outdir)
    except (ConfigError, DomainError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except (RankDeficiencyError, ShapestabError) as exc:
        _err(str(exc))
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
