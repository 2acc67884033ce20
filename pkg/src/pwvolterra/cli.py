"""Command-line front end.

    pwvolterra analyze --catalog P_mat --N 3
    pwvolterra solve --input problem.json --method auto -o x.csv --report run.json
    pwvolterra catalog P_conv > p_conv.json

Exit codes: 0 success, 1 hypotheses violated or a check failed, 2 analysis or
solver failure, 3 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import errors
from .asymptotic import build_asymptotics
from .characteristic import classify
from .grid import GridFunction, to_csv
from .picard import picard_config, solve_residual
from .problem import load_problem, problem_to_dict, taylor_data, validate
from .steps import check_condition_s, select_partition, solve_steps
from .verify import CATALOG_NAMES, catalog, firstkind_residual

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3
TAYLOR_EXTRA = 5


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pwvolterra",
                                 description="First-kind Volterra equations with piecewise kernels")
    sub = ap.add_subparsers(dest="command", required=True)

    def source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--catalog", metavar="NAME", help=f"built-in problem ({', '.join(CATALOG_NAMES)})")
        g.add_argument("--input", metavar="FILE", help="problem file (JSON)")
        sp.add_argument("--N", type=int, default=4, help="expansion degree (default 4)")
        sp.add_argument("--tol", type=float, default=None, help="rank / iteration tolerance")
        sp.add_argument("--report", metavar="FILE", help="also write the JSON report here")

    for name, text in (("analyze", "check hypotheses and classify j = 0..N"),
                       ("asympt", "build the expansion near t = 0"),
                       ("verify", "run the built-in consistency checks")):
        source(sub.add_parser(name, help=text))
    sp = sub.add_parser("solve", help="solve on [0, T]")
    source(sp)
    sp.add_argument("--method", choices=("picard", "steps", "auto"), default="auto")
    sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                    help="bind a free parameter (repeatable; unbound ones are 0)")
    sp.add_argument("--mesh", type=int, default=None, help="mesh intervals on [0, T]")
    sp.add_argument("--output", "-o", metavar="FILE", help="solution CSV")
    cp = sub.add_parser("catalog", help="list built-in problems or export one as JSON")
    cp.add_argument("name", nargs="?")
    cp.add_argument("--output", "-o", metavar="FILE")
    return ap


def _load(args):
    if args.catalog:
        return catalog(args.catalog).problem
    return load_problem(args.input)


def _parse_params(items):
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise errors.InputError(f"--param expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise errors.InputError(f"--param {name}: {value!r} is not a number") from None
    return out


def _jsonable(v):
    if isinstance(v, float) and not np.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def _emit(report, args):
    text = json.dumps(_jsonable(report), indent=2)
    print(text)
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(text + "\n")


def _analysis(p, args, report):
    v = validate(p)
    report["validation"] = v.to_json()
    if not v.ok:
        report["error"] = "hypotheses violated: " + ", ".join(v.failures())
        return v, None, None
    tol = args.tol or 1e-9
    td = taylor_data(p, args.N + TAYLOR_EXTRA)
    rep = classify(td, args.N, tol)
    report["classification"] = rep.to_json()
    return v, td, rep


def _cmd_analyze(p, args, report):
    v, _, _ = _analysis(p, args, report)
    return EXIT_OK if v.ok else EXIT_INVALID


def _cmd_asympt(p, args, report):
    v, td, rep = _analysis(p, args, report)
    if not v.ok:
        return EXIT_INVALID
    res = build_asymptotics(p, td, rep, args.N, tol=args.tol or 1e-9)
    report["asymptotics"] = res.to_json()
    return EXIT_OK if v.ok else EXIT_INVALID


def _choose_method(p, method):
    if method != "auto":
        return method
    try:
        return "steps" if check_condition_s(p)[2] else "picard"
    except errors.NonlinearCurves:
        return "picard"


def _cmd_solve(p, args, report):
    v, td, rep = _analysis(p, args, report)
    if not v.ok:
        return EXIT_INVALID
    res = build_asymptotics(p, td, rep, args.N, tol=args.tol or 1e-9)
    report["asymptotics"] = res.to_json()
    given = _parse_params(args.param)
    unknown = sorted(set(given) - set(res.x.params))
    if unknown:
        raise errors.InputError(f"unknown parameters: {', '.join(unknown)}")
    params = {k: given.get(k, 0.0) for k in res.x.params}
    report["params"] = {"bound": params, "defaulted": [k for k in res.x.params if k not in given]}
    method = _choose_method(p, args.method)
    solver = {"method": method}
    report["solver"] = solver
    if method == "steps":
        cfg = select_partition(p)
        if args.tol:
            cfg.tol = args.tol
        sol = solve_steps(p, cfg, args.mesh or 1024)
        grid, evaluator = sol.x, sol.x
        solver["config"] = cfg.to_json()
        solver["iterations"] = sol.iterations
        solver["joins"] = [{"t": t, "jump": j} for t, j in sol.joins]
    else:
        cfg = picard_config(p)
        if args.tol:
            cfg.tol = args.tol
        if args.mesh:
            cfg.intervals = args.mesh
        sol = solve_residual(p, td, res.x, cfg, params=params, residual_order=res.residual_order)
        grid, evaluator = sol.on_mesh(), sol
        solver["config"] = cfg.to_json()
        solver["iterations"] = sol.iterations
        solver["contraction_ratios"] = sol.contraction_ratios
    ts = np.linspace(p.T / 16, p.T, 16)
    solver["residual"] = firstkind_residual(p, evaluator, ts)
    if args.output:
        to_csv(grid, args.output)
    return EXIT_OK


def _cmd_verify(p, args, report):
    checks = []
    v, td, rep = _analysis(p, args, report)
    checks.append(("hypotheses", v.ok, ", ".join(v.failures())))
    if not v.ok:
        report["checks"] = [{"check": "hypotheses", "pass": False, "value": checks[0][2]}]
        return EXIT_INVALID
    res = build_asymptotics(p, td, rep, args.N, tol=args.tol or 1e-9)
    report["asymptotics"] = res.to_json()
    checks.append(("residual order exceeds N", res.residual_order >= args.N + 0.5,
                   res.residual_order))
    if args.catalog:
        entry = catalog(args.catalog)
        got = tuple(pt.classification for pt in rep.points)
        want = entry.expected_classification[:len(got)]
        checks.append(("classification", got == want, list(got)))
        checks.append(("parameter count", len(res.params) == entry.expected_param_count,
                       len(res.params)))
        ts = np.linspace(1e-3, p.T, 24)
        for c in ((0.0, 3.7) if entry.expected_param_count else (0.0,)):
            binding = {k: c for k in res.x.params}
            r = firstkind_residual(p, lambda s: entry.solution(s, binding), ts)
            checks.append((f"closed form residual (c={c})", r <= 1e-8, r))
        try:
            feasible = check_condition_s(p)[2]
        except errors.NonlinearCurves:
            feasible = None
        if feasible is not None:
            checks.append(("uniqueness regime", feasible == entry.unique, feasible))
    report["checks"] = [{"check": n, "pass": bool(ok), "value": val} for n, ok, val in checks]
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_INVALID


def _cmd_catalog(args):
    if not args.name:
        for name in CATALOG_NAMES:
            print(name)
        return EXIT_OK
    doc = problem_to_dict(catalog(args.name).problem)
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {"analyze": _cmd_analyze, "asympt": _cmd_asympt, "solve": _cmd_solve,
            "verify": _cmd_verify}


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "catalog":
            return _cmd_catalog(args)
        p = _load(args)
        report = {"problem": {"name": p.name, "m": p.m, "n": p.n, "T": p.T}}
        try:
            code = COMMANDS[args.command](p, args, report)
        except (errors.SolverError, errors.UnclassifiablePoint, errors.SolvabilityFailure,
                errors.DegreeMismatch) as exc:
            report["error"] = str(exc)
            code = EXIT_SOLVER
        _emit(report, args)
        if "error" in report:
            print(f"error: {report['error']}", file=sys.stderr)
        return code
    except (errors.InputError, errors.DegenerateData, errors.DomainError,
            errors.OutOfDomain, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except errors.VolterraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main():
    sys.exit(run())
