"""Command-line entry point: ``symred verify|detsys|reduce``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .catalog import get_entry
from .detsys import (
    LaurentAnsatz,
    Tau1Ansatz,
    determining_system_tau0,
    determining_system_tau1,
    reduced_system_ansatz,
    split_laurent_ansatz,
)
from .expr import ExprError, ZeroTestPolicy, parse
from .model import Pde
from .numcheck import convergence_study, residual_stats
from .ode import OdeError
from .reduce import GridSpec, ReductionError, build_solution, pipeline_defaults
from .verify import reports_to_json, summarize, verify_catalog

EXIT_OK, EXIT_VERDICT, EXIT_INCONSISTENT, EXIT_PARSE, EXIT_ABORT = 0, 1, 2, 3, 4
RESIDUAL_THRESHOLD = 1e-4
DEFAULT_PARAMS = ("c", "a")
DEFAULT_FUNCTIONS = {"B": 1, "k": 1}


def default_seed() -> int:
    raw = os.environ.get("SYMRED_SEED")
    return int(raw) if raw not in (None, "") else 0


def _warn(msg: str):
    print(f"symred: warning: {msg}", file=sys.stderr)


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


# ---- verify -------------------------------------------------------------

def cmd_verify(args) -> int:
    policy = ZeroTestPolicy(samples=args.samples, param_draws=args.param_draws, tol=args.tol,
                            seed=args.seed, margin=args.margin)
    ids = None if args.all or not args.case else args.case
    reports = verify_catalog(policy, ids, workers=args.workers)
    if ids is not None and not reports:
        _warn(f"no catalog entry matches {', '.join(ids)}")
    _write(args.out, reports_to_json(reports, policy))
    summary = summarize(reports)
    for r in reports:
        flag = "ok" if r.ok else "UNEXPECTED"
        print(f"{r.id:32s} {r.kind:9s} {r.verdict:5s} (expected {r.expected}) {flag}", file=sys.stderr)
    if summary["tolerance_sensitive"]:
        _warn("tolerance-sensitive failures: " + ", ".join(summary["tolerance_sensitive"]))
    if not summary["consistent"]:
        return EXIT_INCONSISTENT
    return EXIT_OK if summary["ok"] else EXIT_VERDICT


# ---- detsys -------------------------------------------------------------

def _functions(specs) -> dict:
    out = dict(DEFAULT_FUNCTIONS)
    for spec in specs or ():
        name, _, arity = spec.partition(":")
        out[name] = int(arity) if arity else 1
    return out


def cmd_detsys(args) -> int:
    params = tuple(DEFAULT_PARAMS) + tuple(args.param or ())
    funcs = _functions(args.func)

    def p(text):
        return parse(text, params=params, functions=funcs)

    try:
        pde = Pde(p(args.k))
        if args.split is not None:
            m, n = args.split
            coeffs = {}
            for item in args.coef or ():
                power, sep, text = item.partition("=")
                if not sep:
                    raise ExprError(f"--coef expects P=EXPR, got {item!r}")
                coeffs[int(power)] = p(text)
            system = split_laurent_ansatz(pde, LaurentAnsatz(m, n, coeffs))
        elif args.ansatz:
            system = reduced_system_ansatz(pde, Tau1Ansatz())
        elif args.tau == 1:
            system = determining_system_tau1(pde, p(args.xi), p(args.eta))
        else:
            system = determining_system_tau0(pde, p(args.eta))
    except (ExprError, ValueError) as exc:
        print(f"symred: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    _write(args.out, system.to_text(normalize=not args.raw))
    return EXIT_OK


# ---- reduce -------------------------------------------------------------

def _grid(text: str) -> tuple[int, int]:
    try:
        nt, nx = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like NTxNX, got {text!r}") from None
    if nt < 3 or nx < 3:
        raise argparse.ArgumentTypeError("grid needs at least 3 nodes per axis")
    return nt, nx


def _coarser(n: int, factor: int) -> int:
    return (n - 1) // factor + 1


def cmd_reduce(args) -> int:
    try:
        entry = get_entry(args.case)
    except KeyError:
        print(f"symred: error: unknown catalog entry {args.case!r}", file=sys.stderr)
        return EXIT_PARSE
    d = pipeline_defaults(entry)
    params = dict(d.params)
    if args.c is not None:
        params["c"] = args.c
    for item in args.param or ():
        name, _, value = item.partition("=")
        params[name] = float(value)
    t_range = tuple(args.t_range) if args.t_range else d.t_range
    x_range = tuple(args.x_range) if args.x_range else d.x_range
    nt, nx = args.grid
    grid = GridSpec(nt, nx, t_range, x_range)
    options = dict(params=params, anchor=args.anchor, f0=args.f0, df0=args.df0, v0=args.v0,
                   use_ode=not args.no_ode, oversample=args.oversample)
    pde, op = entry.instantiate()
    config = {
        "case": entry.id,
        "params": dict(sorted(params.items())),
        "anchor": d.anchor if args.anchor is None else args.anchor,
        "f0": d.f0 if args.f0 is None else args.f0,
        "df0": d.df0 if args.df0 is None else args.df0,
        "v0": d.v0 if args.v0 is None else args.v0,
        "use_ode": not args.no_ode,
        "oversample": args.oversample,
        "study": args.study,
    }
    out_dir = Path(args.out_dir)
    try:
        sol = build_solution(entry, grid, **options)
        stats = residual_stats(sol, pde, op, params)
        study = None
        if args.study:
            levels = [GridSpec(_coarser(nt, f), _coarser(nx, f), t_range, x_range) for f in (4, 2)] + [grid]
            study = convergence_study(lambda g: sol if g == grid else build_solution(entry, g, **options),
                                      levels, pde, op, params)
    except (ReductionError, OdeError) as exc:
        print(f"symred: error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    verdict = "pass" if stats.linf <= RESIDUAL_THRESHOLD else "FAIL"
    run = {
        "command": "reduce",
        "seed": args.seed,
        "config": config,
        "grid": grid.as_dict(),
        "meta": sol.meta,
        "residual": stats.as_dict(),
        "threshold": RESIDUAL_THRESHOLD,
        "verdict": verdict,
        "study": study.as_dict() if study else None,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "solution.csv").write_text(sol.to_csv())
    if study is not None:
        stats_csv = study.to_csv()
    else:
        stats_csv = ("level,h_t,h_x,linf,l2,order\n"
                     f"{nt}x{nx},{stats.h_t:.17g},{stats.h_x:.17g},{stats.linf:.17g},{stats.l2:.17g},\n")
    (out_dir / "stats.csv").write_text(stats_csv)
    (out_dir / "run.json").write_text(json.dumps(run, indent=2) + "\n")
    print(f"{entry.id}: residual linf {stats.linf:.3e} ({verdict}); characteristic linf {stats.char_linf:.3e}",
          file=sys.stderr)
    if study is not None:
        print(f"fitted order {study.order:.3f}", file=sys.stderr)
    return EXIT_OK


# ---- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symred", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify catalog entries and negative controls")
    v.add_argument("--all", action="store_true", help="verify everything (default when no --case)")
    v.add_argument("--case", action="append", metavar="ID", help="entry id or id prefix; repeatable")
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--param-draws", type=int, default=5)
    v.add_argument("--margin", type=float, default=1e-2)
    v.add_argument("--seed", type=int, default=default_seed())
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--out", metavar="PATH", help="report path (default: stdout)")
    v.set_defaults(handler=cmd_verify)

    d = sub.add_parser("detsys", help="print a determining system")
    d.add_argument("--tau", type=int, choices=(0, 1), required=True)
    d.add_argument("--k", required=True)
    d.add_argument("--xi", default="0")
    d.add_argument("--eta", default="0")
    d.add_argument("--split", type=int, nargs=2, metavar=("M", "N"), help="Laurent ansatz in u (tau = 0)")
    d.add_argument("--coef", action="append", metavar="P=EXPR", help="fix the coefficient of u^P")
    d.add_argument("--ansatz", action="store_true", help="tau = 1 system under the xi = phi u + psi ansatz")
    d.add_argument("--param", action="append", metavar="NAME", help="extra parameter name")
    d.add_argument("--func", action="append", metavar="NAME[:ARITY]", help="extra function symbol")
    d.add_argument("--raw", action="store_true", help="print residuals without normal form")
    d.add_argument("--out", metavar="PATH")
    d.set_defaults(handler=cmd_detsys)

    r = sub.add_parser("reduce", help="build an invariant solution on a grid and certify it")
    r.add_argument("--case", required=True, metavar="ID")
    r.add_argument("--c", type=float, help="value of the parameter c")
    r.add_argument("--param", action="append", metavar="NAME=VALUE")
    r.add_argument("--grid", type=_grid, default=(201, 201), metavar="NTxNX")
    r.add_argument("--t-range", type=float, nargs=2, metavar=("T0", "T1"))
    r.add_argument("--x-range", type=float, nargs=2, metavar=("X0", "X1"))
    r.add_argument("--anchor", type=float, help="shooting point (tau = 1) or anchor x0 (tau = 0)")
    r.add_argument("--f0", type=float)
    r.add_argument("--df0", type=float)
    r.add_argument("--v0", type=float)
    r.add_argument("--no-ode", action="store_true", help="use a constant initial profile (negative control)")
    r.add_argument("--oversample", type=int, default=4)
    r.add_argument("--study", action="store_true", help="also run a 3-level convergence study")
    r.add_argument("--seed", type=int, default=default_seed())
    r.add_argument("--out-dir", default=".")
    r.set_defaults(handler=cmd_reduce)
    return parser


# options whose values are expressions and may legitimately start with '-'
EXPR_OPTIONS = ("--k", "--xi", "--eta", "--coef")


def _glue_expressions(argv: list) -> list:
    out = []
    it = iter(argv)
    for token in it:
        if token in EXPR_OPTIONS:
            value = next(it, None)
            out.append(token if value is None else f"{token}={value}")
        else:
            out.append(token)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_expressions(argv))
    if args.command == "detsys":
        if args.split is not None and args.tau != 0:
            parser.error("--split applies to --tau 0")
        if args.ansatz and args.tau != 1:
            parser.error("--ansatz applies to --tau 1")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
