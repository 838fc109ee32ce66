"""Command-line entry point: ``icechain <subcommand> ...``.

Exit codes: 0 on success, 1 when an input fails validation, 2 on a usage
error. Seeds come from ``--seed`` or the ``ICECHAIN_SEED`` environment
variable (default 0), so every run is reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import graph as graphs
from .chain import GlauberChain
from .configuration import from_mask
from .constraint import ConstraintFunction4, make_fstar, make_six_vertex, parse_rational
from .coupling import (
    adjacent_pairs,
    coalescence_experiment,
    exact_drift,
    mixing_bound,
    theoretical_beta,
)
from .counting import estimate_Z
from .decomposition import CONVENTIONS, decompose
from .exactness import (
    PhiMetric,
    check_detailed_balance,
    check_irreducible_aperiodic,
    enumerate_omega,
    exact_mu,
    exact_partition,
    stationarity_residual,
    transition_matrix,
    tv_curve,
)
from .windability import is_windable

SEED_ENV = "ICECHAIN_SEED"


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        value = parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        value = int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc
    if not 0 <= value < 2**64:
        raise UsageError(f"{SEED_ENV} must fit in 64 unsigned bits")
    return value


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def _load(path: str):
    return graphs.load(path)


# -- subcommands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    family = args.family
    if family == "theta":
        g = graphs.gen_theta()
    elif family == "fig2":
        g = graphs.gen_fig2()
    elif family == "torus":
        g = graphs.gen_torus(args.rows, args.cols)
    elif family == "chain":
        g = graphs.gen_chain(args.k)
    elif family == "cycle":
        g = graphs.gen_cycle(args.k)
    else:
        g = graphs.gen_random(args.vertices, seed=_seed(args), max_circuits=args.max_circuits)
    _emit(graphs.dumps(g), args.out)
    return 0


def cmd_decompose(args) -> int:
    d = decompose(_load(args.input))
    _emit(_dump(d.to_json(args.convention)), args.out)
    return 0


def cmd_sample(args) -> int:
    d = decompose(_load(args.input))
    chain = GlauberChain(d, args.b, args.convention)
    masks = chain.sample_masks(args.steps, args.burn_in, args.thin, seed=_seed(args))
    lines = [json.dumps(list(from_mask(int(m), d.n))) for m in masks]
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def cmd_exact(args) -> int:
    d = decompose(_load(args.input))
    space = enumerate_omega(d)
    P = transition_matrix(d, args.b, args.convention, space)
    mu = exact_mu(d, args.b, args.convention, space)
    if args.report:
        report = {
            "omega_size": len(space),
            "Z": str(exact_partition(d, args.b, args.convention, space)),
            "detailed_balance_residual": str(check_detailed_balance(P, mu)),
            "stationarity_residual": str(stationarity_residual(P, mu)),
            "irreducible_aperiodic": check_irreducible_aperiodic(P),
        }
        sys.stdout.write(
            f"|Omega| = {report['omega_size']}\n"
            f"Z = {report['Z']}\n"
            f"detailed balance residual = {report['detailed_balance_residual']}\n"
            f"stationarity residual = {report['stationarity_residual']}\n"
            f"irreducible and aperiodic = {str(report['irreducible_aperiodic']).lower()}\n"
        )
    if args.out or not args.report:
        curve = tv_curve(P, mu, args.tmax)
        rows = [(t, f"{float(v):.17g}") for t, v in enumerate(curve)]
        if args.out:
            with open(args.out, "w", newline="") as fh:
                _write_curve(fh, rows)
        else:
            _write_curve(sys.stdout, rows)
    return 0


def _write_curve(fh, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "delta_max"])
    writer.writerows(rows)


def cmd_couple(args) -> int:
    d = decompose(_load(args.input))
    delta = d.delta_max(args.convention)
    if args.mode == "bound":
        report = {
            "n": d.n,
            "delta": delta,
            "b": str(args.b),
            "eps": args.eps,
            "beta": theoretical_beta(d.n, delta, args.b),
            "mixing_bound": mixing_bound(d.n, delta, args.b, args.eps),
        }
    elif args.mode == "coalesce":
        stats = coalescence_experiment(d, args.b, args.trials, seed=_seed(args), convention=args.convention)
        report = {"n": d.n, "b": str(args.b), **stats.to_json()}
    else:
        space = enumerate_omega(d)
        metric = PhiMetric(d, args.b, args.convention, space)
        pairs = adjacent_pairs(d, space.states)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reports = [exact_drift(p.sigma, p.i, d, args.b, args.convention, metric) for p in pairs]
        report = {
            "n": d.n,
            "delta": delta,
            "b": str(args.b),
            "two_by_two_free": d.two_by_two_free,
            "pairs": len(reports),
            "all_bounds_hold": all(r.bound_holds for r in reports),
            "all_cases_match": all(r.cases_ok for r in reports),
            "reports": [r.to_json() for r in reports],
        }
    _emit(_dump(report), args.out)
    return 0


def cmd_windable(args) -> int:
    if args.fn_file:
        f = ConstraintFunction4.load(args.fn_file)
    elif args.fn == "fstar":
        if args.b is None:
            raise UsageError("--fn fstar needs --b")
        f = make_fstar(args.b)
    elif args.fn == "six-vertex":
        if None in (args.a, args.b, args.c):
            raise UsageError("--fn six-vertex needs --a, --b and --c")
        f = make_six_vertex(args.a, args.b, args.c)
    else:
        raise UsageError("give --fn or --fn-file")
    _emit(_dump(is_windable(f).to_json()), args.out)
    return 0


def cmd_estimate(args) -> int:
    if not 0 < args.eps < 1 or not 0 < args.confidence < 1:
        raise UsageError("--eps and --confidence must lie in (0, 1)")
    d = decompose(_load(args.input))
    est = estimate_Z(d, args.b, args.eps, args.confidence, seed=_seed(args), convention=args.convention)
    _emit(_dump(est.to_json()), args.out)
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed_arg, default=None, help=f"RNG seed (else ${SEED_ENV}, else 0)")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads (runs are single-threaded)")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="icechain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def instance(p, need_b=True):
        p.add_argument("--in", dest="input", required=True, help="instance JSON")
        p.add_argument("--convention", choices=CONVENTIONS, default="intersection")
        if need_b:
            p.add_argument("--b", type=_rational, required=True, help="weight b as p/q or a decimal")

    p = sub.add_parser("gen", parents=[common], help="write a fixture instance")
    p.add_argument("--family", choices=graphs.FAMILIES, required=True)
    p.add_argument("--rows", type=_positive_int, default=2)
    p.add_argument("--cols", type=_positive_int, default=2)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--vertices", type=_positive_int, default=6)
    p.add_argument("--max-circuits", type=_positive_int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", parents=[common], help="circuit decomposition report")
    instance(p, need_b=False)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("sample", parents=[common], help="run the chain, one configuration per line")
    instance(p)
    p.add_argument("--steps", type=_positive_int, required=True, help="number of recorded states")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--thin", type=_positive_int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", parents=[common], help="exact oracle: TV curve or report")
    instance(p)
    p.add_argument("--tmax", type=int, default=100)
    p.add_argument("--report", action="store_true")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("couple", parents=[common], help="coupling drift, coalescence or bound")
    instance(p)
    p.add_argument("--mode", choices=("drift", "coalesce", "bound"), default="drift")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("windable", parents=[common], help="decide windability exactly")
    p.add_argument("--fn", choices=("fstar", "six-vertex"))
    p.add_argument("--fn-file")
    p.add_argument("--a", type=_rational)
    p.add_argument("--b", type=_rational)
    p.add_argument("--c", type=_rational)
    p.set_defaults(func=cmd_windable)

    p = sub.add_parser("estimate-z", parents=[common], help="estimate the partition function")
    instance(p)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"icechain: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"icechain: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
