"""Command-line interface: solve one system, run a benchmark suite, or dump
the scaled-error spectrum.

Matrix files are Matrix Market (.mtx).  The benchmark collections referenced
in the documentation are available from the SuiteSparse matrix collection at
https://sparse.tamu.edu in Matrix Market format.
"""

import argparse
import logging
import math
import sys

from . import harness, rng
from .eigsolve import EigsParams
from .errors import Breakdown
from .harness import ExperimentConfig, parse_config
from .ichol import ic0
from .matio import load_problem
from .pcg import pcg_solve
from .precond import (
    assemble,
    build_alpha,
    build_exact,
    build_randomized,
    build_svd_krylov,
    identity,
)
from .sketch import SketchParams

_SOLVE_PRECONDS = (
    "none",
    "ichol",
    "breg",
    "rbreg",
    "svd",
    "breg_alpha",
    "nys",
    "nys_indef",
    "svd_ks",
)

_DOWNLOAD_HINT = (
    "matrix files are Matrix Market (.mtx); the benchmark collections can be "
    "downloaded from the SuiteSparse collection at https://sparse.tamu.edu"
)


def _build_parser():
    parser = argparse.ArgumentParser(prog="bregpcg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one system with a chosen preconditioner")
    solve.add_argument("matrix", help="Matrix Market file")
    solve.add_argument("--precond", choices=_SOLVE_PRECONDS, default="breg")
    group = solve.add_mutually_exclusive_group()
    group.add_argument("--rank", type=int, help="low-rank correction rank r")
    group.add_argument("--rank-frac", type=float, default=0.05, help="r = floor(n * frac)")
    solve.add_argument("--alpha", type=float, default=0.5, help="split for breg_alpha")
    solve.add_argument("--positive-part", choices=("krylov_schur", "nystrom"), default="nystrom")
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--maxit", type=int, default=100)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--rhs", choices=("random", "atb"), default="random")
    solve.add_argument("--diag-shift", type=float, default=0.0)
    solve.add_argument("--eig-tol", type=float, default=1e-2)
    solve.add_argument("--eig-budget", type=int, default=60, help="restarts and slack")
    solve.add_argument("--oversample", type=int, default=60)
    solve.add_argument("--width-factor", type=float, default=1.5)
    solve.add_argument("--cap", type=int, default=4096, help="densification cap")

    bench = sub.add_parser("bench", help="run a benchmark suite and write CSV")
    bench.add_argument("matrices", nargs="*", help="Matrix Market files")
    bench.add_argument("--suite", choices=("small", "large"), default="small")
    bench.add_argument("--out", default="results.csv")
    bench.add_argument("--config", help="key = value config file")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--appendix-mode", action="store_true")

    spectrum = sub.add_parser("spectrum", help="dump the scaled-error spectrum to CSV")
    spectrum.add_argument("matrix", help="Matrix Market file")
    spectrum.add_argument("--out", default="spectrum.csv")
    spectrum.add_argument("--seed", type=int, default=0)
    spectrum.add_argument("--diag-shift", type=float, default=0.0)
    spectrum.add_argument("--cap", type=int, default=4096)
    return parser


def _cmd_solve(args) -> int:
    problem = load_problem(args.matrix, seed=args.seed, rhs_mode=args.rhs)
    s, b = problem.S, problem.b
    n = problem.n
    r = args.rank if args.rank is not None else int(math.floor(n * args.rank_frac))
    label = args.precond
    eig = EigsParams(args.eig_tol, args.eig_budget, args.eig_budget, rng.derive(args.seed, "eigs"))
    sk = SketchParams(args.oversample, args.width_factor, rng.derive(args.seed, "sketch"))

    if label == "none":
        p = identity()
    else:
        q = ic0(s, diag_shift=args.diag_shift)
        if label == "ichol":
            p = assemble(q, label="ichol")
        elif label in ("breg", "rbreg", "svd"):
            rule = {"breg": "bld", "rbreg": "rbld", "svd": "tsvd"}[label]
            p = build_exact(s, q, r, rule, cap=args.cap, label=label)
        elif label == "breg_alpha":
            p = build_alpha(
                s, q, r, args.alpha, eig,
                positive_method=args.positive_part, sketch_params=sk,
                allow_partial=True, label=label,
            )
        elif label in ("nys", "nys_indef"):
            variant = "nystrom" if label == "nys" else "nystrom_indefinite"
            p = build_randomized(s, q, r, variant, sk, label=label)
        else:
            p = build_svd_krylov(s, q, r, eig, allow_partial=True, label=label)

    x, report = pcg_solve(s, b, p, tol=args.tol, maxit=args.maxit)
    report.time_construct_s = p.build_info.seconds if label != "none" else 0.0

    print(f"matrix            {problem.name} (n={n}, nnz={s.nnz}, origin={problem.origin})")
    print(f"rhs               {problem.rhs_mode} (seed={args.seed}, unit 2-norm)")
    print(f"preconditioner    {label}" + (f" (r={r})" if label not in ("none", "ichol") else ""))
    if label == "breg_alpha":
        print(f"alpha             {args.alpha}")
    print(f"converged         {report.converged}" + ("" if report.converged else f" ({report.reason})"))
    print(f"iterations        {report.iterations}")
    print(f"final residual    {report.final_rel_residual:.6e} (relative, true)")
    print(f"matvecs           {report.matvecs_S + p.build_info.matvecs_s}")
    print(f"construction (s)  {report.time_construct_s:.4f}")
    print(f"solve (s)         {report.time_solve_s:.4f}")
    if p.build_info.notes:
        print(f"notes             {';'.join(p.build_info.notes)}")
    return 0 if report.converged else 1


def _cmd_bench(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = ExperimentConfig()
    cfg.suite = args.suite
    if args.matrices:
        cfg.matrices = tuple(args.matrices)
    if args.seed:
        cfg.seed = args.seed
    if args.appendix_mode:
        cfg.appendix_mode = True
    if args.out:
        cfg.out = args.out
    if not cfg.matrices:
        print("no matrices given (positional arguments or 'matrices = ...' in the config)", file=sys.stderr)
        print(_DOWNLOAD_HINT, file=sys.stderr)
        return 2
    runner = harness.run_small_suite if cfg.suite == "small" else harness.run_large_suite
    rows = runner(cfg)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _cmd_spectrum(args) -> int:
    problem = load_problem(args.matrix, seed=args.seed)
    factor = ic0(problem.S, diag_shift=args.diag_shift)
    rows = harness.spectrum_rows(problem.S, factor, cap=args.cap)
    harness.write_csv(args.out, harness.SPECTRUM_HEADER, rows)
    print(f"wrote {len(rows)} eigenvalues to {args.out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_spectrum(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_DOWNLOAD_HINT, file=sys.stderr)
        return 2
    except Breakdown as exc:
        print(f"error: incomplete Cholesky broke down in row {exc.row}; retry with --diag-shift", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
