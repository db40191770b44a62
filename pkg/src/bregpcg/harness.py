"""Benchmark suites over Matrix Market problems, with CSV output.

Two suites mirror the evaluation protocol this package exists to reproduce.
The small suite compares exact truncation preconditioners (forward, reverse,
and magnitude selection) against no preconditioning and the bare incomplete
factor, reporting iteration counts, preconditioned condition numbers, both
divergence directions, and whether the three selections coincided.  The
large suite benchmarks the scalable constructions (sketched and Krylov) with
timings and exact matrix-product counts.

Row content is bitwise reproducible for a fixed seed; only the timing
columns vary between runs.  Per-task seeds are derived from the config seed
and the row's identity, so runs do not depend on execution order.
"""

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

from . import rng
from .bregman import scaled_error, select_indices, truncate
from .dense_kernels import sym_eig
from .eigsolve import EigsParams
from .errors import NoConvergence
from .ichol import ic0
from .matio import load_problem
from .pcg import cond2_preconditioned, divergence_columns, pcg_solve
from .precond import (
    assemble,
    build_alpha,
    build_randomized,
    build_svd_krylov,
    identity,
)
from .sketch import SketchParams

log = logging.getLogger("bregpcg")

SMALL_HEADER = (
    "matrix,n,r,iter_none,iter_ichol,iter_rbreg,iter_svd,iter_breg,"
    "cond_rbreg,cond_svd,cond_breg,div_rbreg,div_svd,div_breg,truncations_coincide"
).split(",")

LARGE_HEADER = (
    "matrix,n,preconditioner,r,alpha,converged,rel_residual,iterations,"
    "construction_s,solve_s,matvecs_S,note"
).split(",")

SMALL_PRECONDITIONERS = ("none", "ichol", "rbreg", "svd", "breg")
LARGE_PRECONDITIONERS = ("none", "ichol", "nys", "nys_indef", "svd_ks", "breg_alpha")

SMALL_EPSILONS = (0.01, 0.05, 0.1)
LARGE_EPSILONS = (0.0025, 0.0075)
DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class ExperimentConfig:
    suite: str = "small"
    matrices: tuple = ()
    epsilons: tuple = ()  # empty means the suite default
    alphas: tuple = DEFAULT_ALPHAS
    tol: float = 1e-10
    maxit: int = 0  # 0 means the suite default (100 small, 350 large)
    seed: int = 0
    preconditioners: tuple = ()  # empty means all for the suite
    appendix_mode: bool = False  # Krylov positive part instead of Nystrom
    rhs_mode: str = "random"
    eig_tol: float = 1e-2
    oversample: int = 60
    width_factor: float = 1.5
    diag_shift: float = 0.0
    cap: int = 4096
    out: str = ""

    def resolved_epsilons(self):
        if self.epsilons:
            return tuple(self.epsilons)
        return SMALL_EPSILONS if self.suite == "small" else LARGE_EPSILONS

    def resolved_maxit(self):
        if self.maxit:
            return self.maxit
        return 100 if self.suite == "small" else 350

    def resolved_preconditioners(self):
        if self.preconditioners:
            return tuple(self.preconditioners)
        return SMALL_PRECONDITIONERS if self.suite == "small" else LARGE_PRECONDITIONERS


_LIST_FIELDS = {"matrices": str, "epsilons": float, "alphas": float, "preconditioners": str}
_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def parse_config(path) -> ExperimentConfig:
    """Read a config file of ``key = value`` lines.

    ``#`` starts a comment, blank lines are skipped, list values are comma
    separated, booleans accept true/false/yes/no/on/off/1/0.  Keys match the
    ExperimentConfig field names.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    by_name = {f.name: f for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in by_name:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in _LIST_FIELDS:
            cast = _LIST_FIELDS[key]
            values[key] = tuple(cast(tok.strip()) for tok in value.split(",") if tok.strip())
        elif by_name[key].type == "bool" or isinstance(by_name[key].default, bool):
            low = value.lower()
            if low in _BOOL_TRUE:
                values[key] = True
            elif low in _BOOL_FALSE:
                values[key] = False
            else:
                raise ValueError(f"config line {lineno}: bad boolean {value!r}")
        elif isinstance(by_name[key].default, int) and not isinstance(by_name[key].default, bool):
            values[key] = int(value)
        elif isinstance(by_name[key].default, float):
            values[key] = float(value)
        else:
            values[key] = value
    return ExperimentConfig(**values)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _iter_cell(report) -> str:
    return str(report.iterations) if report.converged else "-"


def _rank_grid(n: int, epsilons) -> list:
    return [int(math.floor(n * eps)) for eps in epsilons]


def _eig_budget(eps: float, all_eps, base_tol: float, seed: int) -> EigsParams:
    budget = 60 if eps == min(all_eps) else 100
    return EigsParams(tol=base_tol, max_restarts=budget, slack=budget, seed=seed)


def _map_matrices(worker, paths):
    """Run the per-matrix worker, optionally across a thread pool.

    BREGPCG_THREADS sets the pool size (default 1, sequential).  Output
    chunks come back in input order either way, and every per-task seed is
    derived from the row identity, so the rows are the same regardless.
    """
    try:
        count = max(1, int(os.environ.get("BREGPCG_THREADS", "1")))
    except ValueError:
        count = 1
    paths = list(paths)
    if count <= 1 or len(paths) <= 1:
        chunks = [worker(p) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=min(count, len(paths))) as pool:
            chunks = list(pool.map(worker, paths))
    return [row for chunk in chunks for row in chunk]


def run_small_suite(cfg: ExperimentConfig):
    """Exact-truncation comparison suite.  Returns the CSV rows."""
    epsilons = cfg.resolved_epsilons()
    maxit = cfg.resolved_maxit()

    def worker(path):
        rows = []
        try:
            problem = load_problem(path, seed=rng.derive(cfg.seed, f"rhs|{path}"), rhs_mode=cfg.rhs_mode)
        except Exception as exc:  # per-row capture: skip the matrix, keep going
            log.error("skipping %s: %s", path, exc)
            return rows
        s, b, name = problem.S, problem.b, problem.name
        n = problem.n

        _, rep_none = pcg_solve(s, b, identity(), tol=cfg.tol, maxit=maxit)

        factor = None
        rep_ichol = None
        decomp = None
        try:
            factor = ic0(s, diag_shift=cfg.diag_shift)
            _, rep_ichol = pcg_solve(s, b, assemble(factor, label="ichol"), tol=cfg.tol, maxit=maxit)
        except Exception as exc:
            factor = None
            log.error("%s: incomplete factorization failed: %s", name, exc)
        if factor is not None:
            try:
                decomp = sym_eig(scaled_error(s, factor, cap=cfg.cap))
            except Exception as exc:
                log.error("%s: scaled error spectrum unavailable: %s", name, exc)

        for eps in epsilons:
            r = int(math.floor(n * eps))
            row = {key: "err" for key in SMALL_HEADER}
            row.update(matrix=name, n=n, r=r, iter_none=_iter_cell(rep_none))
            if factor is None:
                rows.append([row[k] for k in SMALL_HEADER])
                continue
            row["iter_ichol"] = _iter_cell(rep_ichol)
            if decomp is None or r >= n:
                rows.append([row[k] for k in SMALL_HEADER])
                continue
            selections = {}
            for rule, tag in (("rbld", "rbreg"), ("tsvd", "svd"), ("bld", "breg")):
                try:
                    idx = select_indices(decomp.values, r, rule)
                    selections[tag] = idx
                    p = assemble(factor, truncate(decomp, idx), label=tag)
                    _, rep = pcg_solve(s, b, p, tol=cfg.tol, maxit=maxit)
                    row[f"iter_{tag}"] = _iter_cell(rep)
                    row[f"cond_{tag}"] = _fmt(cond2_preconditioned(s, p, cap=cfg.cap))
                    forward, reverse = divergence_columns(s, p, cap=cfg.cap)
                    row[f"div_{tag}"] = _fmt(reverse if rule == "rbld" else forward)
                except Exception as exc:
                    log.error("%s r=%d %s: %s", name, r, tag, exc)
            if len(selections) == 3:
                row["truncations_coincide"] = str(
                    selections["rbreg"] == selections["svd"] == selections["breg"]
                ).lower()
            rows.append([row[k] for k in SMALL_HEADER])
        return rows

    rows = _map_matrices(worker, cfg.matrices)
    if cfg.out:
        write_csv(cfg.out, SMALL_HEADER, rows)
    return rows


def _large_row(name, n, label, r, alpha, built, report):
    note_parts = list(built.build_info.notes) if built is not None else []
    if report.residual_discrepancy:
        note_parts.append("residual-discrepancy")
    if not report.converged:
        note_parts.append(report.reason)
    build_matvecs = built.build_info.matvecs_s if built is not None else 0
    build_seconds = built.build_info.seconds if built is not None else 0.0
    return [
        name,
        n,
        label,
        "-" if r is None else r,
        "-" if alpha is None else _fmt(alpha),
        str(report.converged).lower(),
        _fmt(report.final_rel_residual),
        report.iterations,
        _fmt(build_seconds),
        _fmt(report.time_solve_s),
        build_matvecs + report.matvecs_S,
        ";".join(note_parts),
    ]


def _error_row(name, n, label, r, alpha, exc):
    return [
        name,
        n,
        label,
        "-" if r is None else r,
        "-" if alpha is None else _fmt(alpha),
        "false",
        "nan",
        0,
        "0",
        "0",
        0,
        f"err:{type(exc).__name__}",
    ]


def run_large_suite(cfg: ExperimentConfig):
    """Scalable-construction benchmark suite.  Returns the CSV rows."""
    epsilons = cfg.resolved_epsilons()
    maxit = cfg.resolved_maxit()
    wanted = cfg.resolved_preconditioners()
    positive_method = "krylov_schur" if cfg.appendix_mode else "nystrom"

    def worker(path):
        rows = []
        try:
            problem = load_problem(path, seed=rng.derive(cfg.seed, f"rhs|{path}"), rhs_mode=cfg.rhs_mode)
        except Exception as exc:
            log.error("skipping %s: %s", path, exc)
            return rows
        s, b, name = problem.S, problem.b, problem.name
        n = problem.n

        rep_none = None
        if "none" in wanted:
            _, rep_none = pcg_solve(s, b, identity(), tol=cfg.tol, maxit=maxit)

        factor = None
        factor_exc = None
        factor_seconds = 0.0
        try:
            started = time.perf_counter()
            factor = ic0(s, diag_shift=cfg.diag_shift)
            factor_seconds = time.perf_counter() - started
        except Exception as exc:
            factor_exc = exc
            log.error("%s: incomplete factorization failed: %s", name, exc)

        rep_ichol = None
        if factor is not None and "ichol" in wanted:
            p_ichol = assemble(factor, label="ichol")
            p_ichol.build_info.seconds = factor_seconds
            _, rep_ichol = pcg_solve(s, b, p_ichol, tol=cfg.tol, maxit=maxit)

        for eps in epsilons:
            r = int(math.floor(n * eps))
            eig_params = _eig_budget(eps, epsilons, cfg.eig_tol, 0)
            if rep_none is not None:
                rows.append(_large_row(name, n, "none", None, None, None, rep_none))
            if factor is None:
                for label in wanted:
                    if label in ("none",):
                        continue
                    rows.append(_error_row(name, n, label, r, None, factor_exc))
                continue
            if rep_ichol is not None:
                p_stub = assemble(factor, label="ichol")
                p_stub.build_info.seconds = factor_seconds
                rows.append(_large_row(name, n, "ichol", None, None, p_stub, rep_ichol))

            def bench(label, alpha, builder):
                seed = rng.derive(cfg.seed, f"{name}|{label}|{r}|{alpha}")
                try:
                    built = builder(seed)
                    _, rep = pcg_solve(s, b, built, tol=cfg.tol, maxit=maxit)
                    rows.append(_large_row(name, n, label, r, alpha, built, rep))
                except Exception as exc:
                    log.error("%s r=%d %s: %s", name, r, label, exc)
                    rows.append(_error_row(name, n, label, r, alpha, exc))

            sketch_for = lambda seed: SketchParams(
                oversample=cfg.oversample, width_factor=cfg.width_factor, seed=seed
            )
            if "nys" in wanted:
                bench(
                    "nys",
                    None,
                    lambda seed: build_randomized(s, factor, r, "nystrom", sketch_for(seed), label="nys"),
                )
            if "nys_indef" in wanted:
                bench(
                    "nys_indef",
                    None,
                    lambda seed: build_randomized(
                        s, factor, r, "nystrom_indefinite", sketch_for(seed), label="nys_indef"
                    ),
                )
            if "svd_ks" in wanted:
                bench(
                    "svd_ks",
                    None,
                    lambda seed: build_svd_krylov(
                        s,
                        factor,
                        r,
                        EigsParams(cfg.eig_tol, eig_params.max_restarts, eig_params.slack, seed),
                        allow_partial=True,
                        label="svd_ks",
                    ),
                )
            if "breg_alpha" in wanted:
                for alpha in cfg.alphas:
                    bench(
                        "breg_alpha",
                        alpha,
                        lambda seed, alpha=alpha: build_alpha(
                            s,
                            factor,
                            r,
                            alpha,
                            EigsParams(cfg.eig_tol, eig_params.max_restarts, eig_params.slack, seed),
                            positive_method=positive_method,
                            sketch_params=sketch_for(seed),
                            allow_partial=True,
                            label="breg_alpha",
                        ),
                    )
        return rows

    rows = _map_matrices(worker, cfg.matrices)
    if cfg.out:
        write_csv(cfg.out, LARGE_HEADER, rows)
    return rows


SPECTRUM_HEADER = ("index", "theta", "gamma_theta", "nu_theta", "abs_theta")


def spectrum_rows(s, factor, cap: int = 4096):
    """Scaled-error spectrum with both selection curves, descending."""
    from .bregman import gamma, nu

    decomp = sym_eig(scaled_error(s, factor, cap=cap))
    rows = []
    for i, theta in enumerate(decomp.values):
        if theta <= -1.0:  # the factor was not usable for curve values
            rows.append([i, _fmt(theta), "nan", "nan", _fmt(abs(theta))])
        else:
            rows.append([i, _fmt(theta), _fmt(gamma(theta)), _fmt(nu(theta)), _fmt(abs(theta))])
    return rows
