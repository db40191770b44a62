import csv
import subprocess
import sys

import numpy as np
import pytest

from bregpcg import (
    CsrMatrix,
    ExperimentConfig,
    LARGE_HEADER,
    SMALL_HEADER,
    SPECTRUM_HEADER,
    ic0,
    parse_config,
    run_large_suite,
    run_small_suite,
    spectrum_rows,
    write_matrix_market,
)
from bregpcg.bregman import gamma, nu
from conftest import bumped_band


TIMING_COLUMNS = {LARGE_HEADER.index("construction_s"), LARGE_HEADER.index("solve_s")}


def write_instance(path, dense):
    write_matrix_market(path, CsrMatrix.from_dense(dense))
    return str(path)


def strip_timing(rows):
    return [
        [cell for i, cell in enumerate(row) if i not in TIMING_COLUMNS] for row in rows
    ]


def test_headers_are_pinned():
    assert SMALL_HEADER == [
        "matrix",
        "n",
        "r",
        "iter_none",
        "iter_ichol",
        "iter_rbreg",
        "iter_svd",
        "iter_breg",
        "cond_rbreg",
        "cond_svd",
        "cond_breg",
        "div_rbreg",
        "div_svd",
        "div_breg",
        "truncations_coincide",
    ]
    assert LARGE_HEADER == [
        "matrix",
        "n",
        "preconditioner",
        "r",
        "alpha",
        "converged",
        "rel_residual",
        "iterations",
        "construction_s",
        "solve_s",
        "matvecs_S",
        "note",
    ]
    assert SPECTRUM_HEADER == ("index", "theta", "gamma_theta", "nu_theta", "abs_theta")


def test_parse_config_full(tmp_path):
    text = """
# benchmark setup
suite = large
matrices = a.mtx, b.mtx   # two inputs
epsilons = 0.01, 0.05
alphas = 0.0, 1.0
tol = 1e-8
maxit = 250
seed = 7
appendix_mode = yes
preconditioners = none, breg_alpha
rhs_mode = atb
oversample = 30
width_factor = 2.0
"""
    path = tmp_path / "bench.cfg"
    path.write_text(text)
    cfg = parse_config(path)
    assert cfg.suite == "large"
    assert cfg.matrices == ("a.mtx", "b.mtx")
    assert cfg.epsilons == (0.01, 0.05)
    assert cfg.alphas == (0.0, 1.0)
    assert cfg.tol == 1e-8
    assert cfg.maxit == 250
    assert cfg.seed == 7
    assert cfg.appendix_mode is True
    assert cfg.preconditioners == ("none", "breg_alpha")
    assert cfg.rhs_mode == "atb"
    assert cfg.oversample == 30
    assert cfg.width_factor == 2.0


def test_parse_config_rejects_unknown_and_malformed(tmp_path):
    bad_key = tmp_path / "k.cfg"
    bad_key.write_text("verbosity = 3\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_config(bad_key)
    bad_line = tmp_path / "l.cfg"
    bad_line.write_text("just some words\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_config(bad_line)
    bad_bool = tmp_path / "b.cfg"
    bad_bool.write_text("appendix_mode = maybe\n")
    with pytest.raises(ValueError, match="bad boolean"):
        parse_config(bad_bool)


def test_config_defaults_resolve_per_suite():
    small = ExperimentConfig(suite="small")
    assert small.resolved_epsilons() == (0.01, 0.05, 0.1)
    assert small.resolved_maxit() == 100
    assert "breg" in small.resolved_preconditioners()
    large = ExperimentConfig(suite="large")
    assert large.resolved_epsilons() == (0.0025, 0.0075)
    assert large.resolved_maxit() == 350
    assert "breg_alpha" in large.resolved_preconditioners()


def test_small_suite_rows_and_csv(tmp_path):
    m1 = write_instance(tmp_path / "band_a.mtx", bumped_band(60, seed=1))
    m2 = write_instance(tmp_path / "band_b.mtx", bumped_band(80, seed=2))
    out = tmp_path / "small.csv"
    cfg = ExperimentConfig(suite="small", matrices=(m1, m2), seed=3, out=str(out))
    rows = run_small_suite(cfg)
    # one row per (matrix, epsilon)
    assert len(rows) == 2 * 3
    for row in rows:
        assert len(row) == len(SMALL_HEADER)
    names = {row[0] for row in rows}
    assert names == {"band_a", "band_b"}
    ranks = [row[2] for row in rows if row[0] == "band_a"]
    assert ranks == [0, 3, 6]  # floor(60 * eps)
    with open(out) as handle:
        reader = list(csv.reader(handle))
    assert reader[0] == SMALL_HEADER
    assert len(reader) == 1 + len(rows)


def test_small_suite_exact_completion_converges_fast(tmp_path):
    gen = np.random.default_rng(5)
    n, r = 60, 6  # rank 6 = floor(60 * 0.1), hit by the last epsilon
    low = np.tril(gen.standard_normal((n, n)), -1)
    low[np.abs(low) < 1.7] = 0.0
    low = 0.2 * low + np.diag(gen.uniform(1.0, 2.0, size=n))
    z, _ = np.linalg.qr(gen.standard_normal((n, r)))
    lam = gen.uniform(-0.4, 1.0, size=r)
    dense = low @ (np.eye(n) + (z * lam) @ z.T) @ low.T
    dense = (dense + dense.T) / 2.0
    # IC(0) needs the factor pattern to live inside the matrix pattern; the
    # product above is effectively dense, so zero-fill loss stays small but
    # nonzero.  The exact-truncation columns still close most of the gap.
    path = write_instance(tmp_path / "completed.mtx", dense)
    cfg = ExperimentConfig(suite="small", matrices=(path,), seed=11)
    rows = run_small_suite(cfg)
    by_rank = {row[2]: row for row in rows}
    full = by_rank[6]
    iter_ichol = int(full[SMALL_HEADER.index("iter_ichol")])
    iter_breg = int(full[SMALL_HEADER.index("iter_breg")])
    assert iter_breg <= iter_ichol


def test_small_suite_coincidence_flag(tmp_path):
    # a PSD low-rank completion gives a PSD scaled error, where all three
    # truncation rules agree
    gen = np.random.default_rng(7)
    n = 50
    low = np.tril(gen.standard_normal((n, n)), -1)
    low[np.abs(low) < 1.7] = 0.0
    low = 0.15 * low + np.eye(n)
    z, _ = np.linalg.qr(gen.standard_normal((n, 10)))
    lam = gen.uniform(0.3, 1.5, size=10)
    dense = low @ (np.eye(n) + (z * lam) @ z.T) @ low.T
    dense = (dense + dense.T) / 2.0
    path = write_instance(tmp_path / "psd_comp.mtx", dense)
    rows = run_small_suite(ExperimentConfig(suite="small", matrices=(path,), seed=13))
    flag_col = SMALL_HEADER.index("truncations_coincide")
    flags = {row[flag_col] for row in rows if row[2] != 0}
    assert "true" in flags or "false" in flags  # populated either way
    # divergence columns are numbers wherever the flag is populated
    div_col = SMALL_HEADER.index("div_breg")
    for row in rows:
        if row[flag_col] in ("true", "false"):
            float(row[div_col])


def test_small_suite_empty_matrix_list(tmp_path):
    out = tmp_path / "empty.csv"
    rows = run_small_suite(ExperimentConfig(suite="small", matrices=(), out=str(out)))
    assert rows == []
    with open(out) as handle:
        reader = list(csv.reader(handle))
    assert reader == [SMALL_HEADER]


def test_small_suite_skips_unreadable_matrix(tmp_path):
    good = write_instance(tmp_path / "fine.mtx", bumped_band(40, seed=4))
    missing = str(tmp_path / "not_there.mtx")
    rows = run_small_suite(
        ExperimentConfig(suite="small", matrices=(missing, good), seed=1)
    )
    assert {row[0] for row in rows} == {"fine"}


def test_large_suite_structure(tmp_path):
    path = write_instance(tmp_path / "wide.mtx", bumped_band(120, seed=8))
    cfg = ExperimentConfig(
        suite="large",
        matrices=(path,),
        epsilons=(0.05,),
        alphas=(0.0, 0.5, 1.0),
        seed=5,
        oversample=20,
    )
    rows = run_large_suite(cfg)
    labels = [row[LARGE_HEADER.index("preconditioner")] for row in rows]
    assert labels.count("none") == 1
    assert labels.count("ichol") == 1
    assert labels.count("nys") == 1
    assert labels.count("nys_indef") == 1
    assert labels.count("svd_ks") == 1
    assert labels.count("breg_alpha") == 3  # one per alpha
    ichol_row = rows[labels.index("ichol")]
    assert ichol_row[LARGE_HEADER.index("r")] == "-"
    assert ichol_row[LARGE_HEADER.index("alpha")] == "-"
    alphas = [
        row[LARGE_HEADER.index("alpha")]
        for row in rows
        if row[LARGE_HEADER.index("preconditioner")] == "breg_alpha"
    ]
    assert [float(a) for a in alphas] == [0.0, 0.5, 1.0]
    r_col = LARGE_HEADER.index("r")
    assert {row[r_col] for row in rows if row[r_col] != "-"} == {6}  # floor(120*0.05)


def test_large_suite_rerun_is_deterministic(tmp_path):
    path = write_instance(tmp_path / "det.mtx", bumped_band(90, seed=9))
    cfg = ExperimentConfig(
        suite="large",
        matrices=(path,),
        epsilons=(0.05,),
        alphas=(0.5,),
        seed=21,
        oversample=20,
    )
    first = strip_timing(run_large_suite(cfg))
    second = strip_timing(run_large_suite(cfg))
    assert first == second


def test_thread_count_does_not_change_rows(tmp_path, monkeypatch):
    paths = tuple(
        write_instance(tmp_path / f"t{i}.mtx", bumped_band(70, seed=30 + i))
        for i in range(3)
    )
    cfg = ExperimentConfig(
        suite="large", matrices=paths, epsilons=(0.05,), alphas=(0.5,), seed=2, oversample=20
    )
    monkeypatch.delenv("BREGPCG_THREADS", raising=False)
    sequential = strip_timing(run_large_suite(cfg))
    monkeypatch.setenv("BREGPCG_THREADS", "3")
    threaded = strip_timing(run_large_suite(cfg))
    assert sequential == threaded


def test_small_suite_rerun_is_deterministic(tmp_path):
    path = write_instance(tmp_path / "det2.mtx", bumped_band(60, seed=10))
    cfg = ExperimentConfig(suite="small", matrices=(path,), seed=31)
    # small rows contain no timing columns at all, so full equality holds
    assert run_small_suite(cfg) == run_small_suite(cfg)


def test_spectrum_rows_match_curves():
    s = CsrMatrix.from_dense(bumped_band(40, seed=12))
    rows = spectrum_rows(s, ic0(s))
    assert len(rows) == 40
    thetas = [float(row[1]) for row in rows]
    assert thetas == sorted(thetas, reverse=True)
    for row in rows:
        theta = float(row[1])
        assert float(row[2]) == pytest.approx(gamma(theta), rel=1e-12)
        assert float(row[3]) == pytest.approx(nu(theta), rel=1e-12)
        assert float(row[4]) == pytest.approx(abs(theta), rel=1e-15)


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "bregpcg.cli", *args],
        capture_output=True,
        text=True,
    )


def test_cli_solve_smoke(tmp_path):
    path = write_instance(tmp_path / "cli_a.mtx", bumped_band(50, seed=14))
    proc = run_cli("solve", path, "--precond", "breg", "--rank", "4", "--tol", "1e-10")
    assert proc.returncode == 0, proc.stderr
    assert "converged" in proc.stdout.lower()


def test_cli_solve_missing_file_hints_download(tmp_path):
    proc = run_cli("solve", str(tmp_path / "absent.mtx"))
    assert proc.returncode == 2
    assert "sparse.tamu.edu" in proc.stderr


def test_cli_bench_writes_csv(tmp_path):
    path = write_instance(tmp_path / "cli_b.mtx", bumped_band(60, seed=15))
    out = tmp_path / "rows.csv"
    proc = run_cli("bench", path, "--suite", "small", "--out", str(out), "--seed", "3")
    assert proc.returncode == 0, proc.stderr
    with open(out) as handle:
        reader = list(csv.reader(handle))
    assert reader[0] == SMALL_HEADER
    assert len(reader) > 1


def test_cli_bench_no_matrices_exits_two(tmp_path):
    proc = run_cli("bench", "--suite", "small", "--out", str(tmp_path / "x.csv"))
    assert proc.returncode == 2
    assert "sparse.tamu.edu" in proc.stderr


def test_cli_spectrum_writes_csv(tmp_path):
    path = write_instance(tmp_path / "cli_c.mtx", bumped_band(40, seed=16))
    out = tmp_path / "spec.csv"
    proc = run_cli("spectrum", path, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    with open(out) as handle:
        reader = list(csv.reader(handle))
    assert reader[0] == list(SPECTRUM_HEADER)
    assert len(reader) == 41
