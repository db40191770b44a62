"""Preconditioning for symmetric positive definite systems: an approximate
factorization corrected by a low-rank term chosen under the log-determinant
matrix divergence, with Krylov and randomized spectral approximations and a
preconditioned conjugate gradient benchmark harness.
"""

from .bregman import (
    LowRank,
    divergence_ld,
    gamma,
    nu,
    scaled_error,
    select_indices,
    truncate,
)
from .eigsolve import (
    CountingOperator,
    EigenEstimate,
    EigsParams,
    LinearOperator,
    error_operator,
    lanczos_tr,
    largest_part,
    operator_from_dense,
    operator_from_matrix,
    scaled_operator,
    shifted_operator,
    smallest_estimate,
    smallest_from_estimate,
    smallest_part,
)
from .errors import (
    Breakdown,
    CapExceeded,
    EigenvalueOutOfDomain,
    EtaTooSmall,
    IndefinitePreconditionerDetected,
    InfeasibleLowRank,
    NoConvergence,
    NotPositiveDefinite,
    ParseError,
    RankCollapse,
    UnsupportedFormat,
)
from .harness import (
    LARGE_HEADER,
    SMALL_HEADER,
    SPECTRUM_HEADER,
    ExperimentConfig,
    parse_config,
    run_large_suite,
    run_small_suite,
    spectrum_rows,
    write_csv,
)
from .ichol import ic0
from .matio import (
    ProblemInstance,
    load_problem,
    make_rhs,
    read_matrix_market,
    reads_matrix_market,
    write_matrix_market,
)
from .pcg import SolveReport, cond2_preconditioned, divergence_columns, pcg_solve
from .precond import (
    AlphaSplit,
    BuildInfo,
    Preconditioner,
    apply_inverse,
    assemble,
    build_alpha,
    build_exact,
    build_randomized,
    build_svd_krylov,
    identity,
    split_rank,
)
from .sketch import SketchParams, gaussian_sketch, nystrom, nystrom_indefinite, rsvd
from .sparse_core import CholFactor, CsrMatrix, sparse_ata, spmv, tri_solve

__version__ = "0.1.0"

__all__ = [
    "AlphaSplit",
    "Breakdown",
    "BuildInfo",
    "CapExceeded",
    "CholFactor",
    "CountingOperator",
    "CsrMatrix",
    "EigenEstimate",
    "EigenvalueOutOfDomain",
    "EigsParams",
    "EtaTooSmall",
    "ExperimentConfig",
    "IndefinitePreconditionerDetected",
    "InfeasibleLowRank",
    "LARGE_HEADER",
    "LinearOperator",
    "LowRank",
    "NoConvergence",
    "NotPositiveDefinite",
    "ParseError",
    "Preconditioner",
    "ProblemInstance",
    "RankCollapse",
    "SMALL_HEADER",
    "SPECTRUM_HEADER",
    "SketchParams",
    "SolveReport",
    "UnsupportedFormat",
    "apply_inverse",
    "assemble",
    "build_alpha",
    "build_exact",
    "build_randomized",
    "build_svd_krylov",
    "cond2_preconditioned",
    "divergence_columns",
    "divergence_ld",
    "error_operator",
    "gamma",
    "gaussian_sketch",
    "ic0",
    "identity",
    "lanczos_tr",
    "largest_part",
    "load_problem",
    "make_rhs",
    "nu",
    "nystrom",
    "nystrom_indefinite",
    "operator_from_dense",
    "operator_from_matrix",
    "parse_config",
    "pcg_solve",
    "read_matrix_market",
    "reads_matrix_market",
    "rsvd",
    "run_large_suite",
    "run_small_suite",
    "scaled_error",
    "scaled_operator",
    "select_indices",
    "shifted_operator",
    "smallest_estimate",
    "smallest_from_estimate",
    "smallest_part",
    "sparse_ata",
    "spectrum_rows",
    "split_rank",
    "spmv",
    "tri_solve",
    "truncate",
    "write_csv",
    "write_matrix_market",
]
