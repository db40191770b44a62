"""Matrix-free symmetric eigenvalue estimation by thick-restart Lanczos.

The solver targets the algebraically largest eigenvalues of a symmetric
operator (or the largest in magnitude, used for truncation-style spectral
approximations).  Restarts keep the converged Ritz pairs plus the leading
ones, full reorthogonalization keeps the basis clean, and everything is
driven by the pinned random streams, so a given (operator, params, seed)
triple reproduces bitwise.

Two wrappers specialize the solver to factorized systems: ``largest_part``
estimates the top of the scaled error Q^{-1} S Q^{-T} - I directly, and
``smallest_part`` reaches the bottom through the spectral shift
eta*I - Q^{-1} S Q^{-T}, which keeps everything matrix-free (no inner solves)
and maps shifted eigenvalues back as theta = (eta - 1) - lambda.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .bregman import LowRank
from .errors import EtaTooSmall, NoConvergence
from .sparse_core import CholFactor, CsrMatrix, spmv, tri_solve


class LinearOperator:
    """A symmetric operator given by its dimension and an apply callable."""

    def __init__(self, dimension: int, apply):
        self.dimension = dimension
        self._apply = apply

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v)


class CountingOperator(LinearOperator):
    """Wraps an operator and counts how many times it is applied."""

    def __init__(self, inner: LinearOperator):
        super().__init__(inner.dimension, inner.apply)
        self.count = 0

    def apply(self, v: np.ndarray) -> np.ndarray:
        self.count += 1
        return self._apply(v)


def operator_from_matrix(s: CsrMatrix) -> LinearOperator:
    if s.n_rows != s.n_cols:
        raise ValueError("operator matrix must be square")
    return LinearOperator(s.n_rows, lambda v: spmv(s, v))


def operator_from_dense(a: np.ndarray) -> LinearOperator:
    a = np.asarray(a, dtype=np.float64)
    return LinearOperator(a.shape[0], lambda v: a @ v)


def scaled_operator(s: CsrMatrix, q: CholFactor) -> LinearOperator:
    """v -> Q^{-1} S Q^{-T} v.  One S product and two triangular solves."""
    if s.n_rows != q.n:
        raise ValueError("matrix and factor orders differ")

    def apply(v):
        return tri_solve(q, spmv(s, tri_solve(q, v, transposed=True)))

    return LinearOperator(s.n_rows, apply)


def error_operator(s: CsrMatrix, q: CholFactor) -> LinearOperator:
    """v -> (Q^{-1} S Q^{-T} - I) v, the scaled error as an operator."""
    base = scaled_operator(s, q)
    return LinearOperator(base.dimension, lambda v: base.apply(v) - v)


def shifted_operator(op: LinearOperator, eta: float) -> LinearOperator:
    """v -> eta*v - op(v); flips the spectrum so its bottom becomes the top."""
    return LinearOperator(op.dimension, lambda v: eta * v - op.apply(v))


@dataclass
class EigsParams:
    """Knobs for the thick-restart solver.

    ``slack`` extra basis vectors ride along with the wanted ones, ``tol``
    is the relative Ritz residual target, and ``max_restarts`` bounds the
    number of restart cycles.
    """

    tol: float = 1e-2
    max_restarts: int = 60
    slack: int = 60
    seed: int = 0


@dataclass
class EigenEstimate:
    values: np.ndarray
    vectors: np.ndarray
    residual_norms: np.ndarray
    converged_count: int
    matvec_count: int


def lanczos_tr(
    op: LinearOperator, want: int, params: EigsParams | None = None, which: str = "largest"
) -> EigenEstimate:
    """Thick-restart Lanczos with full reorthogonalization.

    Parameters
    ----------
    op : LinearOperator
        Symmetric operator.
    want : int
        Number of eigenpairs to estimate.
    params : EigsParams
        Subspace dimension is want + slack; an eigenpair counts as converged
        when its Ritz residual is at most tol * max(|theta|, eps * n).
    which : str
        "largest" ranks Ritz values algebraically, "magnitude" by |theta|.
        Returned values are descending either way.

    Raises
    ------
    NoConvergence
        After max_restarts cycles with unconverged wanted pairs.  The
        exception carries the partial estimate.
    """
    if params is None:
        params = EigsParams()
    if which not in ("largest", "magnitude"):
        raise ValueError(f"unknown ranking {which!r}")
    n = op.dimension
    if want < 0:
        raise ValueError("want must be nonnegative")
    if want == 0:
        return EigenEstimate(np.zeros(0), np.zeros((n, 0)), np.zeros(0), 0, 0)
    m = want + params.slack
    if m > n:
        raise ValueError(f"subspace dimension {m} exceeds operator dimension {n}")

    eps = np.finfo(np.float64).eps
    v_basis = np.zeros((n, m + 1))
    v_basis[:, 0] = rng.unit_vector(params.seed, n)
    kept = 0
    theta_kept = np.zeros(0)
    coupling = np.zeros(0)
    matvecs = 0
    injections = 0

    for cycle in range(params.max_restarts):
        t_proj = np.zeros((m, m))
        if kept:
            t_proj[np.arange(kept), np.arange(kept)] = theta_kept
            t_proj[kept, :kept] = coupling
            t_proj[:kept, kept] = coupling
        beta = 0.0
        for j in range(kept, m):
            w = op.apply(v_basis[:, j])
            matvecs += 1
            coeffs = v_basis[:, : j + 1].T @ w
            w = w - v_basis[:, : j + 1] @ coeffs
            coeffs2 = v_basis[:, : j + 1].T @ w
            w = w - v_basis[:, : j + 1] @ coeffs2
            t_proj[j, j] = coeffs[j] + coeffs2[j]
            if j > kept:
                t_proj[j, j - 1] = t_proj[j - 1, j] = beta
            beta = float(np.linalg.norm(w))
            if beta <= n * eps * max(1.0, abs(t_proj[j, j])):
                # invariant subspace: continue in a fresh direction with
                # zero coupling so the projected matrix stays block diagonal
                injections += 1
                fresh = rng.normals(rng.derive(params.seed, f"inject{injections}"), n)
                for _ in range(2):
                    fresh = fresh - v_basis[:, : j + 1] @ (v_basis[:, : j + 1].T @ fresh)
                v_basis[:, j + 1] = fresh / np.linalg.norm(fresh)
                beta = 0.0
            else:
                v_basis[:, j + 1] = w / beta

        theta, ritz = np.linalg.eigh(t_proj)
        residuals = np.abs(beta * ritz[m - 1, :])
        if which == "largest":
            ranking = np.argsort(-theta, kind="stable")
        else:
            ranking = np.argsort(-np.abs(theta), kind="stable")
        converged = residuals <= params.tol * np.maximum(np.abs(theta), eps * n)
        top = ranking[:want]

        done = bool(np.all(converged[top]))
        if done or cycle == params.max_restarts - 1:
            order = top[np.argsort(-theta[top], kind="stable")]
            estimate = EigenEstimate(
                values=theta[order],
                vectors=v_basis[:, :m] @ ritz[:, order],
                residual_norms=residuals[order],
                converged_count=int(np.count_nonzero(converged[order])),
                matvec_count=matvecs,
            )
            if done:
                return estimate
            raise NoConvergence(
                f"{want - int(np.count_nonzero(converged[top]))} of {want} pairs "
                f"unconverged after {params.max_restarts} restarts",
                estimate=estimate,
            )

        keep_mask = np.zeros(m, dtype=bool)
        keep_mask[top] = True
        keep_mask |= converged
        keep_idx = ranking[keep_mask[ranking]][: m - 1]
        new_basis = v_basis[:, :m] @ ritz[:, keep_idx]
        kept = len(keep_idx)
        v_basis[:, :kept] = new_basis
        v_basis[:, kept] = v_basis[:, m]
        theta_kept = theta[keep_idx]
        coupling = beta * ritz[m - 1, keep_idx]

    raise AssertionError("unreachable")  # loop always returns or raises


def largest_part(s: CsrMatrix, q: CholFactor, r_plus: int, params: EigsParams) -> LowRank:
    """Leading eigenpairs of the scaled error, as a low-rank term.

    Runs the solver on Q^{-1} S Q^{-T} (positive definite, so Ritz values
    stay positive) and subtracts 1 from the estimates.
    """
    if r_plus == 0:
        return LowRank.empty(s.n_rows)
    try:
        est = lanczos_tr(scaled_operator(s, q), r_plus, params)
    except NoConvergence as exc:
        exc.low_rank = LowRank(exc.estimate.vectors, exc.estimate.values - 1.0)
        raise
    return LowRank(est.vectors, est.values - 1.0)


def smallest_estimate(
    s: CsrMatrix, q: CholFactor, r_minus: int, eta: float, params: EigsParams
) -> EigenEstimate:
    """Raw solver output for the shifted operator eta*I - Q^{-1} S Q^{-T}."""
    return lanczos_tr(shifted_operator(scaled_operator(s, q), eta), r_minus, params)


def smallest_from_estimate(est: EigenEstimate, eta: float) -> LowRank:
    """Map shifted eigenvalues back: theta = (eta - 1) - lambda."""
    lam = (eta - 1.0) - est.values
    if np.any(lam <= -1.0):
        raise EtaTooSmall(
            f"shift {eta} maps an estimate to {lam.min():.6g} <= -1; increase eta"
        )
    return LowRank(est.vectors, lam)


def smallest_part(
    s: CsrMatrix, q: CholFactor, r_minus: int, eta: float, params: EigsParams
) -> LowRank:
    """Smallest eigenpairs of the scaled error, reached through the shift.

    ``eta`` must be at least the top eigenvalue of Q^{-1} S Q^{-T}; a value
    that is too small surfaces as EtaTooSmall.  Only operator applications
    are used, never inner solves.
    """
    if r_minus == 0:
        return LowRank.empty(s.n_rows)
    try:
        est = smallest_estimate(s, q, r_minus, eta, params)
    except NoConvergence as exc:
        exc.low_rank = smallest_from_estimate(exc.estimate, eta)
        raise
    return smallest_from_estimate(est, eta)
