"""Log-determinant matrix divergence and rank-constrained eigenvalue selection.

The divergence between SPD matrices X and Y is

    D(X, Y) = trace(X Y^{-1}) - logdet(X Y^{-1}) - n,

which is nonnegative, zero only at X = Y, invariant under congruences, and
asymmetric in its arguments.  For a symmetric E with eigenvalues theta above
-1, the cost of *not* correcting an eigendirection is measured by one of two
scalar curves:

    gamma(t) = t - log(1 + t)            forward direction, D(I + E, I + W)
    nu(t)    = 1/(1 + t) + log(1 + t) - 1  reverse direction, D(I + W, I + E)

A rank-r correction W that copies r eigenpairs of E is optimal exactly when
it keeps the r eigenvalues with the largest curve value.  ``select_indices``
implements that rule for both curves and for plain magnitude truncation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dense_kernels import EigenDecomposition, dense_cholesky
from .errors import CapExceeded, EigenvalueOutOfDomain, InfeasibleLowRank, NotPositiveDefinite
from .sparse_core import CholFactor, CsrMatrix, tri_solve

DENSIFY_CAP = 4096
FEASIBILITY_MARGIN = 1e-12

TRUNCATION_RULES = ("bld", "rbld", "tsvd")


def _curve_domain(x: np.ndarray) -> None:
    if np.any(x <= -1.0):
        raise EigenvalueOutOfDomain("curve is undefined at or below -1")


def gamma(x):
    """gamma(t) = t - log(1 + t), nonnegative on (-1, inf), zero only at 0."""
    arr = np.asarray(x, dtype=np.float64)
    _curve_domain(arr)
    out = arr - np.log1p(arr)
    return out if arr.ndim else float(out)


def nu(x):
    """nu(t) = 1/(1 + t) + log(1 + t) - 1, nonnegative on (-1, inf), zero only at 0.

    Evaluated as log1p(t) - t/(1 + t), which is the same function but avoids
    cancelling two order-one terms, so the result never dips below zero.
    """
    arr = np.asarray(x, dtype=np.float64)
    _curve_domain(arr)
    out = np.log1p(arr) - arr / (1.0 + arr)
    return out if arr.ndim else float(out)


def divergence_ld(x, y) -> float:
    """Log-determinant divergence D(X, Y) between SPD matrices.

    Computed through Cholesky factors and triangular solves; no explicit
    inverse is ever formed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"arguments have shapes {x.shape} and {y.shape}")
    try:
        lx = dense_cholesky(x)
    except NotPositiveDefinite:
        raise NotPositiveDefinite("first argument is not positive definite", which="X") from None
    try:
        ly = dense_cholesky(y)
    except NotPositiveDefinite:
        raise NotPositiveDefinite("second argument is not positive definite", which="Y") from None
    half = scipy.linalg.solve_triangular(ly, x, lower=True)
    whole = scipy.linalg.solve_triangular(ly, half.T, lower=True)
    trace = float(np.trace(whole))
    logdet_gap = 2.0 * float(np.sum(np.log(np.diag(lx))) - np.sum(np.log(np.diag(ly))))
    return trace - logdet_gap - x.shape[0]


def scaled_error(s: CsrMatrix, q: CholFactor, cap: int = DENSIFY_CAP) -> np.ndarray:
    """Dense scaled factorization error Q^{-1} S Q^{-T} - I.

    Formed by triangular-solve sweeps against the densified S and
    symmetrized before returning.  Guarded by ``cap`` because the result is
    a full n-by-n array.
    """
    if s.n_rows != s.n_cols:
        raise ValueError("matrix must be square")
    if s.n_rows != q.n:
        raise ValueError(f"matrix order {s.n_rows} does not match factor order {q.n}")
    n = s.n_rows
    if n > cap:
        raise CapExceeded(f"order {n} exceeds the densification cap {cap}")
    half = tri_solve(q, s.to_dense())
    whole = tri_solve(q, half.T)
    err = (whole + whole.T) / 2.0
    err[np.diag_indices(n)] -= 1.0
    return err


def select_indices(values, r: int, rule: str):
    """Positions of the r eigenvalues a rank-r correction should keep.

    Parameters
    ----------
    values : array
        Eigenvalues in descending order.  For the divergence rules every
        value must lie in (-1, inf).
    r : int
        How many to keep, 0 <= r < len(values).
    rule : str
        "bld" keeps the largest gamma values, "rbld" the largest nu values,
        "tsvd" the largest magnitudes.  Ties go to the smaller index.

    Returns
    -------
    tuple of int, ascending.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("eigenvalues must be a vector")
    if np.any(np.diff(values) > 0.0):
        raise ValueError("eigenvalues must be in descending order")
    if not 0 <= r < len(values):
        raise ValueError(f"rank {r} must satisfy 0 <= r < {len(values)}")
    if rule not in TRUNCATION_RULES:
        raise ValueError(f"unknown truncation rule {rule!r}")
    if rule == "bld":
        scores = gamma(values)
    elif rule == "rbld":
        scores = nu(values)
    else:
        scores = np.abs(values)
    order = np.argsort(-scores, kind="stable")
    return tuple(sorted(int(i) for i in order[:r]))


@dataclass(frozen=True, eq=False)
class LowRank:
    """Symmetric low-rank term Z diag(lam) Z^T with orthonormal columns."""

    Z: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.Z, dtype=np.float64)
        lam = np.asarray(self.lam, dtype=np.float64)
        if z.ndim != 2:
            raise ValueError("Z must be a matrix")
        if lam.shape != (z.shape[1],):
            raise ValueError("lam must have one value per column of Z")
        object.__setattr__(self, "Z", z)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def rank(self) -> int:
        return self.Z.shape[1]

    @classmethod
    def empty(cls, n: int) -> "LowRank":
        return cls(np.zeros((n, 0)), np.zeros(0))

    def as_dense(self) -> np.ndarray:
        return (self.Z * self.lam) @ self.Z.T

    def validate(self, ortho_tol: float = 1e-8) -> None:
        """Check orthonormal columns and eigenvalues safely above -1."""
        if self.rank:
            gram_gap = np.abs(self.Z.T @ self.Z - np.eye(self.rank)).max()
            if gram_gap > ortho_tol:
                raise ValueError(f"columns are not orthonormal (gap {gram_gap:.2e})")
        if np.any(1.0 + self.lam <= FEASIBILITY_MARGIN):
            raise InfeasibleLowRank("low-rank eigenvalue at or below -1")


def truncate(decomp: EigenDecomposition, indices) -> LowRank:
    """Copy the eigenpairs at ``indices`` into a low-rank term, unmodified.

    Eigenvalues within ``FEASIBILITY_MARGIN`` of -1 are rejected rather than
    clamped, since I + W must stay positive definite downstream.
    """
    idx = np.asarray(tuple(indices), dtype=np.int64)
    if len(idx) != len(set(idx.tolist())):
        raise ValueError("indices must be distinct")
    if len(idx) and (idx.min() < 0 or idx.max() >= len(decomp.values)):
        raise ValueError("index out of range")
    lam = decomp.values[idx]
    if np.any(1.0 + lam <= FEASIBILITY_MARGIN):
        raise InfeasibleLowRank("selected eigenvalue at or below -1")
    return LowRank(decomp.vectors[:, idx], lam)
