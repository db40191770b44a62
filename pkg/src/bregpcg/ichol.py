"""Zero-fill incomplete Cholesky factorization.

Computes a lower-triangular L with the sparsity pattern of the lower
triangle of S (stored zeros included) such that L L^T agrees with S on that
pattern.  The row recurrence runs in a fixed order, off-diagonals in
ascending column order and the pivot last, so results are deterministic.
When the pattern admits no fill at all this reduces to the exact Cholesky
factorization.
"""

import math

import numpy as np

from .errors import Breakdown
from .sparse_core import CholFactor, CsrMatrix


def ic0(s: CsrMatrix, diag_shift: float = 0.0) -> CholFactor:
    """Incomplete Cholesky with zero fill.

    Parameters
    ----------
    s : CsrMatrix
        Symmetric matrix with strictly positive diagonal.  Only the stored
        lower triangle is accessed.
    diag_shift : float
        When nonzero, factor S + diag_shift * diag(S) instead.  A small
        positive shift is the usual retry after a Breakdown.

    Raises
    ------
    Breakdown
        When a computed pivot is nonpositive.  Carries the row index.
    """
    if s.n_rows != s.n_cols:
        raise ValueError("matrix must be square")
    lower = s.lower_triangle()
    n = s.n_rows
    row_ptr = lower.row_ptr
    cols = lower.col_idx
    vals = np.array(lower.values)  # mutable working copy, becomes L

    ends = row_ptr[1:] - 1
    if np.any(np.diff(row_ptr) == 0) or np.any(cols[ends] != np.arange(n)):
        raise ValueError("every row needs a stored diagonal entry")
    if np.any(vals[ends] <= 0.0):
        raise ValueError("matrix diagonal must be strictly positive")
    if diag_shift:
        vals[ends] *= 1.0 + diag_shift

    for i in range(n):
        lo, hi = row_ptr[i], row_ptr[i + 1]
        cols_i = cols[lo : hi - 1]
        for t in range(lo, hi - 1):
            j = cols[t]
            jlo, jhi = row_ptr[j], row_ptr[j + 1]
            # dot product of rows i and j over their shared columns before j
            common, ia, ib = np.intersect1d(
                cols_i[: t - lo], cols[jlo : jhi - 1], assume_unique=True, return_indices=True
            )
            acc = float(np.dot(vals[lo + ia], vals[jlo + ib])) if len(common) else 0.0
            vals[t] = (vals[t] - acc) / vals[jhi - 1]
        pivot = vals[hi - 1] - float(np.dot(vals[lo : hi - 1], vals[lo : hi - 1]))
        if pivot <= 0.0:
            raise Breakdown(i)
        vals[hi - 1] = math.sqrt(pivot)

    return CholFactor(CsrMatrix(n, n, row_ptr, cols, vals))
