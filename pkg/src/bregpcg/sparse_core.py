"""Compressed sparse row matrices and the kernels built on them.

Dense vectors and matrices are plain float64 numpy arrays throughout the
package; this module owns the sparse side.  Kernels are sequential and
deterministic: entries combine row by row in ascending column order, exactly
as the textbook double loop would, so repeated runs agree bitwise.

Explicit zeros are legal stored entries.  They matter: incomplete
factorizations work with the sparsity pattern, and a stored zero is part of
the pattern even though it does not change any product.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse
import scipy.sparse.linalg


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """CSR storage with strictly increasing column indices in every row."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows + 1")
        if len(row_ptr) == 0 or row_ptr[0] != 0 or row_ptr[-1] != len(values):
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if col_idx.shape != values.shape:
            raise ValueError("col_idx and values must have equal length")
        if len(col_idx):
            if col_idx.min() < 0 or col_idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
        if len(col_idx) > 1:
            # strictly increasing within a row: a nonpositive jump is only
            # legal where a new row starts
            jumps = np.diff(col_idx)
            new_row = np.zeros(len(col_idx), dtype=bool)
            starts = row_ptr[1:-1]
            new_row[starts[starts < len(col_idx)]] = True
            if np.any((jumps <= 0) & ~new_row[1:]):
                raise ValueError("column indices must increase strictly within each row")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix values must be finite")
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @cached_property
    def _sp(self) -> scipy.sparse.csr_matrix:
        mat = scipy.sparse.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False
        )
        mat.has_sorted_indices = True
        return mat

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        return self._sp

    @classmethod
    def from_scipy(cls, mat) -> "CsrMatrix":
        csr = scipy.sparse.csr_matrix(mat).copy()
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(
            n_rows=csr.shape[0],
            n_cols=csr.shape[1],
            row_ptr=csr.indptr,
            col_idx=csr.indices,
            values=csr.data,
        )

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "CsrMatrix":
        """Build from triples.  Duplicates are summed; explicit zeros survive."""
        coo = scipy.sparse.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n_rows, n_cols)
        )
        return cls.from_scipy(coo)

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        """Build from a dense array.  Entries that are exactly zero are dropped."""
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(a, dtype=np.float64)))

    def to_dense(self) -> np.ndarray:
        return self._sp.toarray()

    def transpose(self) -> "CsrMatrix":
        return CsrMatrix.from_scipy(self._sp.T)

    def diagonal(self) -> np.ndarray:
        return self._sp.diagonal()

    def lower_triangle(self) -> "CsrMatrix":
        """Stored entries on or below the diagonal, pattern preserved."""
        mask = self.col_idx <= np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))
        keep = np.flatnonzero(mask)
        counts = np.bincount(
            np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))[keep],
            minlength=self.n_rows,
        )
        row_ptr = np.concatenate([[0], np.cumsum(counts)])
        return CsrMatrix(self.n_rows, self.n_cols, row_ptr, self.col_idx[keep], self.values[keep])

    def row(self, i):
        """(columns, values) views of stored row ``i``."""
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def __matmul__(self, x):
        return spmv(self, x)


@dataclass(frozen=True, eq=False)
class CholFactor:
    """Sparse lower-triangular factor with strictly positive diagonal."""

    L: CsrMatrix

    def __post_init__(self):
        L = self.L
        if L.n_rows != L.n_cols:
            raise ValueError("triangular factor must be square")
        row_of = np.repeat(np.arange(L.n_rows), np.diff(L.row_ptr))
        if np.any(L.col_idx > row_of):
            raise ValueError("factor has entries above the diagonal")
        ends = L.row_ptr[1:] - 1
        if np.any(np.diff(L.row_ptr) == 0) or np.any(L.col_idx[ends] != np.arange(L.n_rows)):
            raise ValueError("factor must store every diagonal entry")
        if np.any(L.values[ends] <= 0.0):
            raise ValueError("factor diagonal must be strictly positive")

    @property
    def n(self) -> int:
        return self.L.n_rows

    @cached_property
    def _lower(self):
        return self.L.to_scipy()

    @cached_property
    def _upper(self):
        return self.L.to_scipy().T.tocsr()

    def diagonal(self) -> np.ndarray:
        return self.L.diagonal()

    def to_dense(self) -> np.ndarray:
        return self.L.to_dense()


def spmv(a: CsrMatrix, x) -> np.ndarray:
    """Matrix-vector product with row-major, ascending-column accumulation."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n_cols,):
        raise ValueError(f"operand has shape {x.shape}, expected ({a.n_cols},)")
    return a.to_scipy() @ x


def tri_solve(factor: CholFactor, b, transposed: bool = False) -> np.ndarray:
    """Solve L y = b, or L^T y = b when ``transposed``.

    ``b`` may be a vector or a dense matrix of stacked right-hand sides.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factor.n:
        raise ValueError(f"right-hand side has leading size {b.shape[0]}, expected {factor.n}")
    if transposed:
        return scipy.sparse.linalg.spsolve_triangular(factor._upper, b, lower=False)
    return scipy.sparse.linalg.spsolve_triangular(factor._lower, b, lower=True)


def sparse_ata(a: CsrMatrix) -> CsrMatrix:
    """Normal-equations matrix A^T A with exactly mirrored off-diagonals.

    The strictly lower triangle is computed once and mirrored, so the result
    is symmetric entry for entry, not merely up to roundoff.  Columns of A
    with no entries simply produce a zero diagonal entry here; downstream
    factorizations will reject it.
    """
    sp = a.to_scipy()
    prod = (sp.T @ sp).tocsr()
    low = scipy.sparse.tril(prod, k=-1).tocsr()
    diag = scipy.sparse.diags(prod.diagonal(), 0, shape=prod.shape)
    return CsrMatrix.from_scipy(low + low.T + diag)
