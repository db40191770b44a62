"""Randomized low-rank approximation: Nystrom variants and randomized SVD.

All sketches draw from the pinned generator, so a fixed (operator, rank,
seed) triple reproduces bitwise.  Operator application counts are exact and
part of the contract: ``nystrom`` applies the operator r + oversample times,
``nystrom_indefinite`` ceil(width_factor * r) times.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import rng
from .bregman import LowRank
from .dense_kernels import sym_eig, thin_qr
from .eigsolve import LinearOperator
from .errors import RankCollapse


@dataclass
class SketchParams:
    """oversample widens the PSD sketch additively; width_factor the
    indefinite sketch multiplicatively."""

    oversample: int = 60
    width_factor: float = 1.5
    seed: int = 0


def gaussian_sketch(n: int, k: int, seed: int) -> np.ndarray:
    """n-by-k standard normal test matrix from the pinned stream."""
    if n < 0 or k < 0:
        raise ValueError("sketch dimensions must be nonnegative")
    return rng.normal_matrix(seed, n, k)


def _apply_columns(op: LinearOperator, block: np.ndarray) -> np.ndarray:
    out = np.empty_like(block)
    for i in range(block.shape[1]):
        out[:, i] = op.apply(block[:, i])
    return out


def _nystrom_core(op: LinearOperator, r: int, width: int, seed: int) -> LowRank:
    n = op.dimension
    omega = gaussian_sketch(n, width, seed)
    sample = _apply_columns(op, omega)  # exactly `width` applications
    core = omega.T @ sample
    core_eig = sym_eig((core + core.T) / 2.0)

    # truncate the core by magnitude before pseudo-inverting
    by_magnitude = np.argsort(-np.abs(core_eig.values), kind="stable")[:r]
    vals = core_eig.values[by_magnitude]
    vecs = core_eig.vectors[:, by_magnitude]
    scale = np.abs(core_eig.values).max() if len(core_eig.values) else 0.0
    threshold = n * np.finfo(np.float64).eps * scale
    usable = np.abs(vals) > threshold
    if int(usable.sum()) < r:
        warnings.warn(
            f"sketch core supports rank {int(usable.sum())} of the requested {r}",
            RankCollapse,
            stacklevel=3,
        )
    vals = vals[usable]
    vecs = vecs[:, usable]
    if vals.size == 0:
        return LowRank.empty(n)

    # sample * vecs * diag(|vals|^{-1/2}) has the same outer product as the
    # Nystrom reconstruction; compress it to eigen form through a thin QR
    half = sample @ (vecs / np.sqrt(np.abs(vals)))
    q_half, r_half = thin_qr(half)
    small = (r_half * np.sign(vals)) @ r_half.T
    small_eig = sym_eig((small + small.T) / 2.0)
    return LowRank(q_half @ small_eig.vectors, small_eig.values)


def nystrom(op: LinearOperator, r: int, params: SketchParams | None = None) -> LowRank:
    """Nystrom approximation of a PSD operator, in eigenvalue form.

    Sketch width is r + oversample and the operator is applied exactly that
    many times.  If the core supports fewer than r directions the result has
    the achievable rank and a RankCollapse warning is issued.
    """
    params = params or SketchParams()
    if r < 0:
        raise ValueError("rank must be nonnegative")
    if r == 0:
        return LowRank.empty(op.dimension)
    return _nystrom_core(op, r, r + params.oversample, params.seed)


def nystrom_indefinite(op: LinearOperator, r: int, params: SketchParams | None = None) -> LowRank:
    """Nystrom for symmetric indefinite operators.

    Uses a multiplicatively widened sketch of ceil(width_factor * r) columns
    and truncates the core by magnitude, which preserves the sign of each
    kept direction.
    """
    params = params or SketchParams()
    if r < 0:
        raise ValueError("rank must be nonnegative")
    if r == 0:
        return LowRank.empty(op.dimension)
    width = math.ceil(params.width_factor * r)
    return _nystrom_core(op, r, width, params.seed)


def rsvd(
    op: LinearOperator, r: int, params: SketchParams | None = None, op_t: LinearOperator | None = None
):
    """Randomized SVD through a sketched range basis.

    ``op_t`` applies the transpose; omit it for symmetric operators.
    Returns (U, singular_values, V) with singular values descending.
    """
    params = params or SketchParams()
    if r < 0:
        raise ValueError("rank must be nonnegative")
    n = op.dimension
    if r == 0:
        return np.zeros((n, 0)), np.zeros(0), np.zeros((n, 0))
    if op_t is None:
        op_t = op
    omega = gaussian_sketch(n, r, params.seed)
    sample = _apply_columns(op, omega)
    basis, _ = thin_qr(sample)
    projected = _apply_columns(op_t, basis).T  # rows span op restricted to the basis
    u_small, sigma, vt = np.linalg.svd(projected, full_matrices=False)
    return basis @ u_small, sigma, vt.T
