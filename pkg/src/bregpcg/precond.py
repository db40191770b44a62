"""Preconditioner assembly and application.

Every preconditioner here has the shape P = Q (I + W) Q^T with Q a sparse
triangular factor and W a symmetric low-rank term with orthonormal columns,
which makes the inverse cheap: with d_i = lam_i / (1 + lam_i),

    P^{-1} v = Q^{-T} (v' - Z diag(d) Z^T v'),   v' = Q^{-1} v.

Builders differ only in where W comes from: the exact dense eigendecomposition
of the scaled error, a split Lanczos run that targets the largest and
smallest directions separately, a randomized sketch, or a magnitude-ranked
Krylov run.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import sketch as sketch_mod
from .bregman import (
    FEASIBILITY_MARGIN,
    LowRank,
    scaled_error,
    select_indices,
    truncate,
)
from .dense_kernels import sym_eig, thin_qr
from .eigsolve import (
    EigsParams,
    error_operator,
    lanczos_tr,
    scaled_operator,
    shifted_operator,
    smallest_from_estimate,
)
from .errors import InfeasibleLowRank, NoConvergence
from .sparse_core import CholFactor, CsrMatrix, tri_solve

KIND_IDENTITY = "identity"
KIND_FACTOR = "factor_only"
KIND_FACTOR_LOW_RANK = "factor_low_rank"

POSITIVE_PART_METHODS = ("krylov_schur", "nystrom")

ETA_MARGIN = 1.01


@dataclass
class BuildInfo:
    """Construction accounting: S-products consumed, wall time, and notes."""

    matvecs_s: int = 0
    seconds: float = 0.0
    notes: tuple = ()


@dataclass(frozen=True)
class AlphaSplit:
    """Rank budget split: r_plus directions from the top, r_minus from the bottom."""

    r_plus: int
    r_minus: int

    @property
    def r(self) -> int:
        return self.r_plus + self.r_minus


def split_rank(r: int, alpha: float) -> AlphaSplit:
    """r_plus = floor(alpha * r), r_minus = the rest."""
    if r < 0:
        raise ValueError("rank must be nonnegative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    r_plus = int(math.floor(alpha * r))
    return AlphaSplit(r_plus=r_plus, r_minus=r - r_plus)


@dataclass(eq=False)
class Preconditioner:
    kind: str
    Q: CholFactor | None = None
    W: LowRank | None = None
    woodbury_diag: np.ndarray | None = None
    label: str = ""
    build_info: BuildInfo = field(default_factory=BuildInfo)

    @property
    def n(self) -> int:
        if self.Q is not None:
            return self.Q.n
        if self.W is not None:
            return self.W.n
        raise ValueError("identity preconditioner has no fixed order")

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return apply_inverse(self, v)

    def to_dense(self) -> np.ndarray:
        """Materialize P = Q (I + W) Q^T (or the identity) densely."""
        if self.kind == KIND_IDENTITY:
            raise ValueError("identity preconditioner needs a dimension to densify")
        q = self.Q.to_dense()
        inner = np.eye(self.Q.n)
        if self.W is not None and self.W.rank:
            inner = inner + self.W.as_dense()
        return q @ inner @ q.T


def identity(label: str = "none") -> Preconditioner:
    return Preconditioner(kind=KIND_IDENTITY, label=label)


def assemble(q: CholFactor, w: LowRank | None = None, label: str = "") -> Preconditioner:
    """Wrap a factor and an optional low-rank term as a preconditioner.

    A missing or rank-0 term degrades to the factor-only preconditioner.
    Any low-rank eigenvalue at or below -1 (within a small margin) makes
    I + W indefinite and is rejected.
    """
    if w is None or w.rank == 0:
        return Preconditioner(kind=KIND_FACTOR, Q=q, label=label or "factor")
    if w.n != q.n:
        raise ValueError("low-rank term and factor orders differ")
    if np.any(1.0 + w.lam <= FEASIBILITY_MARGIN):
        raise InfeasibleLowRank(
            f"low-rank eigenvalue {w.lam.min():.9g} makes I + W indefinite"
        )
    diag = w.lam / (1.0 + w.lam)
    return Preconditioner(
        kind=KIND_FACTOR_LOW_RANK,
        Q=q,
        W=w,
        woodbury_diag=diag,
        label=label or "factor+lowrank",
    )


def apply_inverse(p: Preconditioner, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if p.kind == KIND_IDENTITY:
        return v.copy()
    if v.shape != (p.Q.n,):
        raise ValueError(f"vector has shape {v.shape}, expected ({p.Q.n},)")
    u = tri_solve(p.Q, v)
    if p.kind == KIND_FACTOR_LOW_RANK:
        z = p.W.Z
        u = u - z @ (p.woodbury_diag * (z.T @ u))
    return tri_solve(p.Q, u, transposed=True)


def _recompress(parts: list[LowRank]) -> LowRank:
    """Merge low-rank blocks into one term with orthonormal columns."""
    parts = [p for p in parts if p.rank]
    if not parts:
        raise ValueError("nothing to merge")
    if len(parts) == 1:
        return parts[0]
    z_all = np.hstack([p.Z for p in parts])
    lam_all = np.concatenate([p.lam for p in parts])
    q_merge, r_merge = thin_qr(z_all)
    small = (r_merge * lam_all) @ r_merge.T
    merged = sym_eig((small + small.T) / 2.0)
    return LowRank(q_merge @ merged.vectors, merged.values)


def build_exact(
    s: CsrMatrix, q: CholFactor, r: int, rule: str, cap: int = 4096, label: str = ""
) -> Preconditioner:
    """Truncation preconditioner from the dense scaled-error eigendecomposition."""
    started = time.perf_counter()
    err = scaled_error(s, q, cap=cap)
    decomp = sym_eig(err)
    w = truncate(decomp, select_indices(decomp.values, r, rule))
    built = assemble(q, w, label=label or rule)
    built.build_info = BuildInfo(
        matvecs_s=0, seconds=time.perf_counter() - started, notes=("dense-exact",)
    )
    return built


def build_alpha(
    s: CsrMatrix,
    q: CholFactor,
    r: int,
    alpha: float,
    eig_params: EigsParams,
    positive_method: str = "krylov_schur",
    sketch_params=None,
    allow_partial: bool = False,
    label: str = "",
) -> Preconditioner:
    """Split-rank preconditioner: floor(alpha*r) directions from the top of
    the scaled error, the rest from the bottom via the spectral shift.

    The shift is taken from the top Ritz value inflated by its residual norm
    and a one percent margin; when the top block is skipped or sketched, a
    short one-pair probe run supplies it.  ``allow_partial`` downgrades
    eigensolver NoConvergence to a note and continues with the partial
    estimates.
    """
    if positive_method not in POSITIVE_PART_METHODS:
        raise ValueError(f"unknown positive-part method {positive_method!r}")
    started = time.perf_counter()
    split = split_rank(r, alpha)
    notes = []
    matvecs = 0
    parts = []
    eta_basis = None

    def run(op, want, which="largest"):
        nonlocal matvecs
        try:
            est = lanczos_tr(op, want, eig_params, which=which)
        except NoConvergence as exc:
            if not allow_partial:
                raise
            est = exc.estimate
            notes.append(f"partial:{est.converged_count}/{want}")
        matvecs += est.matvec_count
        return est

    scaled_op = scaled_operator(s, q)
    if split.r_plus:
        if positive_method == "krylov_schur":
            est_pos = run(scaled_op, split.r_plus)
            parts.append(LowRank(est_pos.vectors, est_pos.values - 1.0))
            eta_basis = (float(est_pos.values[0]), float(est_pos.residual_norms[0]))
        else:
            params = sketch_params or sketch_mod.SketchParams(seed=eig_params.seed)
            parts.append(sketch_mod.nystrom(error_operator(s, q), split.r_plus, params))
            matvecs += split.r_plus + params.oversample

    if split.r_minus:
        if eta_basis is None:
            probe = run(scaled_op, 1)
            eta_basis = (float(probe.values[0]), float(probe.residual_norms[0]))
            notes.append("eta-probe")
        eta = (eta_basis[0] + eta_basis[1]) * ETA_MARGIN
        est_neg = run(shifted_operator(scaled_op, eta), split.r_minus)
        parts.append(smallest_from_estimate(est_neg, eta))

    w = _recompress(parts) if parts else LowRank.empty(s.n_rows)
    built = assemble(q, w, label=label or f"alpha={alpha}")
    built.build_info = BuildInfo(
        matvecs_s=matvecs, seconds=time.perf_counter() - started, notes=tuple(notes)
    )
    return built


def build_randomized(
    s: CsrMatrix,
    q: CholFactor,
    r: int,
    variant: str = "nystrom",
    sketch_params=None,
    label: str = "",
) -> Preconditioner:
    """Sketched preconditioner: Nystrom (or its indefinite widening) of the
    scaled error.  A sketch that misestimates an eigenvalue near -1 surfaces
    as InfeasibleLowRank; nothing is repaired here."""
    params = sketch_params or sketch_mod.SketchParams()
    started = time.perf_counter()
    op = error_operator(s, q)
    if variant == "nystrom":
        w = sketch_mod.nystrom(op, r, params)
        matvecs = r + params.oversample if r else 0
    elif variant == "nystrom_indefinite":
        w = sketch_mod.nystrom_indefinite(op, r, params)
        matvecs = math.ceil(params.width_factor * r) if r else 0
    else:
        raise ValueError(f"unknown sketch variant {variant!r}")
    built = assemble(q, w, label=label or variant)
    built.build_info = BuildInfo(
        matvecs_s=matvecs, seconds=time.perf_counter() - started, notes=()
    )
    return built


def build_svd_krylov(
    s: CsrMatrix,
    q: CholFactor,
    r: int,
    eig_params: EigsParams,
    allow_partial: bool = False,
    label: str = "",
) -> Preconditioner:
    """Magnitude truncation of the scaled error estimated by one Lanczos run."""
    started = time.perf_counter()
    notes = []
    try:
        est = lanczos_tr(error_operator(s, q), r, eig_params, which="magnitude")
    except NoConvergence as exc:
        if not allow_partial:
            raise
        est = exc.estimate
        notes.append(f"partial:{est.converged_count}/{r}")
    w = LowRank(est.vectors, est.values)
    built = assemble(q, w, label=label or "svd_ks")
    built.build_info = BuildInfo(
        matvecs_s=est.matvec_count, seconds=time.perf_counter() - started, notes=tuple(notes)
    )
    return built
