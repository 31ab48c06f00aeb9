"""Immutable dense matrices and the linear algebra kernels built on them.

Everything downstream (criteria, selectors, reduction harness) works on
``DenseMatrix`` values.  All operations are pure functions returning fresh
objects, so they are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, RankDeficiencyError, ShapeError

EPS = float(np.finfo(np.float64).eps)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """A real m x n matrix with finite float64 entries, immutable after construction."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.array(self.array, dtype=np.float64, copy=True, order="C")
        if arr.ndim != 2:
            raise InvalidInputError(f"expected a 2-d matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(f"matrix dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("matrix entries must all be finite")
        object.__setattr__(self, "array", _readonly(arr))

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def entries(self) -> np.ndarray:
        """Row-major flat view of the entries (read-only)."""
        return self.array.reshape(-1)

    @classmethod
    def identity(cls, n: int) -> "DenseMatrix":
        return cls(np.eye(n))

    def columns(self, indices) -> "DenseMatrix":
        """Submatrix made of the given column indices, in the given order."""
        idx = list(indices)
        if not idx:
            raise InvalidInputError("a column subset must be non-empty")
        if any(j < 0 or j >= self.cols for j in idx):
            raise InvalidInputError(f"column index out of range for {self.cols} columns")
        return DenseMatrix(self.array[:, idx])

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.array, axis=0)

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


def concat_columns(left: DenseMatrix, right: DenseMatrix) -> DenseMatrix:
    """Horizontal concatenation [left right]."""
    if left.rows != right.rows:
        raise ShapeError(f"row counts differ: {left.rows} vs {right.rows}")
    return DenseMatrix(np.hstack([left.array, right.array]))


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Singular values in non-increasing order plus the numerical rank they imply."""

    singular_values: np.ndarray
    numerical_rank: int
    rank_tolerance: float


def default_rank_tolerance(rows: int, cols: int, sigma_max: float) -> float:
    """max(m, n) * machine epsilon * sigma_1, floored at epsilon for the zero matrix."""
    tol = max(rows, cols) * EPS * sigma_max
    return tol if tol > 0.0 else EPS


def svd(matrix: DenseMatrix, rank_tolerance: float | None = None) -> SvdResult:
    """Singular values of ``matrix`` with an SVD-based numerical rank."""
    sigma = np.linalg.svd(matrix.array, compute_uv=False)
    if rank_tolerance is None:
        rank_tolerance = default_rank_tolerance(matrix.rows, matrix.cols, float(sigma[0]))
    rank = int(np.count_nonzero(sigma > rank_tolerance))
    return SvdResult(_readonly(sigma), rank, float(rank_tolerance))


def pseudo_inverse(matrix: DenseMatrix, tol: float | None = None) -> DenseMatrix:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values at or below ``tol`` (default: the standard rank tolerance)
    are treated as zero, so rank-deficient inputs are handled by truncation
    rather than rejected.
    """
    u, s, vt = np.linalg.svd(matrix.array, full_matrices=False)
    if tol is None:
        tol = default_rank_tolerance(matrix.rows, matrix.cols, float(s[0]))
    elif tol <= 0:
        raise InvalidInputError("tolerance must be positive")
    inv = np.where(s > tol, np.divide(1.0, s, out=np.zeros_like(s), where=s > 0), 0.0)
    return DenseMatrix(vt.T @ (inv[:, None] * u.T))


def complement_projector(c: DenseMatrix) -> DenseMatrix:
    """Orthogonal projector I - C C^+ onto the complement of range(C).

    Requires C to have full column rank under the default tolerance.
    """
    u, s, _ = np.linalg.svd(c.array, full_matrices=False)
    tol = default_rank_tolerance(c.rows, c.cols, float(s[0]))
    rank = int(np.count_nonzero(s > tol))
    if rank < c.cols:
        raise RankDeficiencyError(
            f"matrix has numerical rank {rank} < {c.cols} columns"
        )
    p = np.eye(c.rows) - u @ u.T
    return DenseMatrix((p + p.T) / 2.0)


@dataclass(frozen=True, eq=False)
class PartitionedPinv:
    """Pseudo-inverse of [C1 C2] split into its two stacked blocks.

    ``m1_pinv`` is the pseudo-inverse of the projection of C1 away from
    range(C2), ``m2_pinv`` the mirror image, and ``schur1``/``schur2`` are the
    corresponding Gram Schur complements (symmetric positive definite when the
    concatenation has full column rank).
    """

    m1_pinv: DenseMatrix
    m2_pinv: DenseMatrix
    schur1: DenseMatrix
    schur2: DenseMatrix

    def stacked(self) -> DenseMatrix:
        return DenseMatrix(np.vstack([self.m1_pinv.array, self.m2_pinv.array]))


def partitioned_pinv(c1: DenseMatrix, c2: DenseMatrix) -> PartitionedPinv:
    """Blockwise pseudo-inverse of the concatenation [C1 C2].

    The stack of the two returned pseudo-inverse blocks equals the
    pseudo-inverse of [C1 C2] whenever the concatenation has full column rank.
    """
    if c1.rows != c2.rows:
        raise ShapeError(f"row counts differ: {c1.rows} vs {c2.rows}")
    m = c1.rows
    n = c1.cols + c2.cols
    if m < n:
        # undefined for wide concatenations, which can never have full column rank
        raise ShapeError(f"need at least {n} rows for {n} total columns, got {m}")
    combined = np.hstack([c1.array, c2.array])
    s = np.linalg.svd(combined, compute_uv=False)
    tol = default_rank_tolerance(m, n, float(s[0]))
    if int(np.count_nonzero(s > tol)) < n:
        raise RankDeficiencyError("concatenation [C1 C2] is numerically rank deficient")

    p1 = complement_projector(c1).array
    p2 = complement_projector(c2).array
    m1 = DenseMatrix(p2 @ c1.array)
    m2 = DenseMatrix(p1 @ c2.array)
    s1 = c1.array.T @ p2 @ c1.array
    s2 = c2.array.T @ p1 @ c2.array
    return PartitionedPinv(
        m1_pinv=pseudo_inverse(m1),
        m2_pinv=pseudo_inverse(m2),
        schur1=DenseMatrix((s1 + s1.T) / 2.0),
        schur2=DenseMatrix((s2 + s2.T) / 2.0),
    )
