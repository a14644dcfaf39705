"""Dense real linear algebra primitives.

Matrices are two-dimensional C-ordered ``float64`` numpy arrays. Every public function
validates its matrix arguments with :func:`as_dense`, so NaN/Inf and non-2-D input are
rejected at the boundary instead of propagating into iterates.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .exceptions import (
    BlockIndexError,
    DimensionError,
    DomainError,
    NonFiniteError,
    NumericalFailure,
)

logger = logging.getLogger(__name__)

DenseMatrix = npt.NDArray[np.float64]
IndexBlock = Union[Sequence[int], npt.NDArray[np.intp]]

EPS = float(np.finfo(np.float64).eps)


def as_dense(value: Any, name: str = "matrix") -> DenseMatrix:
    """Returns ``value`` as a C-ordered float64 matrix, raising if it is not
    two-dimensional or has non-finite entries."""
    matrix = np.ascontiguousarray(value, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionError(
            f"{name} must be two-dimensional, got shape {matrix.shape}"
        )
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteError(f"{name} has NaN or infinite entries")
    return matrix


@dataclasses.dataclass(frozen=True)
class SvdResult:
    left_vectors: DenseMatrix
    singular_values: npt.NDArray[np.float64]
    """Nonincreasing, nonnegative."""
    right_vectors: DenseMatrix
    """V, not V^T: the input is U diag(s) V^T with U = ``left_vectors``."""

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def reconstruct(self) -> DenseMatrix:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T

    def rank_tolerance(self) -> float:
        """max(rows, cols) * eps * sigma_max, the usual numerical-rank rule."""
        rows = self.left_vectors.shape[0]
        cols = self.right_vectors.shape[0]
        return max(rows, cols) * EPS * self.sigma_max


def frobenius_inner(m1: Any, m2: Any) -> float:
    """Tr(M1^T M2)."""
    m1 = as_dense(m1, "M1")
    m2 = as_dense(m2, "M2")
    if m1.shape != m2.shape:
        raise DimensionError(f"shape mismatch: {m1.shape} vs {m2.shape}")
    return float(np.vdot(m1, m2))


def frobenius_norm(m: Any) -> float:
    return float(np.linalg.norm(as_dense(m, "M"), "fro"))


def svd(m: Any) -> SvdResult:
    """Thin SVD. Falls back from the divide-and-conquer driver to the QR-iteration
    one before giving up."""
    m = as_dense(m, "M")
    if min(m.shape) < 1:
        raise DimensionError(f"cannot decompose an empty matrix of shape {m.shape}")
    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vt = scipy.linalg.svd(
                m, full_matrices=False, lapack_driver=driver, check_finite=False
            )
        except np.linalg.LinAlgError:
            logger.debug("SVD driver %s did not converge on %s matrix", driver, m.shape)
            continue
        return SvdResult(left_vectors=u, singular_values=s, right_vectors=vt.T)

    raise NumericalFailure(
        f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix "
        f"(condition estimate {_condition_estimate(m):.3e})"
    )


def _condition_estimate(m: DenseMatrix) -> float:
    # 1-norm estimate on the Gram matrix; only used in error messages.
    gram = m.T @ m if m.shape[0] >= m.shape[1] else m @ m.T
    try:
        return float(np.sqrt(np.linalg.cond(gram, 1)))
    except np.linalg.LinAlgError:
        return float("inf")


def pseudoinverse(m: Any, tol: Optional[float] = None) -> DenseMatrix:
    """Moore-Penrose pseudoinverse through the SVD, treating singular values at or
    below ``tol`` as zero (``None`` selects max(rows, cols) * eps * sigma_max).

    The pseudoinverse of a zero matrix is the zero matrix of transposed shape."""
    m = as_dense(m, "M")
    result = svd(m)
    if tol is None:
        tol = result.rank_tolerance()
    s = result.singular_values
    keep = s > tol
    inverse = np.zeros_like(s)
    inverse[keep] = 1.0 / s[keep]
    pinv = (result.right_vectors * inverse) @ result.left_vectors.T
    return np.ascontiguousarray(pinv)


def nonzero_singular_values(m: Any) -> npt.NDArray[np.float64]:
    """Singular values above the pseudoinverse rank tolerance, nonincreasing."""
    m = as_dense(m, "M")
    if min(m.shape) < 1:
        return np.zeros(0)
    try:
        s = scipy.linalg.svdvals(m, check_finite=False)
    except np.linalg.LinAlgError:
        s = svd(m).singular_values
    if s.size == 0:
        return s
    tol = max(m.shape) * EPS * float(s[0])
    return s[s > tol]


def extreme_singular_values(m: Any) -> Tuple[float, float]:
    """Returns (sigma_min, sigma_max), where sigma_min is the smallest *nonzero*
    singular value under the pseudoinverse rank tolerance."""
    s = nonzero_singular_values(m)
    if s.size == 0:
        raise DomainError("a zero matrix has no nonzero singular value")
    return (float(s[-1]), float(s[0]))


def _check_block(block: IndexBlock, size: int, what: str) -> npt.NDArray[np.intp]:
    indices = np.asarray(block, dtype=np.intp).reshape(-1)
    if indices.size and (indices.min() < 0 or indices.max() >= size):
        raise BlockIndexError(f"{what} index out of range [0, {size}): {list(block)}")
    if np.unique(indices).size != indices.size:
        raise BlockIndexError(f"duplicate {what} indices in block {list(block)}")
    return indices


def take_rows(m: Any, rows: IndexBlock) -> DenseMatrix:
    """M_{U,:}, rows concatenated in block order."""
    m = as_dense(m, "M")
    return m[_check_block(rows, m.shape[0], "row"), :]


def take_cols(m: Any, cols: IndexBlock) -> DenseMatrix:
    """M_{:,V}, columns concatenated in block order."""
    m = as_dense(m, "M")
    return np.ascontiguousarray(m[:, _check_block(cols, m.shape[1], "column")])


def normalize_rows(m: Any) -> DenseMatrix:
    """Scales every nonzero row to unit Euclidean norm."""
    m = as_dense(m, "M")
    norms = np.linalg.norm(m, axis=1)
    norms[norms == 0.0] = 1.0
    return m / norms[:, None]


def normalize_columns(m: Any) -> DenseMatrix:
    """Scales every nonzero column to unit Euclidean norm."""
    return np.ascontiguousarray(normalize_rows(as_dense(m, "M").T).T)


def penrose_residuals(m: Any, m_pinv: Any) -> Tuple[float, float, float, float]:
    """Frobenius residuals of the four Penrose conditions, in the usual order:
    M M+ M = M, M+ M M+ = M+, (M M+)^T = M M+, (M+ M)^T = M+ M."""
    m = as_dense(m, "M")
    m_pinv = as_dense(m_pinv, "M+")
    if m_pinv.shape != m.shape[::-1]:
        raise DimensionError(f"pseudoinverse shape {m_pinv.shape} for {m.shape}")
    left = m @ m_pinv
    right = m_pinv @ m
    return (
        float(np.linalg.norm(left @ m - m)),
        float(np.linalg.norm(m_pinv @ left - m_pinv)),
        float(np.linalg.norm(left.T - left)),
        float(np.linalg.norm(right.T - right)),
    )
