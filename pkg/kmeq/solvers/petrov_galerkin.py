"""Generalized Petrov-Galerkin (sketch-and-project) steps.

With search spaces spanned by the columns of Z1 (resp. rows of Z2) and constraint
spaces spanned by W1 (resp. W2):

    Y <- Y + Z1 (W1^T A Z1)^+ W1^T (F - A Y)
    X <- X + (Y - X B) W2^T (Z2 B W2^T)^+ Z2

Block Kaczmarz is the choice W1 = I_{:,U}, Z1 = A_{U,:}^T, W2 = I_{V,:}, Z2 = B_{:,V}^T;
see :func:`kaczmarz_row_sketch` and :func:`kaczmarz_col_sketch`.
"""

from typing import Any, Tuple

import numpy as np

from kmeq.exceptions import DimensionError
from kmeq.linalg import DenseMatrix, IndexBlock, as_dense, pseudoinverse


def pg_iterate_y(y: Any, a: Any, f: Any, w1: Any, z1: Any) -> DenseMatrix:
    y = as_dense(y, "Y")
    a = as_dense(a, "A")
    f = as_dense(f, "F")
    w1 = as_dense(w1, "W1")
    z1 = as_dense(z1, "Z1")
    if w1.shape[0] != a.shape[0] or z1.shape[0] != a.shape[1]:
        raise DimensionError(
            f"W1 {w1.shape} and Z1 {z1.shape} do not conform with A {a.shape}"
        )
    projected = pseudoinverse(w1.T @ a @ z1)
    return y + z1 @ projected @ (w1.T @ (f - a @ y))


def pg_iterate_x(x: Any, b: Any, y: Any, w2: Any, z2: Any) -> DenseMatrix:
    x = as_dense(x, "X")
    b = as_dense(b, "B")
    y = as_dense(y, "Y")
    w2 = as_dense(w2, "W2")
    z2 = as_dense(z2, "Z2")
    if w2.shape[1] != b.shape[1] or z2.shape[1] != b.shape[0]:
        raise DimensionError(
            f"W2 {w2.shape} and Z2 {z2.shape} do not conform with B {b.shape}"
        )
    projected = pseudoinverse(z2 @ b @ w2.T)
    return x + ((y - x @ b) @ w2.T) @ projected @ z2


def selector(size: int, block: IndexBlock) -> DenseMatrix:
    """I_{:,block}, the size x |block| column selection."""
    return np.ascontiguousarray(np.eye(size)[:, np.asarray(block, dtype=np.intp)])


def kaczmarz_row_sketch(a: Any, block: IndexBlock) -> Tuple[DenseMatrix, DenseMatrix]:
    """(W1, Z1) = (I_{:,U}, A_{U,:}^T)."""
    a = as_dense(a, "A")
    rows = np.asarray(block, dtype=np.intp)
    return (selector(a.shape[0], rows), np.ascontiguousarray(a[rows].T))


def kaczmarz_col_sketch(b: Any, block: IndexBlock) -> Tuple[DenseMatrix, DenseMatrix]:
    """(W2, Z2) = (I_{V,:}, B_{:,V}^T)."""
    b = as_dense(b, "B")
    cols = np.asarray(block, dtype=np.intp)
    return (
        np.ascontiguousarray(selector(b.shape[1], cols).T),
        np.ascontiguousarray(b[:, cols].T),
    )
