"""Dense primitives: norms, SVD, pseudoinverse, block selection."""

import math

import numpy as np
import pytest

from kmeq import cases
from kmeq.exceptions import (
    BlockIndexError,
    DimensionError,
    DomainError,
    NonFiniteError,
)
from kmeq.linalg import (
    as_dense,
    extreme_singular_values,
    frobenius_inner,
    frobenius_norm,
    normalize_columns,
    normalize_rows,
    pseudoinverse,
    svd,
    take_cols,
    take_rows,
)
from kmeq.problems import gen_smatrix


def penrose_corpus():
    """50 seeded matrices of shapes up to 20x20, every fifth one rank-deficient."""
    rng = np.random.default_rng(2024)
    for i in range(50):
        (rows, cols) = rng.integers(1, 21, size=2)
        if i % 5 == 0 and min(rows, cols) > 1:
            rank = int(rng.integers(1, min(rows, cols)))
            m = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
        else:
            m = rng.standard_normal((rows, cols))
        yield pytest.param(m, id=f"{i}-{rows}x{cols}")


class AsDenseTestCase(cases._KmeqTestCase):
    def testRejectsNonFinite(self):
        """All entries are finite on construction."""
        with pytest.raises(NonFiniteError):
            as_dense([[1.0, float("nan")]])
        with pytest.raises(NonFiniteError):
            as_dense([[float("inf")]])

    def testRejectsWrongRank(self):
        with pytest.raises(DimensionError):
            as_dense([1.0, 2.0])

    def testLayout(self):
        m = as_dense(np.asfortranarray(np.arange(6).reshape(2, 3)))
        assert m.flags["C_CONTIGUOUS"]
        assert m.dtype == np.float64


class FrobeniusTestCase(cases._KmeqTestCase):
    def testNorm(self):
        assert frobenius_norm(np.zeros((3, 3))) == 0
        assert frobenius_norm(np.eye(2)) == pytest.approx(math.sqrt(2))
        assert frobenius_norm([[3, 4]]) == 5

    def testInner(self):
        assert frobenius_inner(np.eye(2), np.eye(2)) == 2
        assert frobenius_inner([[1, 2], [3, 4]], [[1, 2], [3, 4]]) == 30
        assert frobenius_inner([[1, 0]], [[0, 1]]) == 0

    def testInnerShapeMismatch(self):
        with pytest.raises(DimensionError):
            frobenius_inner(np.eye(2), np.eye(3))

    @pytest.mark.parametrize("m", penrose_corpus())
    def testNormIsInnerSquareRoot(self, m):
        """frobenius_norm(M)^2 = frobenius_inner(M, M) up to rounding"""
        assert frobenius_norm(m) ** 2 == pytest.approx(
            frobenius_inner(m, m), rel=1e-14
        )


class SvdTestCase(cases._KmeqTestCase):
    def testDiagonal(self):
        self.assertMatrixClose(svd(np.diag([3.0, 1.0])).singular_values, [3.0, 1.0])
        self.assertMatrixClose(
            svd([[0.0, 1.0], [1.0, 0.0]]).singular_values, [1.0, 1.0]
        )

    def testOrthonormalFactors(self):
        m = np.random.default_rng(5).standard_normal((5, 3))
        result = svd(m)
        self.assertOrthonormalColumns(result.left_vectors)
        self.assertOrthonormalColumns(result.right_vectors)

    @pytest.mark.parametrize("m", penrose_corpus())
    def testReconstruction(self, m):
        """U diag(s) V^T reproduces M within 1e-10 sigma_max; s nonincreasing"""
        result = svd(m)
        s = result.singular_values
        assert np.all(s >= 0)
        assert np.all(np.diff(s) <= 0)
        error = frobenius_norm(result.reconstruct() - m)
        assert error <= 1e-10 * max(result.sigma_max, 1.0)

    def testEmpty(self):
        with pytest.raises(DimensionError):
            svd(np.zeros((0, 3)))


class PseudoinverseTestCase(cases._KmeqTestCase):
    def testDiagonalTruncation(self):
        self.assertMatrixClose(
            pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0])
        )

    def testRowVector(self):
        """a^+ = a^T / ||a||^2"""
        a = np.array([[1.0, 2.0, 2.0]])
        self.assertMatrixClose(pseudoinverse(a), a.T / 9)

    def testLeftInverse(self):
        """M+ M = I for full column rank"""
        m = np.random.default_rng(3).standard_normal((4, 2))
        self.assertMatrixClose(pseudoinverse(m) @ m, np.eye(2))

    def testZeroMatrix(self):
        self.assertMatrixClose(pseudoinverse(np.zeros((2, 3))), np.zeros((3, 2)))

    def testExplicitTolerance(self):
        m = np.diag([1.0, 1e-3])
        self.assertMatrixClose(pseudoinverse(m, tol=1e-2), np.diag([1.0, 0.0]))

    @pytest.mark.parametrize("m", penrose_corpus())
    def testPenrose(self, m):
        """M M+ M = M, M+ M M+ = M+, (M M+)^T = M M+, (M+ M)^T = M+ M within
        1e-8 (1 + sigma_max)"""
        m_pinv = pseudoinverse(m)
        sigma_max = svd(m).sigma_max
        self.assertPenrose(m, m_pinv, tol=1e-8 * (1 + sigma_max))


class ExtremeSingularValuesTestCase(cases._KmeqTestCase):
    def testSimple(self):
        assert extreme_singular_values(np.eye(3)) == pytest.approx((1.0, 1.0))
        assert extreme_singular_values(np.diag([10.0, 0.1])) == pytest.approx(
            (0.1, 10.0)
        )

    def testSmatrix(self):
        """the pinned extremes 0.1 and 10 of an Smatrix are found"""
        (sigma_min, sigma_max) = extreme_singular_values(
            gen_smatrix(100, 40, 40, 10.0, 0.1, seed=1)
        )
        assert sigma_min == pytest.approx(0.1, abs=1e-8)
        assert sigma_max == pytest.approx(10.0, abs=1e-8)

    def testSmallestNonzero(self):
        """sigma_min skips exact zeros of rank-deficient input"""
        assert extreme_singular_values(np.diag([4.0, 2.0, 0.0])) == pytest.approx(
            (2.0, 4.0)
        )

    def testZeroMatrix(self):
        with pytest.raises(DomainError):
            extreme_singular_values(np.zeros((3, 2)))


class BlockSelectionTestCase(cases._KmeqTestCase):
    def testTakeRows(self):
        self.assertMatrixClose(
            take_rows(np.eye(3), [0, 2]), [[1, 0, 0], [0, 0, 1]], rtol=0, atol=0
        )
        m = np.arange(12.0).reshape(4, 3)
        self.assertMatrixClose(take_rows(m, range(4)), m, rtol=0, atol=0)

    def testTakeCols(self):
        self.assertMatrixClose(take_cols(np.eye(3), [1]), [[0], [1], [0]])

    def testOrder(self):
        """blocks are concatenated in block order, not sorted"""
        m = np.arange(6.0).reshape(3, 2)
        self.assertMatrixClose(take_rows(m, [2, 0]), m[[2, 0]])

    def testBadIndices(self):
        with pytest.raises(BlockIndexError):
            take_rows(np.eye(3), [3])
        with pytest.raises(BlockIndexError):
            take_cols(np.eye(3), [-1])
        with pytest.raises(BlockIndexError):
            take_rows(np.eye(3), [1, 1])


class NormalizationTestCase(cases._KmeqTestCase):
    def testRows(self):
        m = normalize_rows([[3.0, 4.0], [0.0, 0.0], [0.0, 2.0]])
        self.assertMatrixClose(m, [[0.6, 0.8], [0.0, 0.0], [0.0, 1.0]])

    def testColumns(self):
        m = normalize_columns([[3.0, 0.0], [4.0, 5.0]])
        self.assertMatrixClose(m, [[0.6, 0.0], [0.8, 1.0]])
