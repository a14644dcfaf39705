import numpy as np
import pytest

from kmeq import cases
from kmeq.exceptions import BlockIndexError, DomainError, ParameterError
from kmeq.partition import (
    Partition,
    PavingBounds,
    blocks_for_size,
    col_paving_bounds,
    column_random_partition,
    row_paving_bounds,
    row_random_partition,
)


def sampled_sizes():
    """(m, s) pairs with 1 <= s <= m <= 200"""
    rng = np.random.default_rng(7)
    pairs = {(1, 1), (200, 1), (200, 200), (199, 7)}
    while len(pairs) < 60:
        m = int(rng.integers(1, 201))
        pairs.add((m, int(rng.integers(1, m + 1))))
    return sorted(pairs)


class RandomPartitionTestCase(cases._KmeqTestCase):
    def testFloorFormula(self):
        """block i holds the permuted indices floor((i-1)m/s) < k <= floor(im/s)"""
        assert row_random_partition(5, 2, seed=0).sizes == [2, 3]
        assert column_random_partition(5, 2, seed=0).sizes == [2, 3]

    def testSingletonsAndFullBlock(self):
        assert row_random_partition(4, 4, seed=1).sizes == [1, 1, 1, 1]
        assert column_random_partition(3, 3, seed=1).sizes == [1, 1, 1]
        assert sorted(row_random_partition(7, 1, seed=1)[0]) == list(range(7))
        assert sorted(column_random_partition(6, 1, seed=1)[0]) == list(range(6))

    @pytest.mark.parametrize("m,s", sampled_sizes())
    def testCoverage(self, m, s):
        """blocks are disjoint, cover [0, m), and have floor(m/s) or ceil(m/s)
        indices"""
        partition = row_random_partition(m, s, seed=[m, s])
        indices = [i for block in partition for i in block]
        assert sorted(indices) == list(range(m))
        assert len(partition) == s
        assert set(partition.sizes) <= {m // s, -(-m // s)}

    def testDeterminism(self):
        """one seed, one partition; other seeds permute differently"""
        assert row_random_partition(30, 4, seed=11) == row_random_partition(
            30, 4, seed=11
        )
        differing = [
            row_random_partition(30, 4, seed=i)
            != row_random_partition(30, 4, seed=i + 100)
            for i in range(10)
        ]
        assert any(differing)

    def testInvalidBlockCount(self):
        with pytest.raises(ParameterError):
            row_random_partition(3, 4, seed=0)
        with pytest.raises(ParameterError):
            column_random_partition(3, 0, seed=0)

    def testBlocksForSize(self):
        """s = ceil(m / tau)"""
        assert blocks_for_size(1000, 50) == 20
        assert blocks_for_size(1000, 30) == 33
        assert blocks_for_size(10, 10) == 1
        with pytest.raises(ParameterError):
            blocks_for_size(10, 11)


class PartitionTestCase(cases._KmeqTestCase):
    def testValidation(self):
        with pytest.raises(BlockIndexError):
            Partition(universe_size=3, blocks=((0, 1), (1, 2)))
        with pytest.raises(BlockIndexError):
            Partition(universe_size=3, blocks=((0, 1),))
        with pytest.raises(ParameterError):
            Partition(universe_size=2, blocks=((0, 1), ()))

    def testLines(self):
        """rendered 1-based, one block per line"""
        partition = Partition(universe_size=4, blocks=((2, 0), (1, 3)))
        self.assertEqual(partition.to_lines(), ["3,1", "2,4"])
        self.assertEqual(Partition.from_lines(partition.to_lines()), partition)
        self.assertEqual(
            Partition.from_lines(["1,2", "", "3"], universe_size=3).sizes, [2, 1]
        )
        with pytest.raises(BlockIndexError):
            Partition.from_lines(["1,x"])

    def testConstructors(self):
        self.assertEqual(Partition.single_block(3).blocks, ((0, 1, 2),))
        self.assertEqual(Partition.singletons(2).blocks, ((0,), (1,)))


class PavingBoundsTestCase(cases._KmeqTestCase):
    def testIdentity(self):
        """every Gram block of I is I, so alpha = beta = 1"""
        halves = Partition(universe_size=4, blocks=((0, 1), (2, 3)))
        bounds = row_paving_bounds(np.eye(4), halves)
        assert (bounds.alpha, bounds.beta) == pytest.approx((1.0, 1.0))
        assert bounds.block_count == 2
        bounds = col_paving_bounds(np.eye(4), halves)
        assert (bounds.alpha, bounds.beta) == pytest.approx((1.0, 1.0))

    def testSingleRowAndColumn(self):
        """the Gram eigenvalue of one row or column is its squared norm"""
        bounds = row_paving_bounds([[3.0, 4.0]], Partition.singletons(1))
        assert (bounds.alpha, bounds.beta) == pytest.approx((25.0, 25.0))
        bounds = col_paving_bounds([[0.0], [2.0]], Partition.singletons(1))
        assert (bounds.alpha, bounds.beta) == pytest.approx((4.0, 4.0))

    @pytest.mark.parametrize("seed", range(3))
    def testEigenvalueOracle(self, seed):
        """alpha and beta are the extreme Gram eigenvalues over blocks, attained on
        the arg-min and arg-max blocks"""
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((20, 10))
        b = rng.standard_normal((10, 20))
        s = row_random_partition(20, 4, seed=[seed, 0])
        t = column_random_partition(20, 4, seed=[seed, 1])

        row_eigs = [np.linalg.eigvalsh(a[list(u)] @ a[list(u)].T) for u in s]
        col_eigs = [np.linalg.eigvalsh(b[:, list(v)].T @ b[:, list(v)]) for v in t]
        for (bounds, eigs) in (
            (row_paving_bounds(a, s), row_eigs),
            (col_paving_bounds(b, t), col_eigs),
        ):
            assert bounds.alpha == pytest.approx(min(e[0] for e in eigs), rel=1e-10)
            assert bounds.beta == pytest.approx(max(e[-1] for e in eigs), rel=1e-10)
            assert bounds.max_cond_sq == pytest.approx(bounds.beta / bounds.alpha)
            assert bounds.max_cond_sq >= 1
            assert not bounds.rank_deficient

    def testRankDeficientBlock(self, caplog):
        """alpha skips the zero eigenvalue of a singular block, with a warning"""
        a = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 3.0]])
        bounds = row_paving_bounds(
            a, Partition(universe_size=3, blocks=((0, 1), (2,)))
        )
        assert bounds.rank_deficient
        assert bounds.alpha == pytest.approx(5.0)
        assert bounds.beta == pytest.approx(9.0)
        assert "rank-deficient" in caplog.text

    def testZeroBlock(self):
        """an all-zero block is a domain error naming the 1-based block"""
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(DomainError, match="block 1"):
            row_paving_bounds(a, Partition.singletons(2))

    def testUniverseMismatch(self):
        with pytest.raises(ParameterError):
            row_paving_bounds(np.eye(3), Partition.singletons(2))
        with pytest.raises(ParameterError):
            col_paving_bounds(np.eye(3), Partition.singletons(4))

    def testInvalidBounds(self):
        with pytest.raises(DomainError):
            PavingBounds(alpha=2.0, beta=1.0, block_count=1, max_cond_sq=0.5)
