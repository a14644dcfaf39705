"""
ARBK half-steps, block cache and solves.
"""

import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import SolverState
from kmeq.enums import Termination
from kmeq.partition import Partition, column_random_partition, row_random_partition
from kmeq.problems import make_consistent_instance
from kmeq.solvers import arbk_x_step, arbk_y_step, build_block_cache, solve_arbk
from kmeq.solvers.arbk import ArbkSolver, block_pseudoinverse
from kmeq.solvers.cme_rk import cme_rk_x_step, cme_rk_y_step


class YStepTestCase(cases.BaseSolverTestCase):
    @cases.mark_methods("ARBK")
    def testFullBlockProjection(self):
        """one full-block step from any Y0 in range(A^T) lands on A+ F"""
        rng = np.random.default_rng(0)
        a = rng.standard_normal((10, 6))
        problem = make_consistent_instance(a, rng.standard_normal((4, 7)))
        full = Partition.single_block(10)
        cache = build_block_cache(a, full, problem.b, Partition.single_block(7))
        state = SolverState(x=np.zeros((6, 4)), y=a.T @ rng.standard_normal((10, 7)))
        arbk_y_step(state, problem.a, problem.f, 0, cache)
        self.assertMatrixClose(state.y, problem.y_star, atol=1e-9)
        self.assertMatrixClose(state.x, np.zeros((6, 4)), rtol=0, atol=0)

    @cases.mark_methods("ARBK")
    def testCoordinateProjection(self):
        """A = I, U = {i}: row i of Y is replaced by row i of F"""
        problem = self.identityInstance(4)
        cache = build_block_cache(
            problem.a, Partition.singletons(4), problem.b, Partition.singletons(4)
        )
        state = SolverState.initial(np.zeros((4, 4)), problem.b)
        arbk_y_step(state, problem.a, problem.f, 2, cache)
        expected = np.zeros((4, 4))
        expected[2] = problem.f[2]
        self.assertMatrixClose(state.y, expected)

    @cases.mark_methods("ARBK", "CME-RK")
    def testSingletonReduction(self):
        """singleton blocks reproduce the row update of CME-RK"""
        problem = self.gaussianInstance(12, 4, 3, 9, seed=1)
        cache = build_block_cache(
            problem.a, Partition.singletons(12), problem.b, Partition.singletons(9)
        )
        rng = np.random.default_rng(2)
        y0 = rng.standard_normal((4, 9))
        for i in (0, 5, 11):
            block = SolverState(x=np.zeros((4, 3)), y=y0.copy())
            single = SolverState(x=np.zeros((4, 3)), y=y0.copy())
            arbk_y_step(block, problem.a, problem.f, i, cache)
            cme_rk_y_step(
                single, problem.a, problem.f, i, float(problem.a[i] @ problem.a[i])
            )
            self.assertMatrixClose(block.y, single.y, rtol=1e-14, atol=1e-14)


class XStepTestCase(cases.BaseSolverTestCase):
    @cases.mark_methods("ARBK")
    def testFullBlockProjection(self):
        """with Y = Y*, a full-block step recovers X* = A+ F B+"""
        problem = self.gaussianInstance(10, 4, 5, 12, seed=3)
        cache = build_block_cache(
            problem.a, Partition.single_block(10), problem.b, Partition.single_block(12)
        )
        x0 = np.random.default_rng(4).standard_normal((4, 5))
        state = SolverState(x=x0, y=problem.x_star @ problem.b)
        arbk_x_step(state, problem.b, 0, cache)
        self.assertMatrixClose(state.x, problem.x_star, atol=1e-9)

    @cases.mark_methods("ARBK")
    def testCoordinateProjection(self):
        """B = I, V = {j}: column j of X is replaced by column j of Y"""
        problem = self.identityInstance(3)
        cache = build_block_cache(
            problem.a, Partition.singletons(3), problem.b, Partition.singletons(3)
        )
        y = np.arange(9.0).reshape(3, 3)
        state = SolverState(x=np.ones((3, 3)), y=y.copy())
        arbk_x_step(state, problem.b, 1, cache)
        self.assertMatrixClose(state.x, [[1, 1, 1], [1, 4, 1], [1, 7, 1]])
        self.assertMatrixClose(state.y, y, rtol=0, atol=0)

    @cases.mark_methods("ARBK", "CME-RK")
    def testSingletonReduction(self):
        """singleton blocks reproduce the column update of CME-RK"""
        problem = self.gaussianInstance(12, 4, 3, 9, seed=5)
        cache = build_block_cache(
            problem.a, Partition.singletons(12), problem.b, Partition.singletons(9)
        )
        rng = np.random.default_rng(6)
        (x0, y0) = (rng.standard_normal((4, 3)), rng.standard_normal((4, 9)))
        for j in (0, 4, 8):
            block = SolverState(x=x0.copy(), y=y0)
            single = SolverState(x=x0.copy(), y=y0)
            arbk_x_step(block, problem.b, j, cache)
            cme_rk_x_step(
                single, problem.b, j, float(problem.b[:, j] @ problem.b[:, j])
            )
            self.assertMatrixClose(block.x, single.x, rtol=1e-14, atol=1e-14)


class BlockCacheTestCase(cases._KmeqTestCase):
    def testSingletons(self):
        """cached entries are a^T / ||a||^2"""
        a = np.array([[3.0, 4.0], [1.0, 0.0], [0.0, 2.0]])
        cache = build_block_cache(
            a, Partition.singletons(3), np.eye(2), Partition.singletons(2)
        )
        self.assertEqual(len(cache.row_pinvs), 3)
        for (i, pinv) in enumerate(cache.row_pinvs):
            self.assertMatrixClose(pinv, a[[i]].T / (a[i] @ a[i]))

    def testIdentitySelectors(self):
        """blocks of the identity have their transposed selectors as pseudoinverses"""
        halves = Partition(universe_size=4, blocks=((0, 1), (2, 3)))
        cache = build_block_cache(np.eye(4), halves, np.eye(4), halves)
        for (rows, pinv) in zip(halves, cache.row_pinvs):
            self.assertMatrixClose(pinv, np.eye(4)[list(rows)].T)
        for (cols, pinv) in zip(halves, cache.col_pinvs):
            self.assertMatrixClose(pinv, np.eye(4)[:, list(cols)].T)

    def testPenrose(self):
        """every cached block pseudoinverse satisfies the Penrose conditions"""
        rng = np.random.default_rng(7)
        a = rng.standard_normal((20, 10))
        b = rng.standard_normal((10, 20))
        s = row_random_partition(20, 4, seed=0)
        t = column_random_partition(20, 4, seed=1)
        cache = build_block_cache(a, s, b, t)
        assert [len(rows) for rows in cache.rows] == s.sizes
        for (rows, pinv) in zip(cache.rows, cache.row_pinvs):
            self.assertPenrose(a[rows], pinv, tol=1e-10)
        for (cols, pinv) in zip(cache.cols, cache.col_pinvs):
            self.assertPenrose(b[:, cols], pinv, tol=1e-10)

    def testZeroSingleton(self):
        """a zero row has the zero pseudoinverse"""
        self.assertMatrixClose(block_pseudoinverse(np.zeros((1, 3))), np.zeros((3, 1)))


@cases.mark_methods("ARBK")
class SolveArbkTestCase(cases.BaseSolverTestCase):
    def testSingleFullBlocks(self):
        """one exact double projection solves a consistent full-rank system"""
        problem = self.gaussianInstance(100, 20, 20, 100, seed=8)
        report = solve_arbk(
            problem,
            Partition.single_block(100),
            Partition.single_block(100),
            self.solveConfig(rse_tol=1e-10),
        )
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertEqual(report.iterations, 1)
        self.assertLessEqual(report.rse, 1e-10)

    def testStartAtSolution(self):
        """X0 = X* stops before the first iteration"""
        problem = self.gaussianInstance(seed=9)
        (s, t) = self.randomPartitions(problem, 4, 4)
        report = solve_arbk(
            problem, s, t, self.solveConfig(), initial_x=problem.x_star
        )
        self.assertEqual(report.iterations, 0)
        self.assertEqual(report.trace, [(0, 0.0)])
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)

    @pytest.mark.parametrize("blocks", [(1, 1), (4, 4), (10, 5), (40, 40)])
    def testConverges(self, blocks):
        """from the smallest to the largest block sizes"""
        problem = self.gaussianInstance(seed=10)
        (s, t) = self.randomPartitions(problem, *blocks, seed=1)
        report = solve_arbk(problem, s, t, self.solveConfig(seed=3))
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertLessEqual(report.rse, 1e-6)
        self.assertEqual(report.method, "ARBK")

    def testUniformBlockDraws(self):
        """each of s blocks is drawn with frequency close to 1/s"""
        problem = self.gaussianInstance(seed=11)
        (s, t) = self.randomPartitions(problem, 5, 2)
        solver = ArbkSolver(problem, s, t, self.solveConfig())
        rng = np.random.default_rng(12)
        counts = np.bincount([solver.draw_row_block(rng) for _ in range(5000)])
        assert counts.size == 5
        assert np.all(np.abs(counts / 5000 - 0.2) < 0.03)
