import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import SolverState
from kmeq.exceptions import DimensionError
from kmeq.partition import Partition, column_random_partition, row_random_partition
from kmeq.solvers import (
    arbk_x_step,
    arbk_y_step,
    build_block_cache,
    pg_iterate_x,
    pg_iterate_y,
)
from kmeq.solvers.cme_rk import cme_rk_y_step
from kmeq.solvers.petrov_galerkin import (
    kaczmarz_col_sketch,
    kaczmarz_row_sketch,
    selector,
)


class PetrovGalerkinTestCase(cases.BaseSolverTestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.problem = self.gaussianInstance(10, 6, 6, 10, seed=0)
        self.y0 = rng.standard_normal((6, 10))
        self.x0 = rng.standard_normal((6, 6))

    def testFullSketch(self):
        """W1 = I, Z1 = A^T is the exact projection onto AY = F"""
        (a, f) = (self.problem.a, self.problem.f)
        y1 = pg_iterate_y(self.y0, a, f, np.eye(10), a.T)
        expected = self.y0 + a.T @ np.linalg.pinv(a @ a.T) @ (f - a @ self.y0)
        self.assertMatrixClose(y1, expected, atol=1e-10)
        self.assertMatrixClose(a @ y1, f, atol=1e-9)

    @cases.mark_methods("CME-RK")
    def testSingleRowSketch(self):
        """W1 = e_i, Z1 = A_i^T is the CME-RK row step"""
        (a, f) = (self.problem.a, self.problem.f)
        i = 3
        y1 = pg_iterate_y(self.y0, a, f, selector(10, [i]), a[[i]].T)
        state = SolverState(x=self.x0.copy(), y=self.y0.copy())
        cme_rk_y_step(state, a, f, i, float(a[i] @ a[i]))
        self.assertMatrixClose(y1, state.y, rtol=1e-14, atol=1e-14)

    @cases.mark_methods("ARBK")
    @pytest.mark.parametrize("seed", range(5))
    def testKaczmarzSketchesMatchArbk(self, seed):
        """the block Kaczmarz sketches reproduce both ARBK half-steps"""
        problem = self.gaussianInstance(10, 6, 6, 10, seed=seed)
        s = row_random_partition(10, 3, seed=[seed, 0])
        t = column_random_partition(10, 3, seed=[seed, 1])
        cache = build_block_cache(problem.a, s, problem.b, t)
        state = SolverState(x=self.x0.copy(), y=self.y0.copy())

        arbk_y_step(state, problem.a, problem.f, 1, cache)
        (w1, z1) = kaczmarz_row_sketch(problem.a, s[1])
        y1 = pg_iterate_y(self.y0, problem.a, problem.f, w1, z1)
        self.assertMatrixClose(y1, state.y, rtol=1e-12, atol=1e-12)

        arbk_x_step(state, problem.b, 2, cache)
        (w2, z2) = kaczmarz_col_sketch(problem.b, t[2])
        x1 = pg_iterate_x(self.x0, problem.b, y1, w2, z2)
        self.assertMatrixClose(x1, state.x, rtol=1e-12, atol=1e-12)

    def testSketchShapes(self):
        """W1 selects the block rows; the sketches have one column per index"""
        (w1, z1) = kaczmarz_row_sketch(self.problem.a, (4, 1))
        self.assertEqual((w1.shape, z1.shape), ((10, 2), (6, 2)))
        self.assertMatrixClose(w1[[4, 1]], np.eye(2))
        (w2, z2) = kaczmarz_col_sketch(self.problem.b, (0, 9, 5))
        self.assertEqual((w2.shape, z2.shape), ((3, 10), (3, 6)))

    def testFullColumnSketch(self):
        """W2 = I, Z2 = B^T projects X onto XB = Y"""
        b = self.problem.b
        y = self.problem.x_star @ b
        x1 = pg_iterate_x(self.x0, b, y, np.eye(10), b.T)
        self.assertMatrixClose(x1 @ b, y, atol=1e-9)

    def testNonconforming(self):
        (a, f) = (self.problem.a, self.problem.f)
        with pytest.raises(DimensionError):
            pg_iterate_y(self.y0, a, f, np.eye(9), a.T)
        with pytest.raises(DimensionError):
            pg_iterate_x(self.x0, self.problem.b, self.y0, np.eye(10), np.eye(5))

    def testIdentityPartitionSelectors(self):
        """the selector of a block is the matching columns of I"""
        halves = Partition(universe_size=4, blocks=((0, 1), (2, 3)))
        self.assertMatrixClose(selector(4, halves[1]), np.eye(4)[:, [2, 3]])
