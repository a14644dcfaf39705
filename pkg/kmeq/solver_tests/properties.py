"""
Invariants shared by the solvers: projection monotonicity, orthogonality of the
X-step, fixed points, determinism and the mean-square contraction of the Y iterates.
"""

import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import SolverState
from kmeq.bounds import arbk_y_factor
from kmeq.enums import Method
from kmeq.linalg import frobenius_inner, frobenius_norm
from kmeq.partition import row_paving_bounds
from kmeq.solvers import arbk_x_step, arbk_y_step, build_block_cache, make_solver


class ProjectionPropertiesTestCase(cases.BaseSolverTestCase):
    @cases.mark_methods("ARBK")
    @pytest.mark.parametrize("seed", range(4))
    def testYMonotone(self, seed):
        """||Y_{k+1} - Y*|| <= ||Y_k - Y*|| for every block choice"""
        problem = self.gaussianInstance(30, 6, 5, 25, seed=seed)
        (s, t) = self.randomPartitions(problem, 5, 5, seed=seed)
        cache = build_block_cache(problem.a, s, problem.b, t)
        rng = np.random.default_rng(seed)
        state = SolverState.initial(np.zeros((6, 5)), problem.b)
        y_star = problem.y_star
        initial = frobenius_norm(state.y - y_star)
        previous = initial
        for _ in range(200):
            arbk_y_step(state, problem.a, problem.f, int(rng.integers(5)), cache)
            current = frobenius_norm(state.y - y_star)
            self.assertLessEqual(current, previous + 1e-12 * initial)
            previous = current

    @cases.mark_methods("ARBK")
    @pytest.mark.parametrize("seed", range(4))
    def testXStepOrthogonality(self, seed):
        """<(X_k - X*)(I - B_V B_V^+), (Y_{k+1,V} - Y*_V) B_V^+> = 0"""
        problem = self.gaussianInstance(30, 6, 5, 25, seed=seed)
        (s, t) = self.randomPartitions(problem, 5, 5, seed=seed)
        cache = build_block_cache(problem.a, s, problem.b, t)
        rng = np.random.default_rng(100 + seed)
        state = SolverState.initial(np.zeros((6, 5)), problem.b)
        (x_star, y_star) = (problem.x_star, problem.x_star @ problem.b)
        for _ in range(50):
            arbk_y_step(state, problem.a, problem.f, int(rng.integers(5)), cache)
            block = int(rng.integers(5))
            cols = cache.cols[block]
            b_v = problem.b[:, cols]
            b_v_pinv = cache.col_pinvs[block]
            left = (state.x - x_star) @ (np.eye(5) - b_v @ b_v_pinv)
            right = (state.y[:, cols] - y_star[:, cols]) @ b_v_pinv
            scale = max(frobenius_norm(left) * frobenius_norm(right), 1.0)
            assert abs(frobenius_inner(left, right)) <= 1e-10 * scale
            arbk_x_step(state, problem.b, block, cache)


class SolverPropertiesTestCase(cases.BaseSolverTestCase):
    def makeSolver(self, method, problem, **config):
        (s, t) = self.randomPartitions(problem, 4, 4, seed=7)
        return make_solver(method, problem, self.solveConfig(**config), s, t)

    @cases.mark_methods("ARBK", "GRBK", "CME-RK", "LSPIA")
    @pytest.mark.parametrize("method", list(Method))
    def testFixedPoint(self, method):
        """X = X*, Y = Y* is left unchanged by every step"""
        problem = self.gaussianInstance(seed=1)
        solver = self.makeSolver(method, problem)
        solver.prepare()
        state = solver.initial_state(problem.x_star)
        rng = np.random.default_rng(0)
        for _ in range(10):
            solver.step(state, rng)
        self.assertMatrixClose(state.x, problem.x_star, atol=1e-10)
        self.assertMatrixClose(state.y, problem.x_star @ problem.b, atol=1e-10)

    @cases.mark_methods("ARBK", "GRBK", "CME-RK", "LSPIA")
    @pytest.mark.parametrize("method", list(Method))
    def testDeterminism(self, method):
        """same problem, partitions, seed and config: bitwise-identical traces"""
        problem = self.gaussianInstance(seed=2)
        reports = [
            self.makeSolver(method, problem, seed=13, max_iters=300).solve()
            for _ in range(2)
        ]
        self.assertEqual(reports[0].trace, reports[1].trace)
        assert np.array_equal(reports[0].final_x, reports[1].final_x)

    @cases.mark_methods("ARBK", "GRBK", "CME-RK")
    @pytest.mark.parametrize("method", [Method.ARBK, Method.GRBK, Method.CME_RK])
    def testSeedChangesTrajectory(self, method):
        """different sampling seeds give different traces"""
        problem = self.gaussianInstance(seed=3)
        traces = [
            self.makeSolver(method, problem, seed=seed, max_iters=20).solve().trace
            for seed in (1, 2)
        ]
        self.assertNotEqual(traces[0], traces[1])


@cases.slow
@cases.mark_methods("ARBK")
class MeanSquareContractionTestCase(cases.BaseSolverTestCase):
    def testYContraction(self):
        """mean of ||Y_25 - Y*||^2 over 100 runs <= 1.1 gamma_hat^25 ||Y_0 - Y*||^2"""
        problem = self.gaussianInstance(200, 40, 40, 200, seed=20)
        (s, t) = self.randomPartitions(problem, 10, 10, seed=20)
        cache = build_block_cache(problem.a, s, problem.b, t)
        gamma_hat = arbk_y_factor(
            problem.a, len(s), row_paving_bounds(problem.a, s).beta
        )
        y_star = problem.y_star
        errors = []
        for run in range(100):
            rng = np.random.default_rng([20, run])
            state = SolverState.initial(np.zeros((40, 40)), problem.b)
            for _ in range(25):
                arbk_y_step(state, problem.a, problem.f, int(rng.integers(10)), cache)
            errors.append(frobenius_norm(state.y - y_star) ** 2)
        initial = frobenius_norm(y_star) ** 2
        self.assertLessEqual(float(np.mean(errors)), 1.1 * gamma_hat**25 * initial)
