"""
End-to-end properties of ARBK on Gaussian instances: full-block exactness,
monotone Y iterates, the expected-error bounds and the reduction of singleton
blocks to CME-RK.
"""

import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import SolverState
from kmeq.bounds import arbk_y_error_bound, convergence_factors
from kmeq.enums import Termination
from kmeq.linalg import frobenius_norm
from kmeq.partition import Partition
from kmeq.solvers import arbk_x_step, arbk_y_step, build_block_cache, solve_arbk
from kmeq.solvers.arbk import ArbkSolver
from kmeq.solvers.cme_rk import cme_rk_x_step, cme_rk_y_step

CHECKPOINTS = (10, 25, 50)

TINY = float(np.finfo(np.float64).tiny)


@cases.mark_methods("ARBK")
class FullBlockTestCase(cases.BaseSolverTestCase):
    def testOneIteration(self):
        """s = t = 1 solves a consistent system in one outer iteration"""
        problem = self.gaussianInstance(100, 20, 20, 100, seed=0)
        report = solve_arbk(
            problem,
            Partition.single_block(100),
            Partition.single_block(100),
            self.solveConfig(rse_tol=1e-10),
        )
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertEqual(report.iterations, 1)
        self.assertLessEqual(report.rse, 1e-10)


@cases.mark_methods("ARBK")
class YMonotoneRunTestCase(cases.BaseSolverTestCase):
    def testThousandIterations(self):
        """||Y_{k+1} - Y*|| <= ||Y_k - Y*|| + 1e-12 ||Y_0 - Y*|| over a whole run"""
        problem = self.gaussianInstance(100, 20, 20, 100, seed=0)
        (s, t) = self.randomPartitions(problem, 10, 10, seed=0)
        y_star = problem.y_star
        errors = []
        report = ArbkSolver(
            problem, s, t, self.solveConfig(max_iters=1000, rse_tol=TINY, seed=1)
        ).solve(observer=lambda state: errors.append(frobenius_norm(state.y - y_star)))
        self.assertEqual(len(errors), report.iterations + 1)
        slack = 1e-12 * errors[0]
        for (k, (before, after)) in enumerate(zip(errors, errors[1:])):
            assert after <= before + slack, f"Y error grows at iteration {k + 1}"


@cases.slow
@cases.mark_methods("ARBK")
class ExpectedErrorTestCase(cases.BaseSolverTestCase):
    """Sample means over 100 seeded runs on one 200 x 40 / 40 x 200 instance with
    s = t = 10, against the expected-error bounds from the measured pavings."""

    runs = 100

    def setUp(self):
        self.problem = self.gaussianInstance(200, 40, 40, 200, seed=30)
        (self.s, self.t) = self.randomPartitions(self.problem, 10, 10, seed=30)
        self.factors = convergence_factors(
            self.problem.a, self.problem.b, self.s, self.t
        )

    def sampleErrors(self):
        """(Y errors at k, X errors at k + 1) per run, squared"""
        x_star = self.problem.x_star
        y_star = self.problem.y_star
        y_errors = np.zeros((self.runs, len(CHECKPOINTS)))
        x_errors = np.zeros((self.runs, len(CHECKPOINTS)))
        for run in range(self.runs):

            def observe(state, run=run):
                for (i, k) in enumerate(CHECKPOINTS):
                    if state.iteration == k:
                        y_errors[run, i] = frobenius_norm(state.y - y_star) ** 2
                    if state.iteration == k + 1:
                        x_errors[run, i] = frobenius_norm(state.x - x_star) ** 2

            config = self.solveConfig(
                max_iters=max(CHECKPOINTS) + 1, rse_tol=TINY, seed=[30, run]
            )
            ArbkSolver(self.problem, self.s, self.t, config).solve(observer=observe)
        return (y_errors.mean(axis=0), x_errors.mean(axis=0))

    def testBounds(self):
        """sample means stay within 1.1 times both bounds at every checkpoint"""
        (y_means, x_means) = self.sampleErrors()
        y0_err_sq = frobenius_norm(self.problem.y_star) ** 2
        x0_err_sq = frobenius_norm(self.problem.x_star) ** 2
        for (i, k) in enumerate(CHECKPOINTS):
            y_bound = arbk_y_error_bound(k, self.factors.gamma_hat, y0_err_sq)
            self.assertLessEqual(
                y_means[i],
                1.1 * y_bound,
                fail_msg=f"k={k}: mean Y error {{got}} above {{expects}}",
            )
            x_bound = self.factors.x_error_bound(k, x0_err_sq)
            self.assertLessEqual(
                x_means[i],
                1.1 * x_bound,
                fail_msg=f"k={k}: mean X error {{got}} above {{expects}}",
            )
        assert y_means[-1] < y_means[0]
        assert x_means[-1] < x_means[0]


@cases.mark_methods("ARBK", "CME-RK")
class SingletonEquivalenceTestCase(cases.BaseSolverTestCase):
    @pytest.mark.parametrize("seed", range(100))
    def testSingletonStepsAreCmeRkSteps(self, seed):
        """singleton row and column blocks update exactly like CME-RK"""
        problem = self.gaussianInstance(20, 8, 8, 20, seed=0)
        cache = build_block_cache(
            problem.a, Partition.singletons(20), problem.b, Partition.singletons(20)
        )
        rng = np.random.default_rng([6, seed])
        (x0, y0) = (rng.standard_normal((8, 8)), rng.standard_normal((8, 20)))
        (i, j) = (int(rng.integers(20)), int(rng.integers(20)))
        (a, b) = (problem.a, problem.b)

        block = SolverState(x=x0.copy(), y=y0.copy())
        single = SolverState(x=x0.copy(), y=y0.copy())
        arbk_y_step(block, a, problem.f, i, cache)
        cme_rk_y_step(single, a, problem.f, i, float(a[i] @ a[i]))
        self.assertMatrixClose(block.y, single.y, rtol=1e-14, atol=1e-14)

        arbk_x_step(block, b, j, cache)
        cme_rk_x_step(single, b, j, float(b[:, j] @ b[:, j]))
        self.assertMatrixClose(block.x, single.x, rtol=1e-14, atol=1e-14)
