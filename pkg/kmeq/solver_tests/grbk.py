import numpy as np
import pytest

from kmeq import cases
from kmeq.enums import Termination
from kmeq.exceptions import ParameterError
from kmeq.linalg import normalize_columns, normalize_rows
from kmeq.partition import Partition
from kmeq.problems import make_consistent_instance
from kmeq.solvers import solve_arbk, solve_grbk
from kmeq.solvers.grbk import GrbkSolver


def blocks_of(size, count):
    """contiguous blocks of equal size"""
    step = size // count
    return Partition(
        universe_size=size,
        blocks=tuple(tuple(range(i * step, (i + 1) * step)) for i in range(count)),
    )


@cases.mark_methods("GRBK")
class GrbkTestCase(cases.BaseSolverTestCase):
    def testSingleFullBlocks(self):
        """s = t = 1 makes both update forms exact after one iteration"""
        problem = self.gaussianInstance(60, 10, 10, 60, seed=0)
        for update in ("global", "alternating"):
            report = solve_grbk(
                problem,
                Partition.single_block(60),
                Partition.single_block(60),
                self.solveConfig(rse_tol=1e-10),
                update=update,
            )
            self.assertEqual(report.iterations, 1, fail_msg=update)
            self.assertLessEqual(report.rse, 1e-10)

    def testBlockProbabilities(self):
        """P(U) = ||A_U||_F^2 / ||A||_F^2"""
        problem = make_consistent_instance(np.diag([1.0, 1.0, 2.0]), np.eye(2))
        solver = GrbkSolver(
            problem,
            Partition(universe_size=3, blocks=((0, 1), (2,))),
            Partition.singletons(2),
            self.solveConfig(),
        )
        solver.prepare()
        self.assertMatrixClose(solver.row_sampler.probabilities, [2 / 6, 4 / 6])
        self.assertMatrixClose(solver.col_sampler.probabilities, [0.5, 0.5])

    @cases.mark_methods("ARBK")
    def testEqualNormsMatchArbk(self):
        """equal block norms make the alternating form follow ARBK's trajectory"""
        rng = np.random.default_rng(1)
        a = normalize_rows(rng.standard_normal((16, 4)))
        b = normalize_columns(rng.standard_normal((4, 16)))
        problem = make_consistent_instance(a, b)
        (s, t) = (blocks_of(16, 4), blocks_of(16, 2))
        config = self.solveConfig(max_iters=40, rse_tol=1e-12, seed=2)
        arbk = solve_arbk(problem, s, t, config)
        grbk = solve_grbk(problem, s, t, config, update="alternating")
        self.assertMatrixClose(grbk.final_x, arbk.final_x, rtol=1e-12, atol=1e-12)
        self.assertEqual(
            [k for (k, _) in grbk.trace], [k for (k, _) in arbk.trace]
        )

    @pytest.mark.parametrize("update", ["global", "alternating"])
    def testConverges(self, update):
        """both update forms reach the default tolerance on a random instance"""
        problem = self.gaussianInstance(seed=3)
        (s, t) = self.randomPartitions(problem, 4, 4, seed=2)
        report = solve_grbk(problem, s, t, self.solveConfig(seed=5), update=update)
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertEqual(report.method, "GRBK")

    def testGlobalRefreshesY(self):
        """the global form leaves Y = X B on exit"""
        problem = self.gaussianInstance(seed=4)
        (s, t) = self.randomPartitions(problem, 4, 4)
        report = solve_grbk(problem, s, t, self.solveConfig(max_iters=5, seed=1))
        self.assertMatrixClose(report.final_y, report.final_x @ problem.b)

    def testUnknownUpdate(self):
        problem = self.gaussianInstance(seed=5)
        (s, t) = self.randomPartitions(problem, 2, 2)
        with pytest.raises(ParameterError, match="unknown GRBK update"):
            GrbkSolver(problem, s, t, self.solveConfig(), update="greedy")
