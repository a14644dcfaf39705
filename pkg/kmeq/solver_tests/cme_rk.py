import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import CumulativeSampler
from kmeq.enums import Termination
from kmeq.exceptions import ParameterError
from kmeq.linalg import normalize_columns, normalize_rows
from kmeq.problems import make_consistent_instance
from kmeq.solvers import solve_cme_rk
from kmeq.solvers.cme_rk import CmeRkSolver


@cases.mark_methods("CME-RK")
class CmeRkTestCase(cases.BaseSolverTestCase):
    def testScalar(self):
        """A = [2], B = [3], F = [12]: one row and one column step are exact"""
        problem = make_consistent_instance([[2.0]], [[3.0]], [[2.0]])
        report = solve_cme_rk(problem, self.solveConfig(rse_tol=1e-12))
        self.assertLessEqual(report.iterations, 2)
        self.assertMatrixClose(report.final_x, [[2.0]], rtol=0, atol=1e-12)
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)

    def testUniformOnNormalizedRows(self):
        """unit rows and columns give uniform sampling probabilities"""
        rng = np.random.default_rng(0)
        a = normalize_rows(rng.standard_normal((6, 3)))
        b = normalize_columns(rng.standard_normal((3, 5)))
        solver = CmeRkSolver(make_consistent_instance(a, b), self.solveConfig())
        solver.prepare()
        self.assertMatrixClose(solver.row_sampler.probabilities, np.full(6, 1 / 6))
        self.assertMatrixClose(solver.col_sampler.probabilities, np.full(5, 1 / 5))

    def testNormProportionalSampling(self):
        """P(i) = ||A_i||^2 / ||A||_F^2"""
        a = np.diag([1.0, 2.0, 3.0])
        solver = CmeRkSolver(
            make_consistent_instance(a, np.eye(3)), self.solveConfig()
        )
        solver.prepare()
        self.assertMatrixClose(
            solver.row_sampler.probabilities, [1 / 14, 4 / 14, 9 / 14]
        )

    def testZeroRowNeverDrawn(self):
        """zero-norm rows have probability 0 and the remaining system is still
        solved"""
        rng = np.random.default_rng(1)
        a = rng.standard_normal((10, 3))
        a[[2, 7]] = 0.0
        problem = make_consistent_instance(a, rng.standard_normal((3, 10)))
        solver = CmeRkSolver(problem, self.solveConfig(seed=2))
        report = solver.solve()
        assert solver.row_sampler.probabilities[[2, 7]].tolist() == [0.0, 0.0]
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)

    def testConverges(self):
        problem = self.gaussianInstance(seed=3)
        report = solve_cme_rk(problem, self.solveConfig(seed=4))
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertEqual(report.method, "CME-RK")
        self.assertLessEqual(report.rse, 1e-6)


class CumulativeSamplerTestCase(cases._KmeqTestCase):
    def testFrequencies(self):
        """draw frequencies follow the weights, zero weights are never drawn"""
        sampler = CumulativeSampler([0.0, 1.0, 0.0, 3.0])
        rng = np.random.default_rng(5)
        counts = np.bincount([sampler.draw(rng) for _ in range(4000)], minlength=4)
        assert counts[0] == counts[2] == 0
        assert abs(counts[3] / 4000 - 0.75) < 0.03
        self.assertEqual(len(sampler), 4)

    def testTrailingZeroWeight(self):
        """the top of the cumulative distribution never maps to a zero weight"""
        sampler = CumulativeSampler([1.0, 2.0, 0.0])

        class Top:
            def random(self):
                return float(np.nextafter(1.0, 0.0))

        assert sampler.draw(Top()) == 1

    @pytest.mark.parametrize("weights", [[], [0.0, 0.0], [1.0, -1.0]])
    def testInvalid(self, weights):
        with pytest.raises(ParameterError):
            CumulativeSampler(weights)
