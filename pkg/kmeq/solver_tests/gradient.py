import numpy as np
import pytest

from kmeq import cases
from kmeq.enums import Termination
from kmeq.exceptions import ParameterError
from kmeq.problems import make_consistent_instance
from kmeq.solvers import solve_gradient
from kmeq.solvers.gradient import (
    GradientSolver,
    lipschitz_constant,
    resolve_step_size,
)


def orthogonal_instance(seed=0):
    """A with orthonormal columns and B with orthonormal rows"""
    rng = np.random.default_rng(seed)
    (a, _) = np.linalg.qr(rng.standard_normal((12, 5)))
    (b, _) = np.linalg.qr(rng.standard_normal((9, 4)))
    return make_consistent_instance(a, b.T, rng.standard_normal((5, 4)))


class StepSizeTestCase(cases._KmeqTestCase):
    def testLipschitz(self):
        """L = sigma_max(A)^2 sigma_max(B)^2"""
        assert lipschitz_constant(np.diag([3.0, 1.0]), 2 * np.eye(2)) == pytest.approx(
            36.0
        )

    @pytest.mark.parametrize("step_size", [None, "auto"])
    def testAuto(self, step_size):
        """the default step is 1 / L"""
        assert resolve_step_size(step_size, 4.0) == 0.25

    def testExplicit(self):
        assert resolve_step_size(0.4, 4.0) == 0.4
        assert resolve_step_size("0.1", 4.0) == 0.1

    @pytest.mark.parametrize("step_size", [0.0, -1.0, 0.5, 3.0])
    def testDivergenceRegion(self, step_size):
        """steps outside (0, 2 / L) are rejected"""
        with pytest.raises(ParameterError, match="convergence interval"):
            resolve_step_size(step_size, 4.0)


@cases.mark_methods("LSPIA")
class GradientTestCase(cases.BaseSolverTestCase):
    @pytest.mark.parametrize("step_size", [1.0, None])
    def testOrthogonalOneStep(self, step_size):
        """sigma = 1 everywhere: X1 = A^T F B^T = X*"""
        problem = orthogonal_instance()
        report = solve_gradient(problem, step_size, self.solveConfig(rse_tol=1e-12))
        self.assertEqual(report.iterations, 1)
        self.assertMatrixClose(report.final_x, problem.x_star)

    def testStationaryAtSolution(self):
        """F = A X0 B makes the gradient vanish"""
        problem = self.gaussianInstance(seed=1)
        solver = GradientSolver(problem, self.solveConfig())
        solver.prepare()
        state = solver.initial_state(problem.x_star)
        solver.step(state, np.random.default_rng(0))
        self.assertMatrixClose(state.x, problem.x_star, atol=1e-12)

    def testConverges(self):
        problem = self.gaussianInstance(seed=2)
        report = solve_gradient(problem, "auto", self.solveConfig(rse_tol=1e-4))
        self.assertEqual(report.termination, Termination.TOLERANCE_REACHED)
        self.assertEqual(report.method, "LSPIA")
        self.assertMatrixClose(report.final_y, report.final_x @ problem.b)

    def testMonotoneResidual(self):
        """with step 1 / L the objective never increases"""
        problem = self.gaussianInstance(seed=3)
        solver = GradientSolver(problem, self.solveConfig(max_iters=30, rse_tol=1e-14))
        objective = []
        solver.solve(
            observer=lambda state: objective.append(
                np.linalg.norm(problem.f - problem.a @ state.x @ problem.b)
            )
        )
        assert len(objective) == 31
        assert all(o2 <= o1 * (1 + 1e-12) for (o1, o2) in zip(objective, objective[1:]))

    def testRejectedStepSize(self):
        """a step beyond 2 / L fails before iterating"""
        problem = self.gaussianInstance(seed=4)
        lipschitz = lipschitz_constant(problem.a, problem.b)
        with pytest.raises(ParameterError):
            solve_gradient(problem, 2.5 / lipschitz, self.solveConfig())
