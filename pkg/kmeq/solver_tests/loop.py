"""
Iteration loop: stopping rule, tracing, observer calls, reports and solver lookup.
"""

import json
import logging

import numpy as np
import pytest

from kmeq import cases
from kmeq.basesolvers import SolveConfig, uniform_index
from kmeq.enums import Method, Termination
from kmeq.exceptions import DimensionError, ParameterError
from kmeq.partition import Partition
from kmeq.patma import ANYFLOAT, ANYINT, Between
from kmeq.problems import make_consistent_instance
from kmeq.solvers import get_solver_class, make_solver
from kmeq.solvers.arbk import ArbkSolver
from kmeq.solvers.cme_rk import CmeRkSolver


class SolveConfigTestCase(cases._KmeqTestCase):
    def testDefaults(self):
        config = SolveConfig()
        self.assertEqual((config.max_iters, config.rse_tol), (100000, 5e-2))
        self.assertEqual(config.trace_stride, 1)

    @pytest.mark.parametrize(
        "kwargs", [{"max_iters": 0}, {"rse_tol": 0.0}, {"trace_stride": 0}]
    )
    def testInvalid(self, kwargs):
        with pytest.raises(ParameterError):
            SolveConfig(**kwargs)


@cases.mark_methods("ARBK")
class LoopTestCase(cases.BaseSolverTestCase):
    def arbk(self, problem=None, blocks=8, **config):
        if problem is None:
            problem = self.gaussianInstance(seed=0)
        (s, t) = self.randomPartitions(problem, blocks, blocks)
        return ArbkSolver(problem, s, t, self.solveConfig(**config))

    def testMaxIters(self):
        """stops after max_iters iterations with every iteration traced"""
        report = self.arbk(max_iters=7, rse_tol=1e-15).solve()
        self.assertEqual(report.termination, Termination.MAX_ITERS_EXCEEDED)
        self.assertEqual(report.iterations, 7)
        self.assertEqual([k for (k, _) in report.trace], list(range(8)))
        assert not report.converged

    def testTraceStride(self):
        """iteration 0, every stride-th iteration and the final one"""
        report = self.arbk(max_iters=12, rse_tol=1e-15, trace_stride=5).solve()
        self.assertEqual([k for (k, _) in report.trace], [0, 5, 10, 12])

    def testStopsAtTolerance(self):
        """the first iteration at or below rse_tol ends the run and is always traced"""
        report = self.arbk(rse_tol=1e-3, trace_stride=1000).solve()
        assert report.converged
        self.assertLessEqual(report.rse, 1e-3)
        (k, _) = report.trace[-1]
        self.assertEqual(k, report.iterations)
        assert all(e > 1e-3 for (_, e) in report.trace[:-1])

    def testTraceIncreasing(self):
        report = self.arbk(rse_tol=1e-8, trace_stride=3).solve()
        iterations = [k for (k, _) in report.trace]
        assert all(k1 < k2 for (k1, k2) in zip(iterations, iterations[1:]))

    def testObserver(self):
        """called at entry and after every iteration"""
        seen = []
        report = self.arbk(max_iters=5, rse_tol=1e-15).solve(
            observer=lambda state: seen.append(state.iteration)
        )
        self.assertEqual(seen, [0, 1, 2, 3, 4, 5])
        self.assertEqual(report.iterations, 5)

    def testPrepareOnce(self):
        """a second solve reuses the block cache and repeats the trajectory"""
        solver = self.arbk(max_iters=3, rse_tol=1e-15)
        first = solver.solve()
        cache = solver.cache
        second = solver.solve()
        assert solver.cache is cache
        self.assertEqual(first.trace, second.trace)

    def testAbsoluteError(self, caplog):
        """a zero reference solution switches to the absolute error"""
        problem = make_consistent_instance(np.eye(4), np.eye(4), np.zeros((4, 4)))
        with caplog.at_level(logging.WARNING, logger="kmeq"):
            report = self.arbk(problem, blocks=2, rse_tol=1e-12).solve(
                initial_x=np.ones((4, 4))
            )
        self.assertEqual(report.error_kind, "absolute")
        self.assertEqual(report.trace[0], (0, 4.0))
        assert "absolute error" in caplog.text
        assert report.converged

    def testExplicitReference(self):
        """errors are measured against SolveConfig.reference_solution when given"""
        problem = self.gaussianInstance(seed=1)
        report = self.arbk(
            problem, max_iters=1, rse_tol=1e-15, reference_solution=2 * problem.x_star
        ).solve()
        self.assertEqual(report.trace[0], (0, 1.0))

    def testInitialShape(self):
        with pytest.raises(DimensionError):
            self.arbk().solve(initial_x=np.zeros((3, 3)))

    def testReport(self):
        """run records carry the instance shape, block sizes and seed"""
        problem = self.gaussianInstance(seed=2)
        report = self.arbk(problem, rse_tol=5e-2).solve()
        record = report.to_record(problem, tau_a=5, tau_b=5, seed=9)
        self.assertRecordMatch(
            record,
            {
                "method": "ARBK",
                "m": 40,
                "n": 8,
                "p": 8,
                "q": 40,
                "tau_a": 5,
                "tau_b": 5,
                "seed": 9,
                "iterations": ANYINT,
                "rse": Between(0, 5e-2),
                "elapsed_seconds": ANYFLOAT,
                "termination": "ToleranceReached",
            },
        )
        self.assertEqual(json.loads(report.to_json(problem, 5, 5, 9)), record)
        assert report.setup_seconds >= 0


class SolverLookupTestCase(cases.BaseSolverTestCase):
    @pytest.mark.parametrize("method", list(Method))
    def testGetSolverClass(self, method):
        self.assertEqual(get_solver_class(method).method, method)

    def testMakeSolver(self):
        problem = self.gaussianInstance(seed=3)
        (s, t) = self.randomPartitions(problem, 2, 2)
        config = self.solveConfig()
        assert isinstance(make_solver(Method.CME_RK, problem, config), CmeRkSolver)
        solver = make_solver(Method.GRBK, problem, config, s, t, update="alternating")
        self.assertEqual(solver.update, "alternating")
        with pytest.raises(ParameterError, match="needs row and column blocks"):
            make_solver(Method.ARBK, problem, config)

    def testPartitionMismatch(self):
        problem = self.gaussianInstance(seed=4)
        with pytest.raises(ParameterError, match="row partition"):
            ArbkSolver(
                problem,
                Partition.singletons(39),
                Partition.singletons(40),
                self.solveConfig(),
            )
        with pytest.raises(ParameterError, match="column partition"):
            ArbkSolver(
                problem,
                Partition.singletons(40),
                Partition.singletons(41),
                self.solveConfig(),
            )

    def testUniformIndex(self):
        """u in [0, 1) maps to floor(u n)"""
        class Fixed:
            def __init__(self, value):
                self.value = value

            def random(self):
                return self.value

        assert uniform_index(Fixed(0.0), 3) == 0
        assert uniform_index(Fixed(0.5), 3) == 1
        assert uniform_index(Fixed(float(np.nextafter(1.0, 0.0))), 3) == 2
