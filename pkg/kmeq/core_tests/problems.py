import json

import numpy as np
import pytest

from kmeq import cases
from kmeq.bspline import surface_samples
from kmeq.enums import Family, Surface
from kmeq.exceptions import DimensionError, ParameterError, RegimeWarning
from kmeq.linalg import extreme_singular_values, frobenius_norm
from kmeq.problems import (
    ProblemInstance,
    SmatrixParams,
    build_fitting_problem,
    gen_gaussian,
    gen_smatrix,
    gen_smatrix_instance,
    load_instance,
    make_consistent_instance,
    save_instance,
)


class GaussianTestCase(cases._KmeqTestCase):
    def testShapes(self):
        """F = A x* B with x* = ones"""
        problem = gen_gaussian(30, 5, 4, 20, seed=0)
        self.assertEqual(problem.shape, (30, 5, 4, 20))
        self.assertEqual(problem.f.shape, (30, 20))
        self.assertMatrixClose(problem.x_star, np.ones((5, 4)), rtol=0, atol=0)
        self.assertMatrixClose(problem.f, problem.a @ problem.x_star @ problem.b)
        assert problem.consistent

    def testProvenance(self):
        problem = gen_gaussian(10, 2, 2, 10, seed=5)
        assert problem.provenance.to_json() == {
            "family": Family.GAUSSIAN.value,
            "parameters": {"m": 10, "n": 2, "p": 2, "q": 10},
            "seed": 5,
        }

    def testDeterminism(self):
        """one seed, one instance"""
        first = gen_gaussian(12, 3, 3, 12, seed=42)
        second = gen_gaussian(12, 3, 3, 12, seed=42)
        self.assertMatrixClose(first.a, second.a, rtol=0, atol=0)
        self.assertMatrixClose(first.b, second.b, rtol=0, atol=0)
        other = gen_gaussian(12, 3, 3, 12, seed=43)
        assert not np.array_equal(first.a, other.a)

    def testRegimeWarning(self):
        """thin A / fat B is expected but not required"""
        with pytest.warns(RegimeWarning, match="thin-A / fat-B"):
            problem = gen_gaussian(3, 5, 4, 20, seed=0)
        self.assertEqual(problem.shape, (3, 5, 4, 20))

    def testInvalidDimensions(self):
        with pytest.raises(ParameterError):
            gen_gaussian(0, 1, 1, 1, seed=0)


class SmatrixTestCase(cases._KmeqTestCase):
    def testRankTwoSpectrum(self):
        """with r = 2 the nonzero singular values are exactly {sigma1, sigma2}"""
        r = gen_smatrix(8, 6, 2, 3.0, 0.5, seed=1)
        s = np.linalg.svd(r, compute_uv=False)
        assert s[:2] == pytest.approx([3.0, 0.5], rel=1e-12)
        assert np.all(s[2:] < 1e-12)

    def testEqualSingularValues(self):
        """sigma1 = sigma2 gives a scaled orthonormal matrix"""
        r = gen_smatrix(10, 4, 4, 2.0, 2.0, seed=2)
        assert np.linalg.svd(r, compute_uv=False) == pytest.approx([2.0] * 4)

    def testSpectrumRange(self):
        """all singular values lie in [sigma2, sigma1], both ends attained"""
        r = gen_smatrix(50, 20, 20, 10.0, 0.1, seed=3)
        s = np.linalg.svd(r, compute_uv=False)
        assert s[0] == pytest.approx(10.0)
        assert s[-1] == pytest.approx(0.1)
        assert np.all((s >= 0.1 - 1e-12) & (s <= 10.0 + 1e-12))

    def testInvalid(self):
        with pytest.raises(ParameterError):
            gen_smatrix(5, 5, 1, 1.0, 1.0, seed=0)
        with pytest.raises(ParameterError):
            gen_smatrix(5, 4, 5, 1.0, 1.0, seed=0)
        with pytest.raises(ParameterError):
            gen_smatrix(5, 4, 3, 0.1, 1.0, seed=0)

    def testCaseI(self):
        """kappa(A) = kappa(B) = 100 for the default sigma pair"""
        problem = gen_smatrix_instance("I", seed=0)
        self.assertEqual(problem.shape, (1000, 100, 100, 1000))
        for m in (problem.a, problem.b):
            (sigma_min, sigma_max) = extreme_singular_values(m)
            assert sigma_max / sigma_min == pytest.approx(100.0, rel=1e-8)
        assert problem.provenance.family == Family.SMATRIX.value

    def testCustomCase(self):
        """explicit (A, B) parameters instead of a named case"""
        problem = gen_smatrix_instance(
            (SmatrixParams(20, 5, 5), SmatrixParams(4, 16, 4, 2.0, 1.0)), seed=1
        )
        self.assertEqual(problem.shape, (20, 5, 4, 16))
        with pytest.raises(ParameterError):
            gen_smatrix_instance("V", seed=0)


class ConsistentInstanceTestCase(cases._KmeqTestCase):
    def testDefaultSolution(self):
        """x* defaults to ones(n, p)"""
        problem = make_consistent_instance(np.eye(3), np.eye(2) * 2)
        self.assertMatrixClose(problem.x_star, np.ones((3, 2)))
        self.assertMatrixClose(problem.f, 2 * np.ones((3, 2)))

    def testZeroSolution(self):
        problem = make_consistent_instance(np.eye(2), np.eye(2), np.zeros((2, 2)))
        self.assertMatrixClose(problem.f, np.zeros((2, 2)), rtol=0, atol=0)

    def testShapeChecks(self):
        with pytest.raises(DimensionError):
            make_consistent_instance(np.eye(3), np.eye(2), np.ones((2, 2)))
        with pytest.raises(DimensionError):
            ProblemInstance(a=np.eye(3), b=np.eye(2), f=np.ones((2, 2)))

    def testResidualCheck(self):
        """a declared solution must satisfy A x* B = F"""
        with pytest.raises(DimensionError, match="inconsistent"):
            ProblemInstance(
                a=np.eye(2), b=np.eye(2), f=np.ones((2, 2)), x_star=np.zeros((2, 2))
            )
        problem = ProblemInstance(
            a=np.eye(2),
            b=np.eye(2),
            f=np.ones((2, 2)),
            x_star=np.zeros((2, 2)),
            consistent=False,
        )
        assert not problem.consistent

    def testReferenceSolution(self):
        """without x*, the minimum-norm solution A+ F B+"""
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        problem = ProblemInstance(a=a, b=np.eye(2), f=a @ np.full((2, 2), 3.0))
        self.assertMatrixClose(problem.reference_solution, np.full((2, 2), 3.0))
        self.assertMatrixClose(problem.y_star, np.full((2, 2), 3.0))


class FittingProblemTestCase(cases._KmeqTestCase):
    def testShapes(self):
        """A (m x n), B (p x q) and the z grid as F"""
        problem = build_fitting_problem("1", 150, 150, 50, 50)
        self.assertEqual(problem.shape, (150, 50, 50, 150))
        self.assertEqual(problem.f.shape, (150, 150))
        assert not problem.consistent
        self.assertMatrixClose(problem.f, surface_samples(Surface.SURFACE1, 150, 150).z)
        self.assertEqual(problem.provenance.parameters["surface"], "surface1")

    def testPartitionOfUnity(self):
        """every collocation row of A and column of B sums to 1"""
        problem = build_fitting_problem(Surface.SURFACE2, 30, 25, 10, 8)
        self.assertMatrixClose(problem.a.sum(axis=1), np.ones(30))
        self.assertMatrixClose(problem.b.sum(axis=0), np.ones(25))
        assert np.all(problem.a >= 0) and np.all(problem.b >= 0)

    def testProjected(self):
        """rhs="projected" replaces F by A x* B"""
        problem = build_fitting_problem("2", 30, 30, 10, 10, rhs="projected")
        assert problem.consistent
        self.assertMatrixClose(problem.f, problem.a @ problem.x_star @ problem.b)

    def testLeastSquaresReference(self):
        """x* = A+ F B+ zeroes the normal-equation residual A^T (A x* B - F) B^T"""
        problem = build_fitting_problem(
            "2", 30, 30, 10, 10, parameterization="mean_chord"
        )
        residual = problem.a @ problem.x_star @ problem.b - problem.f
        self.assertMatrixClose(
            problem.a.T @ residual @ problem.b.T, np.zeros((10, 10)), atol=1e-9
        )

    def testSurfaceOneIsSplineByDefault(self):
        """z = s^3 - 3st^2 is bicubic in the default axis parameters, so A x* B = F"""
        problem = build_fitting_problem("1", 150, 150, 50, 50)
        self.assertEqual(problem.provenance.parameters["parameterization"], "axis")
        residual = frobenius_norm(problem.a @ problem.x_star @ problem.b - problem.f)
        self.assertLessEqual(residual, 1e-9 * frobenius_norm(problem.f))

    def testInvalid(self):
        with pytest.raises(ParameterError):
            build_fitting_problem("1", 10, 10, 11, 5)
        with pytest.raises(ParameterError):
            build_fitting_problem("1", 10, 10, 5, 5, rhs="smoothed")
        with pytest.raises(ValueError):
            build_fitting_problem("3", 10, 10, 5, 5)


class InstanceFilesTestCase(cases._KmeqTestCase):
    def testRoundTrip(self, tmp_path):
        problem = gen_gaussian(9, 3, 2, 7, seed=11)
        save_instance(problem, tmp_path / "instance")
        assert sorted(p.name for p in (tmp_path / "instance").iterdir()) == [
            "A.csv",
            "B.csv",
            "F.csv",
            "X_star.csv",
            "provenance.json",
        ]
        loaded = load_instance(tmp_path / "instance")
        for (got, expected) in zip(
            (loaded.a, loaded.b, loaded.f, loaded.x_star),
            (problem.a, problem.b, problem.f, problem.x_star),
        ):
            self.assertMatrixClose(got, expected, rtol=0, atol=0)
        self.assertEqual(loaded.provenance.to_json(), problem.provenance.to_json())
        metadata = json.loads((tmp_path / "instance" / "provenance.json").read_text())
        assert metadata["consistent"] is True

    def testWithoutMetadata(self, tmp_path):
        """a bare matrix directory loads as a custom instance without x*"""
        problem = make_consistent_instance(np.eye(2), np.eye(2))
        save_instance(problem, tmp_path)
        (tmp_path / "provenance.json").unlink()
        (tmp_path / "X_star.csv").unlink()
        loaded = load_instance(tmp_path)
        assert loaded.x_star is None
        self.assertEqual(loaded.provenance.family, "custom")
