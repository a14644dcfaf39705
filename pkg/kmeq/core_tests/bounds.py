import numpy as np
import pytest

from kmeq import cases
from kmeq.bounds import (
    arbk_x_error_bound,
    arbk_x_factor,
    arbk_y_error_bound,
    arbk_y_factor,
    bound_curve,
    cme_rk_error_bound,
    cme_rk_factors,
    convergence_factors,
    gamma_bar,
    grbk_factor,
    normalized_cme_rk_factors,
    write_bound_csv,
    x_error_bound_from_factors,
)
from kmeq.exceptions import DomainError, ParameterError, PavingInconsistency
from kmeq.linalg import extreme_singular_values
from kmeq.partition import (
    Partition,
    col_paving_bounds,
    column_random_partition,
    row_paving_bounds,
    row_random_partition,
)
from kmeq.problems import gen_smatrix
from kmeq.utils.csvio import read_rows


class ArbkFactorsTestCase(cases._KmeqTestCase):
    def testYFactor(self):
        """gamma_hat = 1 - sigma_min(A)^2 / (s beta_A)"""
        assert arbk_y_factor(np.eye(2), 1, 1.0) == 0.0
        assert arbk_y_factor(np.diag([10.0, 0.1]), 1, 100.0) == pytest.approx(0.9999)

    def testXFactor(self):
        """gamma_tilde mirrors gamma_hat on the columns of B"""
        assert arbk_x_factor(np.eye(3), 1, 1.0) == 0.0
        assert arbk_x_factor(np.diag([2.0, 1.0]), 2, 4.0) == pytest.approx(1 - 1 / 8)

    def testInvalidArguments(self):
        with pytest.raises(ParameterError):
            arbk_y_factor(np.eye(2), 0, 1.0)
        with pytest.raises(ParameterError):
            arbk_y_factor(np.eye(2), 1, 0.0)

    def testInconsistentPaving(self):
        """a beta below the paving definition yields a factor outside [0, 1)"""
        with pytest.raises(PavingInconsistency):
            arbk_y_factor(np.eye(2), 1, 0.5)

    def testRoundoffSnapsToZero(self):
        a = np.eye(3) * 3.0
        (sigma_min, _) = extreme_singular_values(a)
        assert arbk_y_factor(a, 1, sigma_min**2 * (1 - 1e-15)) == 0.0

    def testScaleInvariance(self):
        """gamma_hat(cA) = gamma_hat(A) once beta is recomputed for cA"""
        a = np.random.default_rng(0).standard_normal((30, 6))
        s = row_random_partition(30, 5, seed=3)
        factors = [
            arbk_y_factor(c * a, len(s), row_paving_bounds(c * a, s).beta)
            for c in (1.0, 7.5)
        ]
        assert factors[0] == pytest.approx(factors[1], rel=1e-12)
        assert 0 < factors[0] < 1

    def testYErrorBound(self):
        """gamma_hat^k ||Y0 - Y*||^2"""
        assert arbk_y_error_bound(0, 0.5, 3.0) == 3.0
        assert arbk_y_error_bound(3, 0.5, 8.0) == 1.0
        with pytest.raises(ParameterError):
            arbk_y_error_bound(-1, 0.5, 1.0)


class XErrorBoundTestCase(cases._KmeqTestCase):
    def testFirstTerm(self):
        """k = 0, gamma_hat = gamma_tilde = g and sigma_max(B)^2 = t alpha_B give
        2 g x0"""
        assert x_error_bound_from_factors(0, 0.3, 0.3, 2.0, 2.0, 5.0) == pytest.approx(
            2 * 0.3 * 5.0
        )

    def testExactYSide(self):
        """gamma_hat = 0 leaves the pure B-side contraction gamma_tilde^(k+1) x0"""
        for k in (0, 1, 10):
            assert x_error_bound_from_factors(
                k, 0.0, 0.4, 3.0, 1.5, 2.0
            ) == pytest.approx(0.4 ** (k + 1) * 2.0)

    def testExactXSide(self):
        """gamma_tilde = 0 is finite in product form although gamma_bar is not
        defined"""
        assert x_error_bound_from_factors(2, 0.5, 0.0, 1.0, 1.0, 1.0) == pytest.approx(
            0.125
        )
        with pytest.raises(DomainError):
            gamma_bar(2, 0.5, 0.0, 1.0, 1.0)

    @pytest.mark.parametrize("k", [0, 5, 50])
    def testMatchesGammaBar(self, k):
        """product form = gamma_bar_k gamma_tilde^(k+1) x0"""
        (gh, gt, smax, t_alpha, x0) = (0.7, 0.8, 3.0, 2.5, 4.0)
        expected = gamma_bar(k, gh, gt, smax, t_alpha) * gt ** (k + 1) * x0
        assert x_error_bound_from_factors(
            k, gh, gt, smax, t_alpha, x0
        ) == pytest.approx(expected, rel=1e-12)

    def testGammaBarMonotone(self):
        """gamma_bar_k is nondecreasing; the bound sequence eventually decreases"""
        (gh, gt) = (0.95, 0.9)
        bars = [gamma_bar(k, gh, gt, 2.0, 1.0) for k in range(0, 1001, 50)]
        assert all(b1 <= b2 for (b1, b2) in zip(bars, bars[1:]))
        seq = [
            x_error_bound_from_factors(k, gh, gt, 2.0, 1.0, 1.0) for k in range(1001)
        ]
        tail = seq[200:]
        assert all(b2 < b1 for (b1, b2) in zip(tail, tail[1:]))

    def testInvalid(self):
        with pytest.raises(ParameterError):
            x_error_bound_from_factors(-1, 0.5, 0.5, 1.0, 1.0, 1.0)
        with pytest.raises(ParameterError):
            x_error_bound_from_factors(1, 0.5, 0.5, 1.0, 0.0, 1.0)

    def testFromPavings(self):
        """the X bound taken straight from measured pavings"""
        a = np.eye(4)
        b = np.eye(4)
        full = Partition.single_block(4)
        halves = Partition(universe_size=4, blocks=((0, 1), (2, 3)))
        bound = arbk_x_error_bound(
            3, a, b, row_paving_bounds(a, full), col_paving_bounds(b, halves), 2.0
        )
        # gamma_hat = 0, gamma_tilde = 1 - 1/2
        assert bound == pytest.approx(0.5**4 * 2.0)


class CmeRkFactorsTestCase(cases._KmeqTestCase):
    def testIdentities(self):
        (rho1, rho2) = cme_rk_factors(np.eye(5), 3.0 * np.eye(4))
        assert rho1 == pytest.approx(1 - 1 / 5)
        assert rho2 == pytest.approx(1 - 1 / 4)

    def testSmatrix(self):
        """rho1 matches a recomputation from the raw SVD"""
        a = gen_smatrix(1000, 100, 100, 10.0, 0.1, seed=2)
        s = np.linalg.svd(a, compute_uv=False)
        expected = 1 - s[-1] ** 2 / np.sum(a * a)
        (rho1, _) = cme_rk_factors(a, np.eye(2))
        assert rho1 == pytest.approx(expected, rel=1e-12)

    def testNormalized(self):
        """after unit-norm scaling, ||A||_F^2 = m and ||B||_F^2 = q"""
        rng = np.random.default_rng(4)
        a = rng.standard_normal((12, 4)) * rng.uniform(0.1, 10, size=(12, 1))
        b = rng.standard_normal((4, 9))
        (rho1, rho2) = normalized_cme_rk_factors(a, b)
        a_hat = a / np.linalg.norm(a, axis=1, keepdims=True)
        b_hat = b / np.linalg.norm(b, axis=0, keepdims=True)
        assert rho1 == pytest.approx(
            1 - np.linalg.svd(a_hat, compute_uv=False)[-1] ** 2 / 12
        )
        assert rho2 == pytest.approx(
            1 - np.linalg.svd(b_hat, compute_uv=False)[-1] ** 2 / 9
        )

    def testDisplayCurve(self):
        """k = 0 of the CME-RK curve is rho2 + rho1 / q for A = B = I"""
        a = np.eye(3)
        b = np.eye(3)
        (rho1, rho2) = cme_rk_factors(a, b)
        assert cme_rk_error_bound(0, a, b, 1.0) == pytest.approx(
            rho2 + 1 / 3 * rho1
        )


class GrbkFactorTestCase(cases._KmeqTestCase):
    def testIdentitySingletons(self):
        factor = grbk_factor(
            np.eye(3), np.eye(4), Partition.singletons(3), Partition.singletons(4)
        )
        assert factor == pytest.approx(1 - (1 / 3) * (1 / 4))

    def testSingleBlocks(self):
        """one full block: beta_max = sigma_max / ||A||_F"""
        rng = np.random.default_rng(8)
        a = rng.standard_normal((10, 4))
        b = rng.standard_normal((4, 10))
        full = Partition.single_block(10)
        factor = grbk_factor(a, b, full, full)
        (amin, amax) = extreme_singular_values(a)
        (bmin, bmax) = extreme_singular_values(b)
        assert factor == pytest.approx(1 - (amin / amax) ** 2 * (bmin / bmax) ** 2)

    def testSlowerThanRowAndColumnFactors(self):
        """with singleton blocks the GRBK factor is 1 - (1 - rho1)(1 - rho2), above
        both CME-RK factors"""
        rng = np.random.default_rng(9)
        a = rng.standard_normal((20, 5))
        b = rng.standard_normal((5, 20))
        factor = grbk_factor(a, b, Partition.singletons(20), Partition.singletons(20))
        (rho1, rho2) = cme_rk_factors(a, b)
        assert factor == pytest.approx(1 - (1 - rho1) * (1 - rho2), rel=1e-12)
        assert factor > max(rho1, rho2)

    def testZeroBlock(self):
        """a zero block has no sampling weight and is reported 1-based"""
        a = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DomainError, match="row block 1"):
            grbk_factor(a, np.eye(2), Partition.singletons(3), Partition.singletons(2))


class ConvergenceFactorsTestCase(cases._KmeqTestCase):
    def setUp(self):
        rng = np.random.default_rng(10)
        self.a = rng.standard_normal((40, 8))
        self.b = rng.standard_normal((8, 40))
        self.s = row_random_partition(40, 4, seed=1)
        self.t = column_random_partition(40, 4, seed=2)

    def testBundle(self):
        """convergence_factors agrees with the individual factor functions"""
        factors = convergence_factors(self.a, self.b, self.s, self.t)
        row_bounds = row_paving_bounds(self.a, self.s)
        col_bounds = col_paving_bounds(self.b, self.t)
        assert factors.gamma_hat == arbk_y_factor(self.a, 4, row_bounds.beta)
        assert factors.gamma_tilde == arbk_x_factor(self.b, 4, col_bounds.beta)
        assert (factors.rho1, factors.rho2) == cme_rk_factors(self.a, self.b)
        assert factors.t_alpha_b == pytest.approx(4 * col_bounds.alpha)
        assert factors.x_error_bound(7, 3.0) == pytest.approx(
            arbk_x_error_bound(7, self.a, self.b, row_bounds, col_bounds, 3.0)
        )
        for value in (factors.gamma_hat, factors.gamma_tilde, factors.grbk_factor):
            assert 0 <= value < 1

    def testCurveCsv(self, tmp_path):
        """bound curves are written as k,bound or k,empirical,bound"""
        factors = convergence_factors(self.a, self.b, self.s, self.t)
        curve = bound_curve([0, 5, 10], factors, 64.0)
        assert [k for (k, _) in curve] == [0, 5, 10]
        assert curve[0][1] == pytest.approx(factors.x_error_bound(0, 64.0))

        write_bound_csv(tmp_path / "bound.csv", curve)
        rows = read_rows(tmp_path / "bound.csv")
        assert list(rows[0]) == ["k", "bound"]
        assert [float(row["bound"]) for row in rows] == [b for (_, b) in curve]

        write_bound_csv(tmp_path / "overlay.csv", curve, [1.0, 0.5, 0.25])
        rows = read_rows(tmp_path / "overlay.csv")
        assert list(rows[0]) == ["k", "empirical", "bound"]
        assert rows[1]["empirical"] == "0.5"

