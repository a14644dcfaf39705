"""Convergence factors and expected-error bounds.

All paving quantities are the measured bounds of :mod:`kmeq.partition` for the actual
partitions; sigma_min is always the smallest nonzero singular value.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Any, Iterable, List, Optional, Tuple

import numpy as np

from .exceptions import DomainError, ParameterError, PavingInconsistency
from .linalg import (
    as_dense,
    extreme_singular_values,
    frobenius_norm,
    normalize_columns,
    normalize_rows,
)
from .partition import (
    Partition,
    PavingBounds,
    col_paving_bounds,
    row_paving_bounds,
)
from .utils.csvio import rows_to_csv
from .utils.junkdrawer import atomic_write_text

BoundPoint = Tuple[int, float]

# factors within this distance below 0 are round-off of an exact 0
ROUNDOFF = 1e-12


def _check_factor(value: float, name: str) -> float:
    if -ROUNDOFF <= value < 0.0:
        return 0.0
    if not 0.0 <= value < 1.0:
        raise PavingInconsistency(f"{name} = {value!r} is outside [0, 1)")
    return value


def _contraction(sigma_min: float, blocks: int, beta: float, name: str) -> float:
    if blocks < 1:
        raise ParameterError(f"block count must be at least 1, got {blocks}")
    if not beta > 0:
        raise ParameterError(f"paving bound beta must be positive, got {beta}")
    return _check_factor(1.0 - sigma_min**2 / (blocks * beta), name)


def arbk_y_factor(a: Any, s: int, beta_a: float) -> float:
    """gamma_hat = 1 - sigma_min(A)^2 / (s beta_A)"""
    (sigma_min, _) = extreme_singular_values(as_dense(a, "A"))
    return _contraction(sigma_min, s, beta_a, "gamma_hat")


def arbk_x_factor(b: Any, t: int, beta_b: float) -> float:
    """gamma_tilde = 1 - sigma_min(B)^2 / (t beta_B)"""
    (sigma_min, _) = extreme_singular_values(as_dense(b, "B"))
    return _contraction(sigma_min, t, beta_b, "gamma_tilde")


def arbk_y_error_bound(k: int, gamma_hat: float, y0_err_sq: float) -> float:
    """E ||Y_k - Y*||_F^2 <= gamma_hat^k ||Y_0 - Y*||_F^2"""
    if k < 0 or y0_err_sq < 0:
        raise ParameterError(f"invalid arguments k={k}, y0_err_sq={y0_err_sq}")
    return gamma_hat**k * y0_err_sq


def gamma_bar(
    k: int,
    gamma_hat: float,
    gamma_tilde: float,
    sigma_max_b_sq: float,
    t_alpha_b: float,
) -> float:
    """1 + sigma_max(B)^2 / (t alpha_B) * sum_{l=0}^{k} (gamma_hat / gamma_tilde)^(l+1)

    Only defined for gamma_tilde > 0; see :func:`x_error_bound_from_factors`."""
    if gamma_tilde == 0.0:
        raise DomainError("gamma_bar is undefined for gamma_tilde = 0")
    _check_bound_args(k, gamma_hat, gamma_tilde, sigma_max_b_sq, t_alpha_b, 0.0)
    ratio = gamma_hat / gamma_tilde
    return 1.0 + sigma_max_b_sq / t_alpha_b * math.fsum(
        ratio ** (ell + 1) for ell in range(k + 1)
    )


def _check_bound_args(k: int, *values: float) -> None:
    if k < 0:
        raise ParameterError(f"iteration index must be nonnegative, got {k}")
    if any(value < 0 for value in values):
        raise ParameterError(f"bound arguments must be nonnegative: {values}")


def x_error_bound_from_factors(
    k: int,
    gamma_hat: float,
    gamma_tilde: float,
    sigma_max_b_sq: float,
    t_alpha_b: float,
    x0_err_sq: float,
) -> float:
    """Bound on E ||X_{k+1} - X*||_F^2, i.e. gamma_bar_k gamma_tilde^(k+1) x0_err_sq,
    evaluated as

        (gamma_tilde^(k+1)
         + sigma_max(B)^2 / (t alpha_B) sum_{l=0}^{k} gamma_hat^(l+1) gamma_tilde^(k-l))
        x0_err_sq

    so that gamma_tilde = 0 leaves the gamma_hat series alone."""
    _check_bound_args(
        k, gamma_hat, gamma_tilde, sigma_max_b_sq, t_alpha_b, x0_err_sq
    )
    if t_alpha_b == 0.0:
        raise ParameterError("t * alpha_B must be positive")
    series = math.fsum(
        gamma_hat ** (ell + 1) * gamma_tilde ** (k - ell) for ell in range(k + 1)
    )
    return (
        gamma_tilde ** (k + 1) + sigma_max_b_sq / t_alpha_b * series
    ) * x0_err_sq


def arbk_x_error_bound(
    k: int,
    a: Any,
    b: Any,
    row_bounds: PavingBounds,
    col_bounds: PavingBounds,
    x0_err_sq: float,
) -> float:
    """Bound on E ||X_{k+1} - X*||_F^2 for ARBK with the given row/column pavings."""
    b = as_dense(b, "B")
    gamma_hat = arbk_y_factor(a, row_bounds.block_count, row_bounds.beta)
    gamma_tilde = arbk_x_factor(b, col_bounds.block_count, col_bounds.beta)
    (_, sigma_max_b) = extreme_singular_values(b)
    return x_error_bound_from_factors(
        k,
        gamma_hat,
        gamma_tilde,
        sigma_max_b**2,
        col_bounds.block_count * col_bounds.alpha,
        x0_err_sq,
    )


def cme_rk_factors(a: Any, b: Any) -> Tuple[float, float]:
    """rho1 = 1 - sigma_min(A)^2 / ||A||_F^2, rho2 = 1 - sigma_min(B)^2 / ||B||_F^2"""
    a = as_dense(a, "A")
    b = as_dense(b, "B")
    (sigma_min_a, _) = extreme_singular_values(a)
    (sigma_min_b, _) = extreme_singular_values(b)
    return (
        _check_factor(1.0 - sigma_min_a**2 / frobenius_norm(a) ** 2, "rho1"),
        _check_factor(1.0 - sigma_min_b**2 / frobenius_norm(b) ** 2, "rho2"),
    )


def cme_rk_error_bound(k: int, a: Any, b: Any, x0_err_sq: float) -> float:
    """Display curve for CME-RK: the X-error bound with (rho1, rho2) in place of
    (gamma_hat, gamma_tilde) and ||B||_F^2 in place of t alpha_B."""
    b = as_dense(b, "B")
    (rho1, rho2) = cme_rk_factors(a, b)
    (_, sigma_max_b) = extreme_singular_values(b)
    return x_error_bound_from_factors(
        k, rho1, rho2, sigma_max_b**2, frobenius_norm(b) ** 2, x0_err_sq
    )


def normalized_cme_rk_factors(a: Any, b: Any) -> Tuple[float, float]:
    """(rho1, rho2) of A with unit rows and B with unit columns, where
    ||A||_F^2 = m and ||B||_F^2 = q."""
    return cme_rk_factors(normalize_rows(a), normalize_columns(b))


def _beta_max(blocks: Iterable[np.ndarray], what: str) -> float:
    beta = 0.0
    for (block_id, block) in enumerate(blocks):
        norm = frobenius_norm(block)
        if norm == 0.0:
            raise DomainError(f"{what} block {block_id + 1} is identically zero")
        (_, sigma_max) = extreme_singular_values(block)
        beta = max(beta, sigma_max / norm)
    return beta


def grbk_factor(
    a: Any, b: Any, row_partition: Partition, col_partition: Partition
) -> float:
    """1 - [sigma_min(A)^2 / (||A||_F^2 beta_max(A)^2)]
         * [sigma_min(B)^2 / (||B||_F^2 beta_max(B)^2)]

    with beta_max(A) = max over U of sigma_max(A_{U,:}) / ||A_{U,:}||_F."""
    a = as_dense(a, "A")
    b = as_dense(b, "B")
    beta_a = _beta_max((a[rows] for rows in row_partition.index_arrays), "row")
    beta_b = _beta_max((b[:, cols] for cols in col_partition.index_arrays), "column")
    (sigma_min_a, _) = extreme_singular_values(a)
    (sigma_min_b, _) = extreme_singular_values(b)
    factor_a = sigma_min_a**2 / (frobenius_norm(a) ** 2 * beta_a**2)
    factor_b = sigma_min_b**2 / (frobenius_norm(b) ** 2 * beta_b**2)
    return _check_factor(1.0 - factor_a * factor_b, "GRBK factor")


@dataclasses.dataclass(frozen=True)
class ConvergenceFactors:
    gamma_hat: float
    gamma_tilde: float
    rho1: float
    rho2: float
    grbk_factor: float
    row_bounds: PavingBounds
    col_bounds: PavingBounds
    sigma_max_b_sq: float

    @property
    def t_alpha_b(self) -> float:
        return self.col_bounds.block_count * self.col_bounds.alpha

    def x_error_bound(self, k: int, x0_err_sq: float) -> float:
        return x_error_bound_from_factors(
            k,
            self.gamma_hat,
            self.gamma_tilde,
            self.sigma_max_b_sq,
            self.t_alpha_b,
            x0_err_sq,
        )


def convergence_factors(
    a: Any, b: Any, row_partition: Partition, col_partition: Partition
) -> ConvergenceFactors:
    a = as_dense(a, "A")
    b = as_dense(b, "B")
    row_bounds = row_paving_bounds(a, row_partition)
    col_bounds = col_paving_bounds(b, col_partition)
    (rho1, rho2) = cme_rk_factors(a, b)
    (_, sigma_max_b) = extreme_singular_values(b)
    return ConvergenceFactors(
        gamma_hat=arbk_y_factor(a, row_bounds.block_count, row_bounds.beta),
        gamma_tilde=arbk_x_factor(b, col_bounds.block_count, col_bounds.beta),
        rho1=rho1,
        rho2=rho2,
        grbk_factor=grbk_factor(a, b, row_partition, col_partition),
        row_bounds=row_bounds,
        col_bounds=col_bounds,
        sigma_max_b_sq=sigma_max_b**2,
    )


def bound_curve(
    checkpoints: Iterable[int], factors: ConvergenceFactors, x0_err_sq: float
) -> List[BoundPoint]:
    """(k, bound on E ||X_{k+1} - X*||_F^2) per checkpoint k."""
    return [(k, factors.x_error_bound(k, x0_err_sq)) for k in checkpoints]


def write_bound_csv(
    path: Path,
    curve: Iterable[BoundPoint],
    empirical: Optional[Iterable[float]] = None,
) -> None:
    """``k,bound``, or ``k,empirical,bound`` when empirical values are given."""
    if empirical is None:
        text = rows_to_csv(("k", "bound"), curve)
    else:
        text = rows_to_csv(
            ("k", "empirical", "bound"),
            ((k, value, bound) for ((k, bound), value) in zip(curve, empirical)),
        )
    atomic_write_text(path, text)
