from __future__ import annotations

from typing import Any, Optional, Type

import numpy as np

from kmeq.basesolvers import (
    CumulativeSampler,
    Observer,
    SolveConfig,
    SolveReport,
    SolverState,
    _BaseSolver,
)
from kmeq.enums import Method
from kmeq.exceptions import DomainError
from kmeq.problems import ProblemInstance


def cme_rk_y_step(
    state: SolverState, a: np.ndarray, f: np.ndarray, row: int, row_norm_sq: float
) -> SolverState:
    """Y <- Y + A_{i,:}^T (F_{i,:} - A_{i,:} Y) / ||A_{i,:}||^2"""
    a_row = a[row]
    state.y += np.outer(a_row / row_norm_sq, f[row] - a_row @ state.y)
    return state


def cme_rk_x_step(
    state: SolverState, b: np.ndarray, col: int, col_norm_sq: float
) -> SolverState:
    """X <- X + (Y_{:,j} - X B_{:,j}) B_{:,j}^T / ||B_{:,j}||^2"""
    b_col = b[:, col]
    state.x += np.outer(state.y[:, col] - state.x @ b_col, b_col / col_norm_sq)
    return state


class CmeRkSolver(_BaseSolver):
    """Randomized Kaczmarz on single rows of A and single columns of B, drawn with
    probabilities proportional to their squared norms."""

    method = Method.CME_RK

    def prepare(self) -> None:
        self.row_norms_sq = np.sum(self.a**2, axis=1)
        self.col_norms_sq = np.sum(self.b**2, axis=0)
        if not np.any(self.row_norms_sq > 0) or not np.any(self.col_norms_sq > 0):
            raise DomainError("A and B must have a nonzero row and column")
        self.row_sampler = CumulativeSampler(self.row_norms_sq)
        self.col_sampler = CumulativeSampler(self.col_norms_sq)

    def step(self, state: SolverState, rng: np.random.Generator) -> None:
        row = self.row_sampler.draw(rng)
        cme_rk_y_step(state, self.a, self.f, row, self.row_norms_sq[row])
        col = self.col_sampler.draw(rng)
        cme_rk_x_step(state, self.b, col, self.col_norms_sq[col])


def solve_cme_rk(
    problem: ProblemInstance,
    config: SolveConfig,
    initial_x: Optional[Any] = None,
    observer: Optional[Observer] = None,
) -> SolveReport:
    return CmeRkSolver(problem, config).solve(initial_x, observer)


def get_kmeq_solver_class() -> Type[CmeRkSolver]:
    return CmeRkSolver
