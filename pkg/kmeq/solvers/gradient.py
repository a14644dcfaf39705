"""Gradient iteration on G(X) = ||F - AXB||_F^2 / 2, used as the LSPIA baseline:

    X <- X + step A^T (F - A X B) B^T
"""

from __future__ import annotations

import logging
from typing import Any, Optional, Type, Union

import numpy as np

from kmeq.basesolvers import (
    Observer,
    SolveConfig,
    SolveReport,
    SolverState,
    _BaseSolver,
)
from kmeq.enums import Method
from kmeq.exceptions import ParameterError
from kmeq.linalg import extreme_singular_values
from kmeq.problems import ProblemInstance

logger = logging.getLogger(__name__)

StepSize = Union[float, str, None]


def lipschitz_constant(a: np.ndarray, b: np.ndarray) -> float:
    """sigma_max(A)^2 sigma_max(B)^2, the Lipschitz constant of grad G."""
    return extreme_singular_values(a)[1] ** 2 * extreme_singular_values(b)[1] ** 2


def resolve_step_size(step_size: StepSize, lipschitz: float) -> float:
    """``None``/``"auto"`` gives 1 / L; explicit steps must lie in (0, 2 / L)."""
    if step_size is None or step_size == "auto":
        return 1.0 / lipschitz
    step = float(step_size)
    if not 0.0 < step < 2.0 / lipschitz:
        raise ParameterError(
            f"step size {step} is outside the convergence interval "
            f"(0, {2.0 / lipschitz})"
        )
    return step


class GradientSolver(_BaseSolver):
    method = Method.GRADIENT

    def __init__(
        self, problem: ProblemInstance, config: SolveConfig, step_size: StepSize = None
    ):
        super().__init__(problem, config)
        self.requested_step_size = step_size

    def prepare(self) -> None:
        self.step_size = resolve_step_size(
            self.requested_step_size, lipschitz_constant(self.a, self.b)
        )
        logger.debug("gradient step size %.6e", self.step_size)

    def step(self, state: SolverState, rng: np.random.Generator) -> None:
        state.y = state.x @ self.b
        residual = self.f - self.a @ state.y
        state.x += self.step_size * (self.a.T @ residual @ self.b.T)

    def finish(self, state: SolverState) -> None:
        state.y = state.x @ self.b


def solve_gradient(
    problem: ProblemInstance,
    step_size: StepSize,
    config: SolveConfig,
    initial_x: Optional[Any] = None,
    observer: Optional[Observer] = None,
) -> SolveReport:
    return GradientSolver(problem, config, step_size).solve(initial_x, observer)


def get_kmeq_solver_class() -> Type[GradientSolver]:
    return GradientSolver
