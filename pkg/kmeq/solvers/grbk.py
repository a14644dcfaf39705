"""Global randomized block Kaczmarz.

Blocks are drawn with probabilities ||A_{U,:}||_F^2 / ||A||_F^2 and
||B_{:,V}||_F^2 / ||B||_F^2 (row block first, then column block, from the same
stream). Two update forms:

* ``"global"`` projects onto the block system A_{U,:} X B_{:,V} = F_{U,V}:
  X <- X + A_{U,:}^+ (F_{U,V} - A_{U,:} X B_{:,V}) B_{:,V}^+
* ``"alternating"`` applies the two half-steps of :mod:`kmeq.solvers.arbk`.
"""

from __future__ import annotations

from typing import Any, Optional, Type

import numpy as np

from kmeq.basesolvers import (
    CumulativeSampler,
    Observer,
    SolveConfig,
    SolveReport,
    SolverState,
)
from kmeq.enums import Method
from kmeq.exceptions import DomainError, ParameterError
from kmeq.partition import Partition
from kmeq.problems import ProblemInstance

from .arbk import ArbkSolver, BlockCache

UPDATES = ("global", "alternating")


def block_weights(norms_sq: np.ndarray, partition: Partition, what: str) -> np.ndarray:
    weights = np.array([norms_sq[block].sum() for block in partition.index_arrays])
    if not np.any(weights > 0):
        raise DomainError(f"every {what} block has zero Frobenius norm")
    return weights


def grbk_global_step(
    state: SolverState,
    a: np.ndarray,
    b: np.ndarray,
    f: np.ndarray,
    row_block: int,
    col_block: int,
    cache: BlockCache,
) -> SolverState:
    rows = cache.rows[row_block]
    cols = cache.cols[col_block]
    residual = f[np.ix_(rows, cols)] - a[rows] @ state.x @ b[:, cols]
    state.x += cache.row_pinvs[row_block] @ residual @ cache.col_pinvs[col_block]
    return state


class GrbkSolver(ArbkSolver):
    method = Method.GRBK

    def __init__(
        self,
        problem: ProblemInstance,
        row_partition: Partition,
        col_partition: Partition,
        config: SolveConfig,
        update: str = "global",
    ):
        if update not in UPDATES:
            raise ParameterError(f"unknown GRBK update {update!r}, expected {UPDATES}")
        super().__init__(problem, row_partition, col_partition, config)
        self.update = update

    def prepare(self) -> None:
        super().prepare()
        self.row_sampler = CumulativeSampler(
            block_weights(np.sum(self.a**2, axis=1), self.row_partition, "row")
        )
        self.col_sampler = CumulativeSampler(
            block_weights(np.sum(self.b**2, axis=0), self.col_partition, "column")
        )

    def draw_row_block(self, rng: np.random.Generator) -> int:
        return self.row_sampler.draw(rng)

    def draw_col_block(self, rng: np.random.Generator) -> int:
        return self.col_sampler.draw(rng)

    def step(self, state: SolverState, rng: np.random.Generator) -> None:
        if self.update == "alternating":
            super().step(state, rng)
            return
        row_block = self.draw_row_block(rng)
        col_block = self.draw_col_block(rng)
        grbk_global_step(
            state, self.a, self.b, self.f, row_block, col_block, self.cache
        )

    def finish(self, state: SolverState) -> None:
        if self.update == "global":
            # the global form never touches Y
            state.y = state.x @ self.b


def solve_grbk(
    problem: ProblemInstance,
    row_partition: Partition,
    col_partition: Partition,
    config: SolveConfig,
    update: str = "global",
    initial_x: Optional[Any] = None,
    observer: Optional[Observer] = None,
) -> SolveReport:
    return GrbkSolver(
        problem, row_partition, col_partition, config, update=update
    ).solve(initial_x, observer)


def get_kmeq_solver_class() -> Type[GrbkSolver]:
    return GrbkSolver
