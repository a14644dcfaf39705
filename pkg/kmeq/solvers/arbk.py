"""Alternating randomized block Kaczmarz.

Each outer iteration does one block Kaczmarz step on AY = F over a uniformly drawn row
block U of S, then one on XB = Y over a uniformly drawn column block V of T:

    Y <- Y + A_{U,:}^+ (F_{U,:} - A_{U,:} Y)
    X <- X + (Y_{:,V} - X B_{:,V}) B_{:,V}^+
"""

from __future__ import annotations

import dataclasses
from typing import Any, Optional, Tuple, Type

import numpy as np

from kmeq.basesolvers import (
    BlockSolver,
    Observer,
    SolveConfig,
    SolveReport,
    SolverState,
    uniform_index,
)
from kmeq.enums import Method
from kmeq.exceptions import KmeqError
from kmeq.linalg import DenseMatrix, as_dense, pseudoinverse
from kmeq.partition import Partition
from kmeq.problems import ProblemInstance


@dataclasses.dataclass(frozen=True)
class BlockCache:
    """Pseudoinverses of every row block of A and column block of B, computed once
    per solve since partitions are fixed."""

    row_partition: Partition
    col_partition: Partition
    row_pinvs: Tuple[DenseMatrix, ...]
    """A_{U,:}^+ (n x |U|) per block U of S"""
    col_pinvs: Tuple[DenseMatrix, ...]
    """B_{:,V}^+ (|V| x p) per block V of T"""

    @property
    def rows(self) -> Tuple[np.ndarray, ...]:
        return self.row_partition.index_arrays

    @property
    def cols(self) -> Tuple[np.ndarray, ...]:
        return self.col_partition.index_arrays


def block_pseudoinverse(block: DenseMatrix) -> DenseMatrix:
    """M^+, taking v^T / ||v||^2 directly for a single row or column v."""
    if min(block.shape) == 1:
        norm_sq = float(np.sum(block * block))
        if norm_sq == 0.0:
            return np.zeros(block.shape[::-1])
        return np.ascontiguousarray(block.T / norm_sq)
    return pseudoinverse(block)


def _pinvs(blocks: Any, what: str) -> Tuple[DenseMatrix, ...]:
    pinvs = []
    for (block_id, block) in enumerate(blocks):
        try:
            pinvs.append(block_pseudoinverse(block))
        except KmeqError as e:
            raise type(e)(f"{what} block {block_id + 1}: {e}") from e
    return tuple(pinvs)


def build_block_cache(
    a: Any, row_partition: Partition, b: Any, col_partition: Partition
) -> BlockCache:
    a = as_dense(a, "A")
    b = as_dense(b, "B")
    return BlockCache(
        row_partition=row_partition,
        col_partition=col_partition,
        row_pinvs=_pinvs((a[rows] for rows in row_partition.index_arrays), "row"),
        col_pinvs=_pinvs((b[:, cols] for cols in col_partition.index_arrays), "column"),
    )


def arbk_y_step(
    state: SolverState, a: DenseMatrix, f: DenseMatrix, block: int, cache: BlockCache
) -> SolverState:
    """Y <- Y + A_{U,:}^+ (F_{U,:} - A_{U,:} Y), U being block ``block`` of S."""
    rows = cache.rows[block]
    state.y += cache.row_pinvs[block] @ (f[rows] - a[rows] @ state.y)
    return state


def arbk_x_step(
    state: SolverState, b: DenseMatrix, block: int, cache: BlockCache
) -> SolverState:
    """X <- X + (Y_{:,V} - X B_{:,V}) B_{:,V}^+, V being block ``block`` of T."""
    cols = cache.cols[block]
    state.x += (state.y[:, cols] - state.x @ b[:, cols]) @ cache.col_pinvs[block]
    return state


class ArbkSolver(BlockSolver):
    method = Method.ARBK

    cache: BlockCache

    def prepare(self) -> None:
        self.cache = build_block_cache(
            self.a, self.row_partition, self.b, self.col_partition
        )

    def draw_row_block(self, rng: np.random.Generator) -> int:
        return uniform_index(rng, len(self.row_partition))

    def draw_col_block(self, rng: np.random.Generator) -> int:
        return uniform_index(rng, len(self.col_partition))

    def step(self, state: SolverState, rng: np.random.Generator) -> None:
        arbk_y_step(state, self.a, self.f, self.draw_row_block(rng), self.cache)
        arbk_x_step(state, self.b, self.draw_col_block(rng), self.cache)


def solve_arbk(
    problem: ProblemInstance,
    row_partition: Partition,
    col_partition: Partition,
    config: SolveConfig,
    initial_x: Optional[Any] = None,
    observer: Optional[Observer] = None,
) -> SolveReport:
    return ArbkSolver(problem, row_partition, col_partition, config).solve(
        initial_x, observer
    )


def get_kmeq_solver_class() -> Type[ArbkSolver]:
    return ArbkSolver
