"""Solver implementations; each module exposes ``get_kmeq_solver_class()``."""

import importlib
from typing import Any, Optional, Type

from kmeq.basesolvers import BlockSolver, SolveConfig, _BaseSolver
from kmeq.enums import Method
from kmeq.exceptions import ParameterError
from kmeq.partition import Partition
from kmeq.problems import ProblemInstance

from .arbk import (
    BlockCache,
    arbk_x_step,
    arbk_y_step,
    build_block_cache,
    solve_arbk,
)
from .cme_rk import solve_cme_rk
from .gradient import solve_gradient
from .grbk import solve_grbk
from .petrov_galerkin import pg_iterate_x, pg_iterate_y

__all__ = [
    "BlockCache",
    "arbk_x_step",
    "arbk_y_step",
    "build_block_cache",
    "get_solver_class",
    "make_solver",
    "pg_iterate_x",
    "pg_iterate_y",
    "solve_arbk",
    "solve_cme_rk",
    "solve_gradient",
    "solve_grbk",
]


def get_solver_class(method: Method) -> Type[_BaseSolver]:
    module = importlib.import_module(f"kmeq.solvers.{method.value}")
    return module.get_kmeq_solver_class()  # type: ignore[no-any-return]


def make_solver(
    method: Method,
    problem: ProblemInstance,
    config: SolveConfig,
    row_partition: Optional[Partition] = None,
    col_partition: Optional[Partition] = None,
    **options: Any,
) -> _BaseSolver:
    """Instantiates the solver of ``method``; block methods need both partitions."""
    solver_class = get_solver_class(method)
    if issubclass(solver_class, BlockSolver):
        if row_partition is None or col_partition is None:
            raise ParameterError(f"{method.display_name} needs row and column blocks")
        return solver_class(problem, row_partition, col_partition, config, **options)
    return solver_class(problem, config, **options)
