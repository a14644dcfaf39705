from __future__ import annotations

import dataclasses
import json
import logging
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .enums import Method, Termination
from .exceptions import DimensionError, ParameterError
from .linalg import DenseMatrix, as_dense, frobenius_norm
from .partition import Partition, SeedLike, make_rng
from .problems import ProblemInstance

logger = logging.getLogger(__name__)

TracePoint = Tuple[int, float]
Observer = Callable[["SolverState"], None]


@dataclasses.dataclass
class SolverState:
    x: DenseMatrix
    """n x p iterate"""
    y: DenseMatrix
    """n x q auxiliary iterate, the current approximation of XB"""
    iteration: int = 0

    @classmethod
    def initial(cls, x0: DenseMatrix, b: DenseMatrix) -> SolverState:
        """X = x0 and Y = x0 B."""
        x = np.array(x0, dtype=np.float64, order="C")
        return cls(x=x, y=x @ b, iteration=0)


@dataclasses.dataclass(frozen=True)
class SolveConfig:
    """Stopping rule, sampling seed and tracing of a single solve."""

    max_iters: int = 100000
    """Outer iterations after which the solve stops with MaxItersExceeded."""

    rse_tol: float = 5e-2
    """The solve stops with ToleranceReached as soon as the error measure is at
    most this value, including at entry."""

    seed: SeedLike = 0
    """Seed of the block/index sampling stream."""

    trace_stride: int = 1
    """Record the error every trace_stride-th iteration (iteration 0 and the final
    iteration are always recorded)."""

    reference_solution: Optional[DenseMatrix] = None
    """X* to measure against; defaults to the problem's reference solution."""

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.rse_tol > 0:
            raise ParameterError(f"rse_tol must be positive, got {self.rse_tol}")
        if self.trace_stride < 1:
            raise ParameterError(
                f"trace_stride must be at least 1, got {self.trace_stride}"
            )


@dataclasses.dataclass
class SolveReport:
    method: str
    final_x: DenseMatrix
    iterations: int
    termination: Termination
    elapsed_seconds: float
    """Wall-clock time of the iteration loop only."""
    trace: List[TracePoint]
    setup_seconds: float = 0.0
    """Time spent precomputing block pseudoinverses, norms or step sizes."""
    error_kind: str = "relative"
    """``"absolute"`` when the reference solution is zero."""
    final_y: Optional[DenseMatrix] = None

    @property
    def rse(self) -> float:
        return self.trace[-1][1]

    @property
    def converged(self) -> bool:
        return self.termination is Termination.TOLERANCE_REACHED

    def to_record(
        self,
        problem: ProblemInstance,
        tau_a: Optional[int] = None,
        tau_b: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> Dict[str, Any]:
        (m, n, p, q) = problem.shape
        return {
            "method": self.method,
            "m": m,
            "n": n,
            "p": p,
            "q": q,
            "tau_a": tau_a,
            "tau_b": tau_b,
            "seed": seed,
            "iterations": self.iterations,
            "rse": self.rse,
            "elapsed_seconds": self.elapsed_seconds,
            "termination": self.termination.value,
        }

    def to_json(self, *args: Any, **kwargs: Any) -> str:
        return json.dumps(self.to_record(*args, **kwargs), sort_keys=True)


class _BaseSolver:
    """Base class for the iterative solvers.

    A solver is built for one problem (and partitions, for block methods) and one
    :class:`SolveConfig`; :meth:`prepare` does the per-solve precomputation, and
    :meth:`step` performs one outer iteration in place."""

    method: Method

    def __init__(self, problem: ProblemInstance, config: SolveConfig):
        self.problem = problem
        self.config = config
        self.a = problem.a
        self.b = problem.b
        self.f = problem.f
        self._prepared = False

    @property
    def name(self) -> str:
        return self.method.display_name

    def prepare(self) -> None:
        """Precomputation shared by every step; called once, before the timer starts."""
        pass

    def step(self, state: SolverState, rng: np.random.Generator) -> None:
        """One outer iteration, updating ``state.x`` and ``state.y`` in place."""
        raise NotImplementedError()

    def finish(self, state: SolverState) -> None:
        """Called once after the last step."""
        pass

    def initial_state(self, initial_x: Optional[Any] = None) -> SolverState:
        (_, n, p, _) = self.problem.shape
        if initial_x is None:
            x0 = np.zeros((n, p))
        else:
            x0 = as_dense(initial_x, "initial X")
            if x0.shape != (n, p):
                raise DimensionError(
                    f"initial X has shape {x0.shape}, expected {(n, p)}"
                )
        return SolverState.initial(x0, self.b)

    def solve(
        self,
        initial_x: Optional[Any] = None,
        observer: Optional[Observer] = None,
    ) -> SolveReport:
        """Iterates from X = ``initial_x`` (zero by default) until the error measure
        reaches ``rse_tol`` or ``max_iters`` outer iterations were done.

        ``observer`` is called with the state at entry and after every iteration."""
        config = self.config
        reference = config.reference_solution
        if reference is None:
            reference = self.problem.reference_solution
        reference_norm = frobenius_norm(reference)
        relative = reference_norm > 0.0
        error_kind = "relative" if relative else "absolute"
        if not relative:
            logger.warning("reference solution is zero, measuring the absolute error")

        def measure(x: DenseMatrix) -> float:
            error = float(np.linalg.norm(x - reference))
            return error / reference_norm if relative else error

        setup_start = time.perf_counter()
        if not self._prepared:
            self.prepare()
            self._prepared = True
        setup_seconds = time.perf_counter() - setup_start

        rng = make_rng(config.seed)
        state = self.initial_state(initial_x)
        error = measure(state.x)
        trace: List[TracePoint] = [(0, error)]
        if observer is not None:
            observer(state)

        logger.debug(
            "%s: starting at %s error %.3e, shape %s",
            self.name,
            error_kind,
            error,
            self.problem.shape,
        )
        termination = Termination.MAX_ITERS_EXCEEDED
        start = time.perf_counter()
        if error <= config.rse_tol:
            termination = Termination.TOLERANCE_REACHED
        else:
            while state.iteration < config.max_iters:
                self.step(state, rng)
                state.iteration += 1
                error = measure(state.x)
                if observer is not None:
                    observer(state)
                done = error <= config.rse_tol
                if (
                    done
                    or state.iteration % config.trace_stride == 0
                    or state.iteration == config.max_iters
                ):
                    trace.append((state.iteration, error))
                if done:
                    termination = Termination.TOLERANCE_REACHED
                    break
        self.finish(state)
        elapsed = time.perf_counter() - start

        logger.debug(
            "%s: %s after %d iterations (%s error %.3e, %.3fs)",
            self.name,
            termination.value,
            state.iteration,
            error_kind,
            error,
            elapsed,
        )
        return SolveReport(
            method=self.name,
            final_x=state.x,
            final_y=state.y,
            iterations=state.iteration,
            termination=termination,
            elapsed_seconds=elapsed,
            setup_seconds=setup_seconds,
            trace=trace,
            error_kind=error_kind,
        )


class BlockSolver(_BaseSolver):
    """Base class of the methods working on a row partition S of A and a column
    partition T of B."""

    def __init__(
        self,
        problem: ProblemInstance,
        row_partition: Partition,
        col_partition: Partition,
        config: SolveConfig,
    ):
        super().__init__(problem, config)
        (m, _, _, q) = problem.shape
        if row_partition.universe_size != m:
            raise ParameterError(
                f"row partition covers {row_partition.universe_size} indices, A has "
                f"{m} rows"
            )
        if col_partition.universe_size != q:
            raise ParameterError(
                f"column partition covers {col_partition.universe_size} indices, B has "
                f"{q} columns"
            )
        self.row_partition = row_partition
        self.col_partition = col_partition


def uniform_index(rng: np.random.Generator, count: int) -> int:
    """Uniform draw from range(count), by inversion of one uniform variate like
    :class:`CumulativeSampler`."""
    return min(int(rng.random() * count), count - 1)


class CumulativeSampler:
    """Draws index i with probability weights[i] / sum(weights) by inverting the
    cumulative distribution; zero-weight indices are never drawn."""

    def __init__(self, weights: Any):
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.size == 0 or np.any(weights < 0) or not np.any(weights > 0):
            raise ParameterError(f"invalid sampling weights: {weights}")
        self.weights = weights
        self.probabilities = weights / weights.sum()
        self._cumulative = np.cumsum(self.probabilities)
        self._last = int(np.flatnonzero(weights > 0)[-1])

    def __len__(self) -> int:
        return self.weights.size

    def draw(self, rng: np.random.Generator) -> int:
        index = int(np.searchsorted(self._cumulative, rng.random(), side="right"))
        # rounding can leave the last cumulative value slightly below 1
        return min(index, self._last)
