from typing import (
    Any,
    Callable,
    Container,
    Iterable,
    Mapping,
    Optional,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np
import pytest

from . import patma
from .basesolvers import SolveConfig
from .enums import Method
from .linalg import penrose_residuals
from .partition import Partition, column_random_partition, row_random_partition
from .problems import ProblemInstance, gen_gaussian, make_consistent_instance

__tracebackhide__ = True  # Hide from pytest tracebacks on test failure.

# typevar for decorators
TCallable = TypeVar("TCallable", bound=Callable)

# general-purpose typevar
T = TypeVar("T")


class _KmeqTestCase:
    """Base class for test cases.

    It implements various `assert*` method that look like unittest's,
    but is actually based on the `assert` statement so derived classes are
    pytest-style rather than unittest-style.

    It also calls setUp() and tearDown() like unittest would."""

    def setUp(self) -> None:
        pass

    def tearDown(self) -> None:
        pass

    def setup_method(self, method: Callable) -> None:
        self.setUp()

    def teardown_method(self, method: Callable) -> None:
        self.tearDown()

    def assertMatrixClose(
        self,
        got: Any,
        expects: Any,
        rtol: float = 1e-10,
        atol: float = 1e-10,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        """Elementwise closeness, reporting the largest deviation."""
        got = np.asarray(got, dtype=np.float64)
        expects = np.asarray(expects, dtype=np.float64)
        assert got.shape == expects.shape, (
            f"expected shape {expects.shape}, got {got.shape}"
        )
        if np.allclose(got, expects, rtol=rtol, atol=atol):
            return
        deviation = float(np.max(np.abs(got - expects)))
        fail_msg = fail_msg or "matrices differ by up to {deviation:.3e}"
        raise AssertionError(fail_msg.format(*extra_format, deviation=deviation))

    def assertOrthonormalColumns(self, m: Any, tol: float = 1e-10) -> None:
        """Q^T Q = I"""
        m = np.asarray(m, dtype=np.float64)
        self.assertMatrixClose(
            m.T @ m,
            np.eye(m.shape[1]),
            rtol=0,
            atol=tol,
            fail_msg="columns are not orthonormal (Q^T Q - I up to {deviation:.3e})",
        )

    def assertPenrose(self, m: Any, m_pinv: Any, tol: float = 1e-10) -> None:
        """The four Penrose conditions, relative to max(1, ||M||_F ||M+||_F)."""
        scale = max(1.0, float(np.linalg.norm(m) * np.linalg.norm(m_pinv)))
        residuals = penrose_residuals(m, m_pinv)
        for (condition, residual) in enumerate(residuals, start=1):
            assert residual <= tol * scale, (
                f"Penrose condition {condition} fails: residual {residual:.3e} "
                f"(tolerance {tol * scale:.3e})"
            )

    def assertRecordMatch(
        self,
        record: Mapping[str, Any],
        expects: Mapping[Any, Any],
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        """Partial comparison of a record (or parsed JSON report) with patma
        operators; every key of the record must be matched unless the pattern
        contains patma.ANYDICT."""
        if not patma.match_dict(record, expects):
            fail_msg = fail_msg or "expected record to match {expects}, got {got}"
            raise AssertionError(
                fail_msg.format(*extra_format, got=dict(record), expects=expects)
            )

    def assertIn(
        self,
        member: Any,
        container: Union[Iterable[Any], Container[Any]],
        msg: Optional[str] = None,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        if fail_msg:
            msg = fail_msg.format(*extra_format, item=member, list=container, msg=msg)
        assert member in container, msg  # type: ignore

    def assertEqual(
        self,
        got: T,
        expects: T,
        msg: Any = None,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        if fail_msg:
            msg = fail_msg.format(*extra_format, got=got, expects=expects, msg=msg)
        assert got == expects, msg

    def assertNotEqual(
        self,
        got: T,
        expects: T,
        msg: Any = None,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        if fail_msg:
            msg = fail_msg.format(*extra_format, got=got, expects=expects, msg=msg)
        assert got != expects, msg

    def assertLess(
        self,
        got: T,
        expects: T,
        msg: Any = None,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        if fail_msg:
            msg = fail_msg.format(*extra_format, got=got, expects=expects, msg=msg)
        assert got < expects, msg  # type: ignore

    def assertLessEqual(
        self,
        got: T,
        expects: T,
        msg: Any = None,
        fail_msg: Optional[str] = None,
        extra_format: Tuple = (),
    ) -> None:
        if fail_msg:
            msg = fail_msg.format(*extra_format, got=got, expects=expects, msg=msg)
        assert got <= expects, msg  # type: ignore


class BaseSolverTestCase(_KmeqTestCase):
    """Basic class for solver tests. Provides small consistent instances and random
    partitions of them."""

    def gaussianInstance(
        self, m: int = 40, n: int = 8, p: int = 8, q: int = 40, seed: int = 0
    ) -> ProblemInstance:
        return gen_gaussian(m, n, p, q, seed)

    def identityInstance(self, size: int = 4) -> ProblemInstance:
        """A = B = I and a random X*, so that F = X*."""
        x_star = np.random.default_rng(size).standard_normal((size, size))
        return make_consistent_instance(np.eye(size), np.eye(size), x_star)

    def randomPartitions(
        self, problem: ProblemInstance, s: int, t: int, seed: int = 0
    ) -> Tuple[Partition, Partition]:
        (m, _, _, q) = problem.shape
        return (
            row_random_partition(m, s, [seed, 0]),
            column_random_partition(q, t, [seed, 1]),
        )

    def solveConfig(self, **kwargs: Any) -> SolveConfig:
        kwargs.setdefault("max_iters", 20000)
        kwargs.setdefault("rse_tol", 1e-6)
        return SolveConfig(**kwargs)


def mark_methods(*methods_str: str) -> Callable[[TCallable], TCallable]:
    """Tags a test with the markers of the solvers it exercises, e.g.
    ``@mark_methods("ARBK", "CME-RK")``."""
    methods = frozenset(
        Method.from_name(m) if isinstance(m, str) else m for m in methods_str
    )

    def decorator(f: TCallable) -> TCallable:
        for method in methods:
            f = getattr(pytest.mark, method.value)(f)
        return f

    return decorator


slow = pytest.mark.slow
"""Monte-Carlo and table-replica tests; deselected by ``--skip-slow``."""
