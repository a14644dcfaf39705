"""Test-problem generators for AXB = F.

Three families: standard normal coefficient matrices, ``Smatrix`` matrices with a
prescribed singular spectrum, and B-spline surface fitting (see :mod:`kmeq.bspline`
for the spline side).
"""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union
import warnings

import numpy as np

from . import bspline
from .enums import Family, Surface
from .exceptions import DimensionError, ParameterError, RegimeWarning
from .linalg import DenseMatrix, as_dense, frobenius_norm, pseudoinverse
from .partition import SeedLike, make_rng
from .utils import csvio
from .utils.junkdrawer import atomic_write_text

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class Provenance:
    family: str
    parameters: Mapping[str, Any]
    seed: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "parameters": dict(self.parameters),
            "seed": self.seed,
        }


def _custom_provenance() -> Provenance:
    return Provenance(family="custom", parameters={})


@dataclasses.dataclass(frozen=True)
class ProblemInstance:
    a: DenseMatrix
    b: DenseMatrix
    f: DenseMatrix
    x_star: Optional[DenseMatrix] = None
    provenance: Provenance = dataclasses.field(default_factory=_custom_provenance)
    consistent: bool = True
    """Whether F = A x_star B holds; only B-spline fitting on raw data is not."""

    def __post_init__(self) -> None:
        (m, n) = self.a.shape
        (p, q) = self.b.shape
        if self.f.shape != (m, q):
            raise DimensionError(f"F has shape {self.f.shape}, expected {(m, q)}")
        if self.x_star is not None:
            if self.x_star.shape != (n, p):
                raise DimensionError(
                    f"x_star has shape {self.x_star.shape}, expected {(n, p)}"
                )
            if self.consistent:
                residual = frobenius_norm(self.a @ self.x_star @ self.b - self.f)
                if residual > CONSISTENCY_TOL * max(frobenius_norm(self.f), 1.0):
                    raise DimensionError(
                        f"inconsistent instance: ||A x* B - F|| = {residual:.3e}"
                    )

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        """(m, n, p, q)"""
        return (self.a.shape[0], self.a.shape[1], self.b.shape[0], self.b.shape[1])

    @functools.cached_property
    def reference_solution(self) -> DenseMatrix:
        """x_star when known, otherwise the minimum-norm solution A+ F B+."""
        if self.x_star is not None:
            return self.x_star
        return pseudoinverse(self.a) @ self.f @ pseudoinverse(self.b)

    @functools.cached_property
    def y_star(self) -> DenseMatrix:
        """A+ F, the minimum-norm solution of AY = F."""
        return pseudoinverse(self.a) @ self.f


def make_consistent_instance(
    a: Any,
    b: Any,
    x_star: Optional[Any] = None,
    provenance: Optional[Provenance] = None,
) -> ProblemInstance:
    """Builds F = A x_star B, with x_star = ones(n, p) by default."""
    a = as_dense(a, "A")
    b = as_dense(b, "B")
    if x_star is None:
        x_star = np.ones((a.shape[1], b.shape[0]))
    x_star = as_dense(x_star, "x_star")
    if x_star.shape != (a.shape[1], b.shape[0]):
        raise DimensionError(
            f"x_star has shape {x_star.shape}, expected {(a.shape[1], b.shape[0])}"
        )
    return ProblemInstance(
        a=a,
        b=b,
        f=a @ x_star @ b,
        x_star=x_star,
        provenance=provenance or _custom_provenance(),
    )


def _seed_value(seed: SeedLike) -> Optional[int]:
    return seed if isinstance(seed, int) else None


def gen_gaussian(m: int, n: int, p: int, q: int, seed: SeedLike) -> ProblemInstance:
    """A = randn(m, n), B = randn(p, q), X* = ones(n, p)."""
    if min(m, n, p, q) < 1:
        raise ParameterError(f"dimensions must be positive: {(m, n, p, q)}")
    if m < n or q < p:
        warnings.warn(
            f"(m, n, p, q) = {(m, n, p, q)} is outside the thin-A / fat-B regime",
            RegimeWarning,
            stacklevel=2,
        )
    rng = make_rng(seed)
    a = rng.standard_normal((m, n))
    b = rng.standard_normal((p, q))
    return make_consistent_instance(
        a,
        b,
        provenance=Provenance(
            family=Family.GAUSSIAN.value,
            parameters={"m": m, "n": n, "p": p, "q": q},
            seed=_seed_value(seed),
        ),
    )


def gen_smatrix(
    x1: int, x2: int, r: int, sigma1: float, sigma2: float, seed: SeedLike
) -> DenseMatrix:
    """R = U diag(sigma) V^T with orthonormalized Gaussian U (x1 x r), V (x2 x r).

    The first r - 2 singular values are uniform in [sigma2, sigma1]; the last two are
    pinned to sigma2 and sigma1."""
    if r < 2 or r > min(x1, x2):
        raise ParameterError(f"rank {r} must lie in [2, {min(x1, x2)}]")
    if not sigma1 >= sigma2 > 0:
        raise ParameterError(f"need sigma1 >= sigma2 > 0, got {sigma1}, {sigma2}")
    rng = make_rng(seed)
    (u, _) = np.linalg.qr(rng.standard_normal((x1, r)))
    (v, _) = np.linalg.qr(rng.standard_normal((x2, r)))
    sigma = np.concatenate([rng.uniform(sigma2, sigma1, size=r - 2), [sigma2, sigma1]])
    return np.ascontiguousarray((u * sigma) @ v.T)


@dataclasses.dataclass(frozen=True)
class SmatrixParams:
    rows: int
    cols: int
    rank: int
    sigma1: float = 10.0
    sigma2: float = 0.1


# Cases I-IV; B is taken fat (p < q) so that X is square and B has full row rank.
SMATRIX_CASES: Dict[str, Tuple[SmatrixParams, SmatrixParams]] = {
    "I": (SmatrixParams(1000, 100, 100), SmatrixParams(100, 1000, 100)),
    "II": (SmatrixParams(2000, 100, 100), SmatrixParams(100, 2000, 100)),
    "III": (SmatrixParams(4000, 200, 200), SmatrixParams(200, 4000, 200)),
    "IV": (SmatrixParams(10000, 200, 200), SmatrixParams(200, 10000, 200)),
}


def gen_smatrix_instance(
    case: Union[str, Tuple[SmatrixParams, SmatrixParams]], seed: SeedLike
) -> ProblemInstance:
    """Consistent instance with A, B drawn by :func:`gen_smatrix` and X* = ones."""
    if isinstance(case, str):
        try:
            (a_params, b_params) = SMATRIX_CASES[case.upper()]
        except KeyError:
            raise ParameterError(f"unknown Smatrix case {case!r}") from None
    else:
        (a_params, b_params) = case
    rng = make_rng(seed)
    a = gen_smatrix(
        a_params.rows,
        a_params.cols,
        a_params.rank,
        a_params.sigma1,
        a_params.sigma2,
        rng,
    )
    b = gen_smatrix(
        b_params.rows,
        b_params.cols,
        b_params.rank,
        b_params.sigma1,
        b_params.sigma2,
        rng,
    )
    return make_consistent_instance(
        a,
        b,
        provenance=Provenance(
            family=Family.SMATRIX.value,
            parameters={
                "a": dataclasses.asdict(a_params),
                "b": dataclasses.asdict(b_params),
            },
            seed=_seed_value(seed),
        ),
    )


def build_fitting_problem(
    which: Union[Surface, str],
    m: int,
    q: int,
    n: int,
    p: int,
    *,
    parameterization: str = "axis",
    rhs: str = "data",
    degree: int = 3,
) -> ProblemInstance:
    """Cubic B-spline least-squares surface fitting as AXB = F.

    A (m x n) and B^T (q x p) are collocation matrices on the per-axis parameters;
    F is the z grid (``rhs="data"``) or its projection A x* B onto the spline space
    (``rhs="projected"``). x* is always A+ F B+ for the data grid."""
    if isinstance(which, str):
        try:
            which = Surface.from_name(which)
        except ValueError:
            raise ParameterError(f"unknown surface {which!r}") from None
    if n > m or p > q:
        raise ParameterError(f"need n <= m and p <= q, got {(m, n, p, q)}")
    if rhs not in ("data", "projected"):
        raise ParameterError(f"unknown right-hand side kind {rhs!r}")
    sample = bspline.surface_samples(which, m, q)
    params_s = bspline.grid_parameters(sample, axis=0, method=parameterization)
    params_t = bspline.grid_parameters(sample, axis=1, method=parameterization)
    a = bspline.bspline_collocation(
        params_s, bspline.averaging_knots(params_s, n, degree), degree
    )
    b = bspline.bspline_collocation(
        params_t, bspline.averaging_knots(params_t, p, degree), degree
    ).T
    b = np.ascontiguousarray(b)
    f = sample.z
    x_star = pseudoinverse(a) @ f @ pseudoinverse(b)
    provenance = Provenance(
        family=Family.BSPLINE.value,
        parameters={
            "surface": which.value,
            "m": m,
            "n": n,
            "p": p,
            "q": q,
            "parameterization": parameterization,
            "rhs": rhs,
        },
    )
    if rhs == "projected":
        return make_consistent_instance(a, b, x_star, provenance)
    residual = frobenius_norm(a @ x_star @ b - f) / max(frobenius_norm(f), 1e-300)
    logger.debug("fitting residual of the least-squares reference: %.3e", residual)
    return ProblemInstance(
        a=a, b=b, f=f, x_star=x_star, provenance=provenance, consistent=False
    )


INSTANCE_FILES = ("A.csv", "B.csv", "F.csv")


def save_instance(instance: ProblemInstance, directory: Path) -> None:
    """Matrix CSVs ``A.csv``, ``B.csv``, ``F.csv`` (and ``X_star.csv``) plus
    ``provenance.json``."""
    directory.mkdir(parents=True, exist_ok=True)
    for (name, matrix) in zip(INSTANCE_FILES, (instance.a, instance.b, instance.f)):
        csvio.write_matrix(directory / name, matrix)
    if instance.x_star is not None:
        csvio.write_matrix(directory / "X_star.csv", instance.x_star)
    metadata = dict(instance.provenance.to_json(), consistent=instance.consistent)
    atomic_write_text(
        directory / "provenance.json", json.dumps(metadata, indent=2) + "\n"
    )


def load_instance(directory: Path) -> ProblemInstance:
    (a, b, f) = (csvio.read_matrix(directory / name) for name in INSTANCE_FILES)
    x_star_path = directory / "X_star.csv"
    x_star = csvio.read_matrix(x_star_path) if x_star_path.exists() else None
    metadata_path = directory / "provenance.json"
    metadata: Dict[str, Any] = {}
    if metadata_path.exists():
        metadata = json.loads(metadata_path.read_text(encoding="utf-8"))
    return ProblemInstance(
        a=a,
        b=b,
        f=f,
        x_star=x_star,
        provenance=Provenance(
            family=metadata.get("family", "custom"),
            parameters=metadata.get("parameters", {}),
            seed=metadata.get("seed"),
        ),
        consistent=metadata.get("consistent", True),
    )
