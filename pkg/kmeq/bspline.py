"""Clamped B-spline machinery for least-squares surface fitting.

Conventions follow the usual NURBS notation: a knot vector U of length
``n_ctrl + degree + 1`` with ``degree + 1`` repeated knots at each end, basis functions
N_{j,degree} evaluated with the Cox-de Boor triangle (one knot span at a time, only the
``degree + 1`` nonzero values).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any, Iterator, Tuple

import numpy as np
import numpy.typing as npt

from .enums import Surface
from .exceptions import (
    ParameterError,
    ParameterizationError,
    SplineEvaluationError,
    UnderdeterminedError,
)
from .linalg import DenseMatrix

Vector = npt.NDArray[np.float64]

# Parameters this close outside the knot span are snapped onto it.
SPAN_SLACK = 1e-12


def chord_length_params(points: Any) -> Vector:
    """t_0 = 0, t_k = t_{k-1} + |P_k - P_{k-1}| / d with d the total chord length.

    ``points`` is a sequence of scalars or an (N, dim) array of coordinates."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2 or points.shape[0] < 2:
        raise ParameterizationError(
            f"need at least two points, got shape {points.shape}"
        )
    chords = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if np.any(chords == 0.0):
        k = int(np.flatnonzero(chords == 0.0)[0])
        raise ParameterizationError(f"points {k + 1} and {k + 2} coincide")
    params = np.concatenate([[0.0], np.cumsum(chords)])
    params /= params[-1]
    params[-1] = 1.0
    return params


def averaging_knots(params: Any, n_ctrl: int, degree: int = 3) -> Vector:
    """Clamped knot vector for ``n_ctrl`` control points over ``params``.

    The parameters are first resampled to ``n_ctrl`` values
    v_k = interp(k (P - 1) / (n_ctrl - 1)), linear in the parameter index; then interior
    knot j = 1 .. n_ctrl - degree - 1 is the mean of v_j, ..., v_{j + degree - 1}. With
    n_ctrl equal to the parameter count this is the plain interpolation averaging rule.
    """
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if degree < 1:
        raise ParameterError(f"degree must be positive, got {degree}")
    if n_ctrl < degree + 1:
        raise ParameterError(f"need at least {degree + 1} control points, got {n_ctrl}")
    if n_ctrl > params.size:
        raise UnderdeterminedError(
            f"{n_ctrl} control points for only {params.size} parameters"
        )
    resampled = np.interp(
        np.arange(n_ctrl) * (params.size - 1) / (n_ctrl - 1),
        np.arange(params.size),
        params,
    )
    interior = [
        float(np.mean(resampled[j : j + degree])) for j in range(1, n_ctrl - degree)
    ]
    return np.concatenate(
        [np.full(degree + 1, params[0]), interior, np.full(degree + 1, params[-1])]
    )


def find_span(u: float, degree: int, knots: Vector) -> int:
    """Index i with knots[i] <= u < knots[i+1]; the last nonempty span for u at the
    right end."""
    n_ctrl = knots.size - degree - 1
    span = int(np.searchsorted(knots, u, side="right")) - 1
    return min(max(span, degree), n_ctrl - 1)


def basis_functions(span: int, u: float, degree: int, knots: Vector) -> Vector:
    """The degree + 1 nonzero values N_{span-degree..span, degree}(u)."""
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    values[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = u - knots[span + 1 - j]
        right[j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return values


def bspline_collocation(params: Any, knots: Any, degree: int = 3) -> DenseMatrix:
    """Matrix with entry (i, j) = N_{j,degree}(params[i])."""
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    knots = np.asarray(knots, dtype=np.float64).reshape(-1)
    n_ctrl = knots.size - degree - 1
    if n_ctrl < degree + 1 or np.any(np.diff(knots) < 0):
        raise ParameterError(f"invalid knot vector for degree {degree}: {knots}")
    (low, high) = (knots[degree], knots[n_ctrl])
    collocation = np.zeros((params.size, n_ctrl))
    for (i, u) in enumerate(params):
        if not low - SPAN_SLACK <= u <= high + SPAN_SLACK:
            raise SplineEvaluationError(
                f"parameter {u!r} (site {i + 1}) is outside [{low}, {high}]"
            )
        u = min(max(u, low), high)
        span = find_span(u, degree, knots)
        collocation[i, span - degree : span + 1] = basis_functions(
            span, u, degree, knots
        )
    return collocation


@dataclasses.dataclass(frozen=True)
class SurfaceSample:
    surface: Surface
    s: Vector
    """m grid abscissae"""
    t: Vector
    """q grid ordinates"""
    x: DenseMatrix
    y: DenseMatrix
    z: DenseMatrix
    """m x q; z[i, j] is the height at (s[i], t[j])"""
    s_range: Tuple[float, float]
    t_range: Tuple[float, float]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.z.shape  # type: ignore[return-value]

    def rows(self) -> Iterator[Tuple[float, float, float, float, float]]:
        """(s, t, x, y, z) per grid point, s-major."""
        for i in range(self.s.size):
            for j in range(self.t.size):
                yield (
                    float(self.s[i]),
                    float(self.t[j]),
                    float(self.x[i, j]),
                    float(self.y[i, j]),
                    float(self.z[i, j]),
                )


SURFACE_RANGES = {
    Surface.SURFACE1: ((0.0, 2 * math.pi), (0.5, 1.0)),
    Surface.SURFACE2: ((-1.0, 1.0), (-1.0, 1.0)),
}


def surface_height(which: Surface, s: Any, t: Any) -> Any:
    if which is Surface.SURFACE1:
        return s**3 - 3 * s * t**2
    return (s - s**3 - t**5) * np.exp(-(s**2) - t**2)


def surface_samples(which: Surface, m: int, q: int) -> SurfaceSample:
    """Uniform m x q grid over the surface's (s, t) rectangle, with x = s, y = t."""
    if m < 2 or q < 2:
        raise ParameterError(f"grid must be at least 2x2, got {m}x{q}")
    (s_range, t_range) = SURFACE_RANGES[which]
    s = np.linspace(*s_range, m)
    t = np.linspace(*t_range, q)
    (x, y) = np.meshgrid(s, t, indexing="ij")
    return SurfaceSample(
        surface=which,
        s=s,
        t=t,
        x=x,
        y=y,
        z=surface_height(which, x, y),
        s_range=s_range,
        t_range=t_range,
    )


def grid_parameters(
    sample: SurfaceSample, axis: int, method: str = "axis"
) -> Vector:
    """Parameters for the s (``axis=0``) or t (``axis=1``) direction of the grid.

    ``"axis"`` uses the chord lengths of the axis coordinates alone, so polynomial
    surfaces of degree <= 3 in s and t lie in the cubic spline space; ``"mean_chord"``
    averages the chord-length parameters of every grid line running in that
    direction, measured on the (x, y, z) points."""
    if axis not in (0, 1):
        raise ParameterError(f"axis must be 0 or 1, got {axis}")
    if method == "axis":
        return chord_length_params(sample.s if axis == 0 else sample.t)
    if method != "mean_chord":
        raise ParameterError(f"unknown parameterization {method!r}")
    points = np.stack([sample.x, sample.y, sample.z], axis=-1)
    if axis == 1:
        points = points.transpose(1, 0, 2)
    params = np.mean(
        [chord_length_params(points[:, line]) for line in range(points.shape[1])],
        axis=0,
    )
    params[0] = 0.0
    params[-1] = 1.0
    return params
