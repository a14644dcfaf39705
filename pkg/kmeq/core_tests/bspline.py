import math

import numpy as np
import pytest

from kmeq import cases
from kmeq.bspline import (
    SPAN_SLACK,
    SURFACE_RANGES,
    averaging_knots,
    bspline_collocation,
    chord_length_params,
    grid_parameters,
    surface_height,
    surface_samples,
)
from kmeq.enums import Surface
from kmeq.exceptions import (
    ParameterError,
    ParameterizationError,
    SplineEvaluationError,
    UnderdeterminedError,
)

BEZIER_KNOTS = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]


class ChordLengthTestCase(cases._KmeqTestCase):
    def testScalars(self):
        """chords 1 and 3 give (0, 0.25, 1)"""
        self.assertMatrixClose(chord_length_params([0.0, 1.0, 4.0]), [0.0, 0.25, 1.0])

    def testPoints(self):
        """chords are Euclidean distances between consecutive points"""
        points = [[0.0, 0.0], [3.0, 4.0], [3.0, 9.0]]
        self.assertMatrixClose(chord_length_params(points), [0.0, 0.5, 1.0])

    def testTwoPoints(self):
        self.assertMatrixClose(chord_length_params([[1.0, 1.0], [2.0, 5.0]]), [0, 1])

    def testCoincidentPoints(self):
        with pytest.raises(ParameterizationError, match="points 2 and 3 coincide"):
            chord_length_params([0.0, 1.0, 1.0, 2.0])

    def testTooFewPoints(self):
        with pytest.raises(ParameterizationError):
            chord_length_params([1.0])


class AveragingKnotsTestCase(cases._KmeqTestCase):
    def testClampedBezier(self):
        """degree + 1 control points leave no interior knots"""
        knots = averaging_knots(np.linspace(0, 1, 10), 4)
        self.assertMatrixClose(knots, BEZIER_KNOTS)

    def testInterpolationAverage(self):
        """with as many control points as parameters, knot j is the mean of
        params j .. j + degree - 1"""
        knots = averaging_knots([0.0, 0.25, 0.5, 0.75, 1.0], 5)
        self.assertMatrixClose(knots, [0, 0, 0, 0, 0.5, 1, 1, 1, 1])

    def testNondecreasing(self):
        """clamped at 0 and 1, nondecreasing, n_ctrl + degree + 1 knots"""
        steps = np.random.default_rng(0).uniform(1, 5, 40)
        params = chord_length_params(np.cumsum(steps))
        knots = averaging_knots(params, 12)
        assert knots.size == 12 + 4
        assert np.all(np.diff(knots) >= 0)
        assert knots[0] == 0.0 and knots[-1] == 1.0

    def testTooManyControlPoints(self):
        with pytest.raises(UnderdeterminedError):
            averaging_knots([0.0, 0.5, 1.0, 1.5], 5)

    def testTooFewControlPoints(self):
        with pytest.raises(ParameterError):
            averaging_knots(np.linspace(0, 1, 10), 3)
        with pytest.raises(ParameterError):
            averaging_knots(np.linspace(0, 1, 10), 4, degree=0)


class CollocationTestCase(cases._KmeqTestCase):
    def testBernsteinMidpoint(self):
        """the clamped cubic basis with no interior knots is the Bernstein basis"""
        n = bspline_collocation([0.5], BEZIER_KNOTS)
        self.assertMatrixClose(n, [[0.125, 0.375, 0.375, 0.125]])

    def testEndpoints(self):
        """clamped ends interpolate the first and last control points"""
        n = bspline_collocation([0.0, 1.0], BEZIER_KNOTS)
        self.assertMatrixClose(n, [[1, 0, 0, 0], [0, 0, 0, 1]])

    def testPartitionOfUnity(self):
        """rows sum to 1, entries are nonnegative, at most degree + 1 per row"""
        params = np.linspace(0, 1, 37)
        n = bspline_collocation(params, averaging_knots(params, 9))
        self.assertEqual(n.shape, (37, 9))
        self.assertMatrixClose(n.sum(axis=1), np.ones(37))
        assert np.all(n >= 0)
        assert np.all(np.count_nonzero(n, axis=1) <= 4)

    def testSlackAtSpanEnds(self):
        """sites within SPAN_SLACK of the knot range evaluate as the end points"""
        n = bspline_collocation([-SPAN_SLACK / 2, 1.0 + SPAN_SLACK / 2], BEZIER_KNOTS)
        self.assertMatrixClose(n, [[1, 0, 0, 0], [0, 0, 0, 1]])
        with pytest.raises(SplineEvaluationError, match="site 1"):
            bspline_collocation([1.0 + 10 * SPAN_SLACK], BEZIER_KNOTS)

    def testOutsideSpan(self):
        with pytest.raises(SplineEvaluationError, match="site 2"):
            bspline_collocation([0.5, 1.1], BEZIER_KNOTS)

    def testInvalidKnots(self):
        with pytest.raises(ParameterError):
            bspline_collocation([0.5], [0, 0, 1, 1])
        with pytest.raises(ParameterError):
            bspline_collocation([0.5], [0, 0, 0, 0, 1, 0.5, 1, 1, 1])


class SurfaceTestCase(cases._KmeqTestCase):
    def testHeights(self):
        """hand-evaluated points of both surfaces"""
        assert surface_height(Surface.SURFACE1, 0.0, 1.0) == 0.0
        assert surface_height(Surface.SURFACE1, 2.0, 1.0) == pytest.approx(2.0)
        assert surface_height(Surface.SURFACE2, 0.0, 0.0) == 0.0
        assert surface_height(Surface.SURFACE2, 0.0, 1.0) == pytest.approx(
            -math.exp(-1)
        )

    @pytest.mark.parametrize("surface", list(Surface))
    def testGrid(self, surface):
        sample = surface_samples(surface, 6, 4)
        self.assertEqual(sample.shape, (6, 4))
        ((s_low, s_high), (t_low, t_high)) = SURFACE_RANGES[surface]
        assert (sample.s[0], sample.s[-1]) == (s_low, s_high)
        assert (sample.t[0], sample.t[-1]) == (t_low, t_high)
        self.assertMatrixClose(sample.z, surface_height(surface, sample.x, sample.y))
        rows = list(sample.rows())
        assert len(rows) == 24
        assert rows[1][:2] == (sample.s[0], sample.t[1])

    def testTooSmall(self):
        with pytest.raises(ParameterError):
            surface_samples(Surface.SURFACE1, 1, 5)


class GridParametersTestCase(cases._KmeqTestCase):
    def testAxisParameterization(self):
        """equally spaced abscissae give uniform parameters"""
        sample = surface_samples(Surface.SURFACE2, 5, 3)
        self.assertMatrixClose(
            grid_parameters(sample, axis=0, method="axis"), [0, 0.25, 0.5, 0.75, 1]
        )
        self.assertMatrixClose(
            grid_parameters(sample, axis=1, method="axis"), [0, 0.5, 1]
        )

    @pytest.mark.parametrize("axis", [0, 1])
    def testMeanChord(self, axis):
        """averaged (x, y, z) chord lengths are strictly increasing from 0 to 1"""
        sample = surface_samples(Surface.SURFACE1, 12, 9)
        params = grid_parameters(sample, axis=axis, method="mean_chord")
        self.assertEqual(params.size, sample.shape[axis])
        assert params[0] == 0.0 and params[-1] == 1.0
        assert np.all(np.diff(params) > 0)

    def testInvalid(self):
        sample = surface_samples(Surface.SURFACE1, 3, 3)
        with pytest.raises(ParameterError):
            grid_parameters(sample, axis=2)
        with pytest.raises(ParameterError):
            grid_parameters(sample, axis=0, method="centripetal")
