"""
Tests for adaptive cubature
"""

import math

import numpy as np
import pytest

from models import Box
from utils.errors import NumericalToleranceError, ParameterError
from utils.quadrature import integrate, integrate_average


def g(u, v):
    return np.cos(0.5 * (u - v)) ** 2


class TestIntegrate:
    """Test integrate"""

    def test_constant(self):
        """Test f = 1 over the unit square"""
        result = integrate(lambda p: np.ones(len(p)), [(0.0, 1.0), (0.0, 1.0)])
        assert result.value == pytest.approx(1.0, abs=1e-14)

    def test_closed_form(self):
        """Test cos^2((u-v)/2) over a slice box against its antiderivative"""
        h = math.pi / 8
        result = integrate(lambda p: g(p[:, 0], p[:, 1]), [(-h, h), (-h, h)], rel_tol=1e-10)
        expected = 0.5 * (2 * h) ** 2 + 0.5 * (2 * math.sin(h)) ** 2
        assert result.value == pytest.approx(expected, rel=1e-8)

    def test_separable(self):
        """Test a 4-D product integrand against the product of 2-D integrals"""
        h = math.pi / 8
        box2 = [(-h, h), (0.2, 0.2 + 2 * h)]
        two_d = integrate(lambda p: g(p[:, 0], p[:, 1]), box2, rel_tol=1e-10).value
        four_d = integrate(lambda p: g(p[:, 0], p[:, 1]) * g(p[:, 2], p[:, 3]), box2 + box2, rel_tol=1e-10).value
        assert four_d == pytest.approx(two_d ** 2, rel=1e-8)

    def test_linearity(self):
        """Test integrate(a f + b g) = a integrate(f) + b integrate(g)"""
        box = [(0.0, 1.0), (0.0, 2.0)]
        f1 = lambda p: np.sin(p[:, 0]) * p[:, 1]
        f2 = lambda p: np.exp(-p[:, 0] * p[:, 1])
        combined = integrate(lambda p: 2.0 * f1(p) - 3.0 * f2(p), box, rel_tol=1e-10).value
        separate = 2.0 * integrate(f1, box, rel_tol=1e-10).value - 3.0 * integrate(f2, box, rel_tol=1e-10).value
        assert combined == pytest.approx(separate, rel=1e-8)

    def test_non_negative(self):
        """Test that a non-negative integrand gives a non-negative value"""
        result = integrate(lambda p: np.sin(3 * p[:, 0]) ** 2, [(0.0, 5.0)])
        assert result.value >= 0.0

    def test_deterministic(self):
        """Test bit-identical repeated runs"""
        f = lambda p: np.exp(np.sin(5 * p[:, 0]) * p[:, 1])
        first = integrate(f, [(0.0, 3.0), (0.0, 1.0)], rel_tol=1e-9)
        second = integrate(f, [(0.0, 3.0), (0.0, 1.0)], rel_tol=1e-9)
        assert first.value == second.value
        assert first.error == second.error

    def test_vector_valued(self):
        """Test integrating several components at once"""
        result = integrate(lambda p: np.stack([np.ones(len(p)), p[:, 0]], axis=1), [(0.0, 2.0)])
        np.testing.assert_allclose(result.value, [2.0, 2.0])

    def test_adaptive_refinement(self):
        """Test a peaked integrand that needs subdivision"""
        result = integrate(lambda p: 1.0 / (1e-2 + p[:, 0] ** 2), [(-1.0, 1.0)], rel_tol=1e-8)
        expected = 2.0 * math.atan(1.0 / 0.1) / 0.1
        assert result.value == pytest.approx(expected, rel=1e-7)

    def test_budget_exhausted(self):
        """Test that an unreachable tolerance raises with the best estimate"""
        with pytest.raises(NumericalToleranceError) as excinfo:
            integrate(lambda p: np.abs(p[:, 0]) ** 0.1, [(-1.0, 1.0)], rel_tol=1e-15, max_cells=4)
        assert excinfo.value.estimate is not None

    def test_invalid_box(self):
        """Test that an empty interval raises error"""
        with pytest.raises(ParameterError):
            integrate(lambda p: np.ones(len(p)), [(1.0, 1.0)])

    def test_invalid_tolerance(self):
        """Test that a non-positive tolerance raises error"""
        with pytest.raises(ParameterError):
            integrate(lambda p: np.ones(len(p)), [(0.0, 1.0)], rel_tol=0.0)

    def test_average(self):
        """Test the mean over a box"""
        box = Box.from_intervals([(0.0, 2.0), (0.0, 3.0)])
        result = integrate_average(lambda p: p[:, 0] + p[:, 1], box)
        assert result.value == pytest.approx(2.5)
