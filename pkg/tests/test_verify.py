"""Tests for the numeric measures, box families and decay fits."""

from fractions import Fraction
from unittest.mock import patch

import numpy as np
import pytest

from singscope.classify import classify
from singscope.errors import EmptyDomainError, FitInconclusiveError, PreconditionError
from singscope.newton import newton_polyhedron_of
from singscope.poly import parse_poly
from singscope.verify import (
    Box,
    FitResult,
    Mode,
    Verdict,
    VerificationSettings,
    box_family_exponent,
    corput_decay,
    dyadic_range,
    fit_exponent,
    gradient_bound_holds,
    intersection_measure,
    locate_transition,
    oscillatory_J,
    oscillatory_integral,
    stationary_scaling_check,
    sublevel_exponent,
)

F = Fraction
SETTINGS = VerificationSettings()


class TestFitting:
    """Test cases for dyadic_range, fit_exponent and FitResult."""

    def test_dyadic_range(self) -> None:
        """Test equal spacing in log2."""
        assert dyadic_range(1.0, 32.0, 6) == pytest.approx([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])

    def test_invalid_range(self) -> None:
        """Test that the sweep must be increasing and positive."""
        with pytest.raises(PreconditionError, match="Invalid sweep"):
            dyadic_range(2.0, 1.0, 6)

    def test_exact_power_law(self) -> None:
        """Test that a pure power is fitted exactly."""
        xs = dyadic_range(1.0, 64.0, 7)
        slope, stderr, points = fit_exponent(xs, [x**-1.5 for x in xs])
        assert slope == pytest.approx(-1.5)
        assert stderr == pytest.approx(0.0, abs=1e-9)
        assert points[0] == pytest.approx((0.0, 0.0))

    def test_fit_errors(self) -> None:
        """Test too few points and a vanishing value."""
        with pytest.raises(FitInconclusiveError, match="at least 6"):
            fit_exponent([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])
        with pytest.raises(FitInconclusiveError, match="log scale"):
            fit_exponent(dyadic_range(1.0, 32.0, 6), [1.0, 1.0, 0.0, 1.0, 1.0, 1.0])

    def test_verdicts(self) -> None:
        """Test PASS, FAIL and INCONCLUSIVE for both modes."""
        base = FitResult("corput", -0.52, 0.01, (1.0, 2.0), (), F(-1, 2), 0.05)
        assert base.verdict == Verdict.PASS
        assert FitResult("corput", -0.3, 0.01, (1.0, 2.0), (), F(-1, 2), 0.05).verdict == Verdict.FAIL
        assert FitResult("corput", -0.5, 0.2, (1.0, 2.0), (), F(-1, 2), 0.05).verdict == Verdict.INCONCLUSIVE
        at_most = FitResult("corput", -3.0, 0.01, (1.0, 2.0), (), F(-1), 0.05, Mode.AT_MOST)
        assert at_most.verdict == Verdict.PASS


class TestMeasures:
    """Test cases for intersection_measure and the sublevel fit."""

    def test_saturation(self) -> None:
        """Test that a box covering the graph measures the whole square."""
        area = intersection_measure(parse_poly("x2^2 + x1^4"), Box(1.0, 1.0, 1.0), (0.0, 0.0), 1.0)
        assert area == pytest.approx(0.25)

    def test_empty_intersection(self) -> None:
        """Test a box centred outside the square."""
        assert intersection_measure(parse_poly("x2^2"), Box(0.1, 0.1, 0.1), (1.0, 0.0), 1.0) == 0.0

    def test_small_grid(self) -> None:
        """Test that fewer than 64 columns are rejected."""
        with pytest.raises(PreconditionError, match="at least 64"):
            intersection_measure(parse_poly("x2^2"), Box(1.0, 1.0, 1.0), (0.0, 0.0), 1.0, grid=16)

    def test_gradient_bound(self) -> None:
        """Test |grad phi| <= 1/10 on a small square only."""
        phi = parse_poly("x2^2 + x1^4")
        assert not gradient_bound_holds(phi, 0.25)
        assert gradient_bound_holds(phi, 0.04)

    def test_sublevel_exponent(self) -> None:
        """Test 1/h = 3/4 for x2^2 + x1^4."""
        result = sublevel_exponent(parse_poly("x2^2 + x1^4"), SETTINGS.deltas)
        assert result.predicted == F(3, 4)
        assert result.exponent_hat == pytest.approx(0.75, abs=0.05)
        assert result.verdict == Verdict.PASS

    def test_sublevel_exponent_even_power(self) -> None:
        """Test 1/h = 2/3 for x2^2 + x1^6."""
        result = sublevel_exponent(parse_poly("x2^2 + x1^6"), SETTINGS.deltas)
        assert result.predicted == F(2, 3)
        assert result.verdict == Verdict.PASS


class TestBoxFamilies:
    """Test cases for box_family_exponent."""

    def test_slab_family(self) -> None:
        """Test p/h - 1 and the zero crossing at h for the slab boxes."""
        result = box_family_exponent(parse_poly("x2^2 + x1^4"), 2, F(8, 5), SETTINGS.deltas)
        assert result.predicted == F(1, 5)
        assert result.verdict == Verdict.PASS
        assert result.threshold_predicted == F(4, 3)
        assert result.threshold == pytest.approx(4 / 3, abs=0.02)

    def test_cube_family(self) -> None:
        """Test 2p - 3 for delta-cubes centred on the surface."""
        result = box_family_exponent(parse_poly("x2^2 + x1^4"), 0, F(8, 5), SETTINGS.deltas, zgrid=2)
        assert result.predicted == F(1, 5)
        assert result.verdict == Verdict.PASS
        assert result.threshold == pytest.approx(1.5, abs=0.02)

    def test_unknown_family(self) -> None:
        """Test that k must be 0, 1 or 2."""
        with pytest.raises(PreconditionError, match="0, 1 or 2"):
            box_family_exponent(parse_poly("x2^2 + x1^4"), 3, F(8, 5), SETTINGS.deltas)

    def test_line_family_needs_a_plus(self) -> None:
        """Test that the k=1 family is refused for an A- phase."""
        phi = parse_poly("(x2 - x1^2)^2 + x1^5")
        with pytest.raises(PreconditionError, match="line-adapted"):
            box_family_exponent(phi, 1, F(8, 5), SETTINGS.deltas, report=classify(phi, 20))


class TestOscillatory:
    """Test cases for the quadrature and the decay fits."""

    def test_constant_phase(self) -> None:
        """Test that a zero phase integrates the amplitude."""
        value = oscillatory_integral(lambda x: 0 * x, np.ones_like, 0.0, 1.0, 1.0)
        assert value == pytest.approx(1.0)

    def test_fewer_panels_than_a_chunk(self) -> None:
        """Test int_0^pi exp(ix) dx = 2i on eight panels, one partial chunk."""
        value = oscillatory_integral(lambda x: x, np.ones_like, 0.0, np.pi, 1.0)
        assert value == pytest.approx(2j)

    def test_partial_last_chunk(self) -> None:
        """Test the same integral split into chunks of three panels."""
        with patch("singscope.verify.PANEL_CHUNK", 3):
            value = oscillatory_integral(lambda x: x, np.ones_like, 0.0, np.pi, 1.0)
        assert value == pytest.approx(2j)

    def test_corput_quadratic(self) -> None:
        """Test the rate -1/2 for the phase x^2."""
        result = corput_decay(parse_poly("x1^2"), 2, dyadic_range(2.0**6, 2.0**14, 6))
        assert result.predicted == F(-1, 2)
        assert result.verdict == Verdict.PASS

    def test_corput_cubic(self) -> None:
        """Test the rate -1/3 for the phase x^3."""
        result = corput_decay(parse_poly("x1^3"), 3, dyadic_range(2.0**6, 2.0**14, 6))
        assert result.predicted == F(-1, 3)
        assert result.verdict == Verdict.PASS

    def test_corput_preconditions(self) -> None:
        """Test a vanishing derivative and a phase depending on x2."""
        with pytest.raises(PreconditionError, match="fails on"):
            corput_decay(parse_poly("x1^3"), 2, SETTINGS.lambdas)
        with pytest.raises(PreconditionError, match="x1 only"):
            corput_decay(parse_poly("x1^2 + x2"), 2, SETTINGS.lambdas)
        with pytest.raises(PreconditionError, match="positive"):
            corput_decay(parse_poly("x1"), 0, SETTINGS.lambdas)

    def test_stationary_scaling(self) -> None:
        """Test the 1/N decay of the double integral with a degenerate stationary set."""
        result = stationary_scaling_check(dyadic_range(16.0, 1024.0, 6))
        assert result.predicted == -1
        assert result.verdict == Verdict.PASS


class TestTransitionWindows:
    """Test cases for locate_transition."""

    def test_windows(self) -> None:
        """Test both domains of 20 z^3 + 2 s."""
        polyhedron = newton_polyhedron_of(parse_poly("20*x1^3 + 2*x2"))
        horizontal = locate_transition(polyhedron, 1, 6)
        assert horizontal.index == 0
        assert horizontal.vertex == (F(3), F(0))
        assert horizontal.d == 2.0**-5
        upper = locate_transition(polyhedron, 5, 3)
        assert upper.index == 1
        assert upper.vertex == (F(0), F(1))
        assert upper.d == 2.0**-13

    def test_boundary_window(self) -> None:
        """Test that a window on the boundary j = k/3 is refused."""
        polyhedron = newton_polyhedron_of(parse_poly("20*x1^3 + 2*x2"))
        with pytest.raises(EmptyDomainError, match="domain boundary"):
            locate_transition(polyhedron, 2, 6)
        with pytest.raises(PreconditionError, match="non-negative"):
            locate_transition(polyhedron, -1, 0)

    def test_oscillatory_window_precondition(self) -> None:
        """Test that oscillatory_J refuses a window on a domain boundary."""
        phi1 = parse_poly("x1^4 + x1*x2")
        polyhedron = newton_polyhedron_of(parse_poly("20*x1^3 + 2*x2"))
        with pytest.raises(EmptyDomainError, match="domain boundary"):
            oscillatory_J(phi1, polyhedron, 2, 6)
