"""Tests for the named model families."""

from fractions import Fraction

import pytest

from singscope.classify import Interval, SingularityClass, classify
from singscope.errors import InputError
from singscope.families import FAMILIES, family, render_catalog, resolve_family
from singscope.poly import parse_series


class TestFamilyInstances:
    """Test cases for building family instances."""

    def test_pure_defaults(self) -> None:
        """Test the default pure instance and its invariants."""
        instance = family("pure").instance()
        assert instance.expression == "x2^2 + x1^4"
        assert instance.expected.h == Fraction(4, 3)
        assert instance.expected.n_e == 4
        assert instance.expected.p_e == Fraction(8, 5)
        assert instance.expected.p_c == Fraction(8, 5)
        assert instance.label == "@pure:n=4"

    def test_pure_cubic_has_no_effective_multiplicity(self) -> None:
        """Test that n = 3 only pins p_c = 3/2."""
        expected = family("pure").instance(n=3).expected
        assert expected.n_e is None
        assert expected.p_c == Fraction(3, 2)

    def test_shifted_parabola(self) -> None:
        """Test the A- family."""
        expected = family("shifted_parabola").instance(n=7).expected
        assert expected.singularity_class == SingularityClass.A_MINUS
        assert expected.m == 2
        assert expected.p_c == Fraction(14, 9)

    def test_curved_line(self) -> None:
        """Test that n_e^x = n - 1/l while n_e = n."""
        instance = family("curved_line").instance(n=5, l=3)
        assert instance.expression == "x2^2 + (x1 + x2^3)^5"
        assert instance.expected.n_e_x == Fraction(14, 3)
        assert instance.expected.n_e == 5

    def test_perturbed_coefficient(self) -> None:
        """Test the effective multiplicity formula and the exceptional case alpha = 1."""
        generic = family("perturbed_coefficient").instance(n=5, alpha=2, beta=0).expected
        assert generic.n_e == Fraction(7, 2)
        assert generic.p_e == Fraction(14, 9)
        assert generic.singularity_class == SingularityClass.A_PLUS_GENERIC

        exceptional = family("perturbed_coefficient").instance(n=5, alpha=1, beta=0).expected
        assert exceptional.singularity_class == SingularityClass.A_E
        assert exceptional.p_c == Interval(Fraction(3, 2), Fraction(5, 3))

        untouched = family("perturbed_coefficient").instance(n=5, alpha=7, beta=1).expected
        assert untouched.n_e == 5

    def test_unit_denominators(self) -> None:
        """Test the two series families."""
        first = family("unit_denominator").instance(n=5).expected
        assert first.n_e == 3
        assert first.p_e == Fraction(3, 2)
        square = family("unit_denominator_square").instance(n=6).expected
        assert square.n_e == 4
        assert square.p_e == Fraction(8, 5)

    def test_rejects_bad_parameters(self) -> None:
        """Test parameter validation."""
        with pytest.raises(InputError, match="n must be at least 3"):
            family("pure").instance(n=2)
        with pytest.raises(InputError, match="l must be at least 2"):
            family("curved_line").instance(l=1)
        with pytest.raises(InputError, match="n must be even"):
            family("unit_denominator_square").instance(n=5)
        with pytest.raises(InputError, match="Unknown parameter"):
            family("pure").instance(m=3)

    def test_unknown_family(self) -> None:
        """Test that an unknown name lists the known ones."""
        with pytest.raises(InputError, match="known: curved_line"):
            family("cusp")


class TestResolveFamily:
    """Test cases for @name:key=value references."""

    def test_reference_with_values(self) -> None:
        """Test a full reference."""
        instance = resolve_family("@perturbed_coefficient:n=6, alpha=3")
        assert instance.parameters == {"n": 6, "alpha": 3, "beta": 0}
        assert instance.expression == "(1 + x1^3*x2^0)*x2^2 + x1^6"

    def test_reference_without_values(self) -> None:
        """Test that a bare name uses the defaults."""
        assert resolve_family("@unit_denominator").parameters == {"n": 5}

    def test_malformed_references(self) -> None:
        """Test the error paths of reference parsing."""
        with pytest.raises(InputError, match="start with '@'"):
            resolve_family("pure")
        with pytest.raises(InputError, match="Expected key=value"):
            resolve_family("@pure:4")
        with pytest.raises(InputError, match="needs an integer"):
            resolve_family("@pure:n=four")

    def test_catalog_lists_every_family(self) -> None:
        """Test the printed catalog."""
        catalog = render_catalog()
        for name in FAMILIES:
            assert f"@{name}" in catalog


class TestFamiliesAgainstClassification:
    """The catalogued invariants agree with classify."""

    @pytest.mark.parametrize(
        "reference",
        [
            "@pure:n=4",
            "@pure:n=6",
            "@shifted_parabola:n=5",
            "@shifted_parabola:n=6",
            "@curved_line:n=4,l=2",
            "@perturbed_coefficient:n=5,alpha=2,beta=0",
            "@perturbed_coefficient:n=5,alpha=1,beta=0",
        ],
    )
    def test_polynomial_families(self, reference: str) -> None:
        """Test exact agreement on polynomial inputs."""
        instance = resolve_family(reference)
        expected = instance.expected
        report = classify(parse_series(instance.expression, 4 * expected.n), 4 * expected.n)
        assert report.singularity_class == expected.singularity_class
        assert report.n == expected.n
        assert report.h == expected.h
        assert report.p_c == expected.p_c
        assert report.n_e == expected.n_e
        if expected.n_e is not None:
            assert report.n_e_x == expected.n_e_x

    def test_unit_denominator_at_order_twenty(self) -> None:
        """Test the series family truncated to order 20."""
        instance = resolve_family("@unit_denominator:n=5")
        report = classify(parse_series(instance.expression, 20), 20)
        assert report.singularity_class == SingularityClass.A_E
        assert report.n_e == 3
        assert report.p_e == Fraction(3, 2)
        assert report.p_c == Interval(Fraction(3, 2), Fraction(5, 3))
