"""Tests for the summability margins and the predicted critical exponent."""

from fractions import Fraction

import pytest

from singscope.classify import classify
from singscope.errors import BudgetError
from singscope.exponents import (
    EdgeBudget,
    Margin,
    Summability,
    Variant,
    margins,
    predicted_pc,
    summability_margins,
)
from singscope.legendre import legendre_x2
from singscope.poly import parse_poly
from singscope.puiseux import phase_second_derivative, resolve

F = Fraction


def _a_minus_budget() -> EdgeBudget:
    return EdgeBudget(A=F(1), B=F(0), a=F(1, 3), a_tilde=F(1, 3), bound_const=F(2), n=5)


def _predict(text: str, order: int) -> Summability:
    phi = parse_poly(text)
    phi1 = legendre_x2(phi, order).phi1
    return predicted_pc(resolve(phase_second_derivative(phi1)), classify(phi, order))


class TestMargin:
    """Test cases for Margin."""

    def test_evaluation(self) -> None:
        """Test coef_u/p + const."""
        margin = Margin("crucial_sum", F(4), F(-3))
        assert margin.at(F(8, 5)) == F(-1, 2)

    def test_threshold(self) -> None:
        """Test that the threshold is where the margin changes sign."""
        assert Margin("crucial_sum", F(10), F(-6)).threshold == F(5, 3)
        assert Margin("t_sum", F(5), F(-7, 2)).threshold == F(10, 7)

    def test_threshold_errors(self) -> None:
        """Test margins that never become negative as p grows."""
        with pytest.raises(BudgetError, match="not strictly decreasing"):
            _ = Margin("flat", F(0), F(-1)).threshold
        with pytest.raises(BudgetError, match="non-negative for every p"):
            _ = Margin("positive", F(1), F(1)).threshold


class TestEdgeBudget:
    """Test cases for EdgeBudget."""

    def test_values(self) -> None:
        """Test (A-1)/a + B + 2 and A/a + B + 2."""
        budget = _a_minus_budget()
        assert budget.n_value == 2
        assert budget.d_value == 5

    def test_horizontal_vertex(self) -> None:
        """Test that d = B + 2 when there is no edge slope."""
        budget = EdgeBudget(F(0), F(3), F(0), F(0), F(5), 5)
        budget.check()
        assert budget.d_value == 5

    def test_malformed(self) -> None:
        """Test negative data and an off-axis vertex without a slope."""
        with pytest.raises(BudgetError, match="Malformed budget"):
            EdgeBudget(F(1), F(-1), F(1), F(1), F(2), 4).check()
        with pytest.raises(BudgetError, match="off the axis"):
            EdgeBudget(F(1), F(0), F(0), F(0), F(2), 4).check()

    def test_bound_violation(self) -> None:
        """Test that (A-1)/a + B + 2 may not exceed the bound."""
        with pytest.raises(BudgetError, match="exceeds 2"):
            EdgeBudget(F(2), F(0), F(1), F(1), F(2), 4).check()


class TestSummabilityMargins:
    """Test cases for margins and summability_margins."""

    def test_a_minus_example(self) -> None:
        """Test both margins at p = 8/5 for the edge (0, 1) of slope 1/3."""
        values = summability_margins(_a_minus_budget(), F(8, 5), Variant.E_L_STEP1)
        assert values == [("crucial_sum", F(-1, 2)), ("t_sum", F(-3, 8))]

    def test_a_minus_lower_end(self) -> None:
        """Test that the first margin is -1/3 at p = 3/2."""
        values = dict(summability_margins(_a_minus_budget(), F(3, 2), Variant.E_L_STEP1))
        assert values["crucial_sum"] == F(-1, 3)

    def test_a_plus_is_critical_at_p_e(self) -> None:
        """Test that n_e = 3 makes the first margin vanish at p = 3/2."""
        budget = EdgeBudget(F(2), F(0), F(1), F(1), F(3), 4)
        assert budget.n_value == 3
        values = dict(summability_margins(budget, F(3, 2), Variant.E_L_STEP1_APLUS))
        assert values["crucial_sum"] == 0

    def test_second_step_adds_sums(self) -> None:
        """Test that the second-step variants carry the k and j sums."""
        names = [margin.name for margin in margins(_a_minus_budget(), Variant.E_L_STEP2)]
        assert names == ["crucial_sum", "t_sum", "k_sum", "j_sum"]

    def test_horizontal_vertex_variant(self) -> None:
        """Test the E_0 margins of the vertex (3, 0) with first slope 1/3."""
        budget = EdgeBudget(F(0), F(3), F(1, 3), F(1, 3), F(2), 5)
        first, second = margins(budget, Variant.E_0_STEP1)
        assert (first.coef_u, first.const) == (F(4), F(-3))
        assert (second.coef_u, second.const) == (F(5), F(-7, 2))

    def test_margins_decrease_in_p(self) -> None:
        """Test strict monotonicity across the admissible range."""
        budget = _a_minus_budget()
        for variant in Variant:
            if variant == Variant.E_0_STEP1:
                continue
            for margin in margins(budget, variant):
                assert margin.at(F(8, 5)) > margin.at(F(9, 5))

    @pytest.mark.parametrize("p", [F(7, 5), F(2), F(5, 2)])
    def test_p_out_of_range(self, p: Fraction) -> None:
        """Test that p must lie in [3/2, 2)."""
        with pytest.raises(BudgetError, match="outside"):
            summability_margins(_a_minus_budget(), p, Variant.E_L_STEP1)


class TestPredictedPc:
    """Golden predicted critical exponents."""

    def test_a_minus(self) -> None:
        """Test (x2 - x1^2)^2 + x1^5, floored at 3/2 above max 10/7."""
        summability = _predict("(x2 - x1^2)^2 + x1^5", 20)
        assert summability.p_c == F(3, 2)
        assert summability.check_p == F(151, 100)
        assert summability.binding is not None
        assert summability.binding.threshold == F(10, 7)
        assert all(value < 0 for _, _, value in summability.margins_at_check)

    def test_a_plus(self) -> None:
        """Test (1 + x1^2) x2^2 + x1^4 with p_e = 3/2."""
        summability = _predict("(1 + x1^2)*x2^2 + x1^4", 16)
        assert summability.p_c == F(3, 2)
        assert summability.binding is not None
        assert summability.binding.threshold == F(3, 2)

    def test_pure_type(self) -> None:
        """Test x2^2 + x1^5, where only the horizontal vertex is summed."""
        summability = _predict("x2^2 + x1^5", 20)
        assert summability.p_c == F(5, 3)
        assert [entry.label for entry in summability.entries] == ["E_0"]
        assert summability.entries[0].variant == Variant.E_L_STEP1_APLUS
        assert summability.binding is summability.entries[0]

    def test_agrees_with_classification(self) -> None:
        """Test agreement with the closed form on the A- golden."""
        phi = parse_poly("(x2 - x1^2)^2 + x1^5")
        report = classify(phi, 20)
        resolution = resolve(phase_second_derivative(legendre_x2(phi, 20, report).phi1))
        assert predicted_pc(resolution, report).p_c == report.p_c
