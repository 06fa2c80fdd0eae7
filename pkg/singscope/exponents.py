"""Summability bookkeeping: exponent margins of the dyadic sums and the predicted critical exponent.

Every margin is affine in u = 1/p and must be strictly negative for the corresponding sum over
(j, k) to converge with room for a small loss. Thresholds are therefore exact rationals and
the predicted critical exponent is the largest of them, floored at 3/2.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

from singscope.classify import THREE_HALVES, ClassificationReport, Split
from singscope.errors import BudgetError
from singscope.puiseux import CaseTag, LemmaBranch, Resolution

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class Variant(StrEnum):
    E_0_STEP1 = "E_0_step1"
    E_L_STEP1 = "E_l_step1"
    E_L_STEP2 = "E_l_step2"
    E_L_STEP1_APLUS = "E_l_step1_Aplus"
    E_L_STEP2_APLUS = "E_l_step2_Aplus"

    @property
    def plus(self) -> bool:
        return self in (Variant.E_L_STEP1_APLUS, Variant.E_L_STEP2_APLUS)

    @property
    def second_step(self) -> bool:
        return self in (Variant.E_L_STEP2, Variant.E_L_STEP2_APLUS)


@dataclass(frozen=True)
class EdgeBudget:
    """
    Data of one transition domain.

    Attributes:
        A: Second coordinate of the governing vertex
        B: First coordinate of the governing vertex
        a: Slope of the first edge of the current step
        a_tilde: Slope of the edge ending at the vertex (0 when there is none)
        bound_const: m on the A- route, n_e on the A+ route
        n: Multiplicity n of the phase
    """

    A: Fraction
    B: Fraction
    a: Fraction
    a_tilde: Fraction
    bound_const: Fraction
    n: int

    @property
    def n_value(self) -> Fraction:
        """(A - 1)/a_tilde + B + 2."""
        return (self.A - 1) / self.a_tilde + self.B + 2

    @property
    def d_value(self) -> Fraction:
        """A/a_tilde + B + 2, with A/a_tilde read as 0 at the horizontal vertex."""
        if self.a_tilde == 0:
            return self.B + 2
        return self.A / self.a_tilde + self.B + 2

    def check(self) -> None:
        """
        Raises:
            BudgetError: If the budget is malformed or breaks (A-1)/a_tilde + B + 2 <= bound_const
        """
        if self.a_tilde < 0 or self.a < 0 or self.A < 0 or self.B < 0:
            raise BudgetError(f"Malformed budget {self}")
        if self.a_tilde == 0 and self.A != 0:
            raise BudgetError(f"Vertex ({self.B}, {self.A}) off the axis needs a positive edge slope")
        if self.A >= 1 and self.n_value > self.bound_const:
            raise BudgetError(
                f"(A-1)/a + B + 2 = {self.n_value} exceeds {self.bound_const} at vertex ({self.B}, {self.A})"
            )


@dataclass(frozen=True)
class Margin:
    """Margin coef_u * u + const at u = 1/p."""

    name: str
    coef_u: Fraction
    const: Fraction

    def at(self, p: Fraction) -> Fraction:
        return self.coef_u / p + self.const

    @property
    def threshold(self) -> Fraction:
        """
        Least p making the margin negative.

        Raises:
            BudgetError: If the margin does not decrease in p
        """
        if self.coef_u <= 0:
            raise BudgetError(f"Margin {self.name} is not strictly decreasing in p")
        u_star = -self.const / self.coef_u
        if u_star <= 0:
            raise BudgetError(f"Margin {self.name} is non-negative for every p")
        return 1 / u_star


def margins(budget: EdgeBudget, variant: Variant) -> list[Margin]:
    """
    The affine margins of one budget.

    Raises:
        BudgetError: If the budget is malformed
    """
    budget.check()
    if variant == Variant.E_0_STEP1:
        width = budget.B + 2 - (1 / budget.a if budget.a else 0)
        return [
            Margin("crucial_sum", 2 * width, -width - 1),
            Margin("t_sum", budget.B + 2, -(budget.B + 2) * HALF - 1),
        ]
    c = budget.bound_const if variant.plus else budget.n_value
    d = budget.d_value
    out = [Margin("crucial_sum", 2 * c, -c - 1), Margin("t_sum", d, -d * HALF - 1)]
    if variant.second_step:
        b = min(budget.a, budget.a_tilde)
        out.append(Margin("k_sum", c + 2, -c * HALF - 2))
        out.append(Margin("j_sum", b * c + 1, -(b * c + 1) * HALF - b))
    return out


def summability_margins(budget: EdgeBudget, p: Fraction, variant: Variant) -> list[tuple[str, Fraction]]:
    """
    Evaluate the margins of a budget at p.

    Args:
        budget: Transition-domain data
        p: Lebesgue exponent with 3/2 <= p < 2
        variant: Which family of sums the budget enters

    Returns:
        (name, margin) pairs; a negative margin means the sum converges

    Raises:
        BudgetError: If p is out of range or the budget is malformed
    """
    p = Fraction(p)
    if not THREE_HALVES <= p < 2:
        raise BudgetError(f"p = {p} outside [3/2, 2)")
    return [(margin.name, margin.at(p)) for margin in margins(budget, variant)]


@dataclass(frozen=True)
class BudgetEntry:
    label: str
    variant: Variant
    budget: EdgeBudget
    margins: tuple[Margin, ...]

    @property
    def threshold(self) -> Fraction:
        return max((m.threshold for m in self.margins), default=THREE_HALVES)


@dataclass(frozen=True)
class Summability:
    """Predicted critical exponent with the budgets it was assembled from."""

    p_c: Fraction
    entries: tuple[BudgetEntry, ...]
    check_p: Fraction
    margins_at_check: tuple[tuple[str, str, Fraction], ...]

    @property
    def binding(self) -> BudgetEntry | None:
        if not self.entries:
            return None
        return max(self.entries, key=lambda entry: entry.threshold)


def _entry(label: str, variant: Variant, budget: EdgeBudget) -> BudgetEntry:
    return BudgetEntry(label, variant, budget, tuple(margins(budget, variant)))


def collect_budgets(resolution: Resolution, report: ClassificationReport) -> list[BudgetEntry]:
    """
    Budgets of every transition domain visited by the resolution.

    Step 1 contributes the horizontal vertex and every vertex with A >= 1 of N(Phi); later
    steps contribute the new vertices beyond the shifted edge and, for a test point that is not
    a root, the vertex (0, A~) created on the axis.

    Raises:
        BudgetError: If a vertex breaks the budget bound, or A_1 < 1 occurs outside the
            simple-root branch of the multiplicity lemma
    """
    plus = report.split == Split.A_PLUS
    if plus:
        bound = report.n_e if report.n_e is not None else Fraction(report.n)
    elif report.m is not None:
        bound = Fraction(report.m)
    else:
        raise BudgetError("A- budgets need the contact order m")
    n = report.n
    step1 = Variant.E_L_STEP1_APLUS if plus else Variant.E_L_STEP1
    step2 = Variant.E_L_STEP2_APLUS if plus else Variant.E_L_STEP2

    polyhedron = resolution.polyhedron
    if resolution.a1_at_least_one is False and resolution.lemma_branch != LemmaBranch.SIMPLE_REAL_ROOTS:
        raise BudgetError(f"A_1 < 1 in {polyhedron} outside the simple-root branch ({resolution.lemma_branch})")
    b0 = polyhedron.vertices[0][0]
    a1 = polyhedron.slopes[0] if polyhedron.edges else Fraction(0)
    zero = EdgeBudget(Fraction(0), b0, a1, a1, bound, n)
    entries = [_entry("E_0", step1 if plus else Variant.E_0_STEP1, zero)]
    for l, edge in enumerate(polyhedron.edges, 1):
        b, a = edge.left
        if a >= 1:
            entries.append(_entry(f"E_{l}", step1, EdgeBudget(a, b, a1, edge.slope, bound, n)))

    for step in resolution.steps:
        slope = step.jet.terms[-1][0]
        where = f"step {step.step_index} at {step.jet}"
        # a single root ends its branch; nothing beyond the shifted edge is summed
        if step.case != CaseTag.CASE_1 and step.stopped:
            continue
        if step.a1_at_least_one is False and step.lemma_branch != LemmaBranch.SIMPLE_REAL_ROOTS:
            raise BudgetError(f"A_1 < 1 after {where} outside the simple-root branch ({step.lemma_branch})")
        if step.case == CaseTag.CASE_1:
            b, a = step.polyhedron.vertices[-1]
            if b == 0 and a >= 1:
                entries.append(_entry(f"{where}, Case 1", step2, EdgeBudget(a, b, slope, slope, bound, n)))
            continue
        for edge in step.polyhedron.edges:
            if edge.slope > slope and edge.right[0] <= step.multiplicity:
                b, a = edge.left
                if a >= 1:
                    label = f"{where}, vertex ({b}, {a})"
                    entries.append(_entry(label, step2, EdgeBudget(a, b, slope, edge.slope, bound, n)))
    logger.debug("collected %d budgets from %d resolution steps", len(entries), len(resolution.steps))
    return entries


def predicted_pc(resolution: Resolution, report: ClassificationReport) -> Summability:
    """
    Least p with every margin of every budget strictly negative, floored at 3/2.

    The thresholds are exact, so the infimum is a rational read off directly; all margins are
    then re-checked strictly negative slightly above it.

    Raises:
        BudgetError: If no p below 2 works or a margin is still non-negative above the infimum
    """
    entries = collect_budgets(resolution, report)
    p_c = max([THREE_HALVES, *(entry.threshold for entry in entries)])
    if p_c >= 2:
        raise BudgetError(f"Predicted critical exponent {p_c} is not below 2")
    check_p = p_c + Fraction(1, 100)
    if check_p >= 2:
        check_p = (p_c + 2) / 2
    values = tuple(
        (entry.label, name, value)
        for entry in entries
        for name, value in summability_margins(entry.budget, check_p, entry.variant)
    )
    positive = [(label, name, value) for label, name, value in values if value >= 0]
    if positive:
        raise BudgetError(f"Margins not negative at p = {check_p}: {positive}")
    logger.debug("predicted p_c = %s from %d budgets", p_c, len(entries))
    return Summability(p_c, tuple(entries), check_p, values)
