"""Legendre transform of a phase in its second variable."""

import logging
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

from singscope.classify import ClassificationReport, SingularityClass, Split, classify
from singscope.errors import LegendreInvarianceError, PreconditionError, SeriesOrderError
from singscope.poly import LatticePolynomial, SeriesLike, TruncatedSeries, shear_substitute

logger = logging.getLogger(__name__)

LEGENDRE_VARS = ("x1", "s2")


class Route(StrEnum):
    A_MINUS_ADAPTED = "A_minus_adapted"
    A_PLUS_LINE_ADAPTED = "A_plus_line_adapted"


@dataclass(frozen=True)
class LegendreData:
    """Critical point, transformed phase and its splitting s2^2 B(s2) + phi1."""

    x2c: TruncatedSeries
    w0: TruncatedSeries
    B: TruncatedSeries
    phi1: TruncatedSeries
    phi_breve: TruncatedSeries
    route: Route
    alpha_tilde: TruncatedSeries | None = None


def _rename(series: TruncatedSeries, vars: tuple[str, str]) -> TruncatedSeries:
    poly = series.poly.with_vars(vars)
    return TruncatedSeries(poly) if series.exact else TruncatedSeries(poly, series.valid_order)


def _divide_by_s2(series: TruncatedSeries, power: int) -> TruncatedSeries:
    """Divide a series in s2 alone by s2^power."""
    terms: dict[tuple[int, int], Fraction] = {}
    for (i, j), c in series.poly.items():
        if i or j < power:
            raise PreconditionError(f"{series} is not divisible by s2^{power}")
        terms[(0, j - power)] = c
    poly = LatticePolynomial(terms, series.vars)
    return TruncatedSeries(poly) if series.exact else TruncatedSeries(poly, series.valid_order - power)


def critical_point(phi: SeriesLike, order: int) -> TruncatedSeries:
    """
    Solve d2 phi(x1, x2) + s2 = 0 for x2 = x2c(x1, s2).

    Raises:
        PreconditionError: If d2^2 phi(0, 0) = 0 or the residual does not vanish
        SeriesOrderError: If the input is not certified far enough
    """
    series = TruncatedSeries.of(phi)
    c02 = series.coefficient(0, 2)
    if not c02:
        raise PreconditionError("Degenerate second derivative: d2^2 phi(0, 0) = 0")
    target = order if series.exact else min(order, series.valid_order - 1)
    if target < 1:
        raise SeriesOrderError(
            f"Order underflow: phi certified only through order {series.valid_order}", module="legendre"
        )
    gradient = _rename(series.diff(1), LEGENDRE_VARS)
    s2 = TruncatedSeries.variable(1, LEGENDRE_VARS)

    def residual(x: LatticePolynomial, cap: int | None) -> TruncatedSeries:
        return gradient.substitute(x2=TruncatedSeries(x), order=cap) + s2

    # Pass k fixes the degree-k part; the equation is linear in x2 with coefficient 2 c02 at 0.
    x = LatticePolynomial({}, LEGENDRE_VARS)
    for k in range(1, target + 1):
        x = x - residual(x, k).poly.truncate(k).scale(1 / (2 * c02))
    if not residual(x, target).poly.is_zero():
        raise PreconditionError(f"Critical-point residual does not vanish through order {target}")
    if series.exact and residual(x, None).poly.is_zero():
        return TruncatedSeries(x)
    return TruncatedSeries(x, target)


def _split(breve: TruncatedSeries) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Return (B, phi1) with breve = s2^2 B(s2) + phi1 and phi1(0, s2) = 0."""
    return _divide_by_s2(breve.filter(lambda e: e[0] == 0), 2), breve.filter(lambda e: e[0] > 0)


def legendre_x2(phi: SeriesLike, order: int, report: ClassificationReport | None = None) -> LegendreData:
    """
    Legendre transform phi_breve(x1, s2) = phi(x1, x2c) + s2 x2c.

    Args:
        phi: A-type phase in linearly adapted coordinates
        order: Working truncation order
        report: Classification of phi; computed when omitted

    Returns:
        The Legendre data; on the A+ route phi1 and B are taken in the line-adapted coordinates
        z1 = x1 - alpha(s2 w0(s2))

    Raises:
        PreconditionError: If d2^2 phi(0, 0) = 0
        SeriesOrderError: If the truncation leaves nothing certified
    """
    series = TruncatedSeries.of(phi)
    x2c = critical_point(series, order)
    renamed = _rename(series, LEGENDRE_VARS)
    s2 = TruncatedSeries.variable(1, LEGENDRE_VARS)
    cap = None if series.exact and x2c.exact else order
    breve = renamed.substitute(x2=x2c, order=cap) + s2.mul(x2c, cap)
    w0 = _divide_by_s2(x2c.filter(lambda e: e[0] == 0), 1)

    if report is None:
        report = classify(series, order)
    if report.split == Split.A_MINUS:
        B, phi1 = _split(breve)
        logger.debug("Legendre transform (A- route): phi1=%s", phi1)
        return LegendreData(x2c, w0, B, phi1, breve, Route.A_MINUS_ADAPTED)

    alpha_tilde = TruncatedSeries(LatticePolynomial({}, LEGENDRE_VARS))
    shifted = breve
    if report.adaptation is not None and not report.adaptation.already_adapted:
        alpha = report.adaptation.alpha
        argument = s2.mul(w0, order)
        alpha_tilde = alpha.substitute(x2=argument, order=None if alpha.exact and argument.exact else order)
        shifted = shear_substitute(breve, alpha_tilde, None if breve.exact and alpha_tilde.exact else order)
    B, phi1 = _split(shifted)
    logger.debug("Legendre transform (A+ route): alpha_tilde=%s, phi1=%s", alpha_tilde, phi1)
    return LegendreData(x2c, w0, B, phi1, breve, Route.A_PLUS_LINE_ADAPTED, alpha_tilde)


@dataclass(frozen=True)
class LegendreInvariance:
    """Class and effective multiplicity of phi and of its Legendre transform."""

    n_e: Fraction | None
    n_e_breve: Fraction | None
    singularity_class: SingularityClass
    class_breve: SingularityClass


def verify_legendre_invariance(phi: SeriesLike, order: int) -> LegendreInvariance:
    """
    Classify phi and its Legendre transform (as a function of (x1, s2)) and compare.

    Raises:
        PreconditionError: If phi is of type A-
        LegendreInvarianceError: If n_e or the class changes under the transform
    """
    report = classify(phi, order)
    if report.split == Split.A_MINUS:
        raise PreconditionError("Legendre invariance is asserted for type A+ only")
    data = legendre_x2(phi, order, report)
    breve = _rename(data.phi_breve, ("x1", "x2"))
    breve_report = classify(breve, order)
    result = LegendreInvariance(report.n_e, breve_report.n_e, report.singularity_class, breve_report.singularity_class)
    if result.n_e != result.n_e_breve:
        raise LegendreInvarianceError(f"n_e changes under the Legendre transform: {result.n_e} -> {result.n_e_breve}")
    if result.singularity_class != result.class_breve:
        raise LegendreInvarianceError(
            f"Class changes under the Legendre transform: {result.singularity_class} -> {result.class_breve}"
        )
    logger.debug("Legendre invariance holds: n_e=%s, class=%s", result.n_e, result.singularity_class)
    return result
