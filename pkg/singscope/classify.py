"""A-type normal form, class split and line-adapted coordinates."""

import logging
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

import sympy

from singscope.errors import (
    ClassificationConsistencyError,
    EdgeError,
    FiniteTypeError,
    HessianPreconditionError,
    SeriesOrderError,
)
from singscope.newton import (
    NewtonPolyhedron,
    Weight,
    newton_distance,
    newton_polyhedron_of,
    principal_part,
)
from singscope.poly import LatticePolynomial, SeriesLike, TruncatedSeries, shear_substitute, solve_implicit

logger = logging.getLogger(__name__)

THREE_HALVES = Fraction(3, 2)


class SingularityClass(StrEnum):
    A_MINUS = "A_minus"
    A_PLUS_GENERIC = "A_plus_generic"
    A_E = "A_e"
    NOT_A_TYPE = "not_A_type"


class Split(StrEnum):
    A_MINUS = "A_minus"
    A_PLUS = "A_plus"


@dataclass(frozen=True)
class Interval:
    """Closed interval of rationals; used for critical exponents that are only bracketed."""

    lower: Fraction
    upper: Fraction

    def __contains__(self, value: Fraction) -> bool:
        return self.lower <= value <= self.upper

    def __str__(self) -> str:
        return f"[{self.lower}, {self.upper}]"


@dataclass(frozen=True)
class NormalForm:
    """Data of phi = b(x)(x2 - psi(x1))^2 + b0(x1)."""

    psi: TruncatedSeries
    b0: TruncatedSeries
    n: int
    m: int | None
    beta0: Fraction
    omega0: Fraction | None
    b1_0: Fraction
    m_exceeds_order: bool


@dataclass(frozen=True)
class EffectiveData:
    """First non-horizontal edge of N(phi_red) leaving (n, 0)."""

    kappa: Weight
    n_e_coords: Fraction
    principal: LatticePolynomial
    vertical_within_order: bool = False

    @property
    def slope(self) -> Fraction | None:
        return self.kappa.slope


@dataclass(frozen=True)
class LineAdaptation:
    """Outcome of line_adapt: the total shear and the data in line-adapted coordinates."""

    alpha: TruncatedSeries
    phi: TruncatedSeries
    effective: EffectiveData
    chain: tuple[TruncatedSeries, ...]

    @property
    def n_e(self) -> Fraction:
        return self.effective.n_e_coords

    @property
    def already_adapted(self) -> bool:
        return not self.chain


@dataclass
class ClassificationReport:
    """Everything ``classify`` establishes about an A-type singularity."""

    input_text: str
    order: int
    singularity_class: SingularityClass
    normal_form: NormalForm
    h: Fraction
    p_c: Fraction | Interval
    n_e_x: Fraction | None = None
    n_e: Fraction | None = None
    p_e: Fraction | None = None
    kappa_e: Weight | None = None
    adaptation: LineAdaptation | None = None
    exceptional_condition: str | None = None
    conjectured_pc: Fraction | None = None
    d_input: Fraction | None = None
    flags: set[str] = field(default_factory=lambda: set[str]())

    @property
    def n(self) -> int:
        return self.normal_form.n

    @property
    def m(self) -> int | None:
        return self.normal_form.m

    @property
    def split(self) -> Split:
        return Split.A_MINUS if self.singularity_class == SingularityClass.A_MINUS else Split.A_PLUS

    @property
    def adapted_input(self) -> bool:
        return self.d_input == self.h

    @property
    def necessary_exponents(self) -> dict[str, Fraction]:
        """Exponents at which the box families k = 0, 1, 2 stop being summable."""
        exponents = {"k0": THREE_HALVES, "k2": self.h}
        if self.p_e is not None:
            exponents["k1"] = self.p_e
        return exponents


def height(n: int) -> Fraction:
    return Fraction(2 * n, n + 2)


def exponent_of(n_e: Fraction | int) -> Fraction:
    """p = 2 n / (n + 1), used both for p_e and for the A^e upper bound."""
    return Fraction(2 * n_e) / (n_e + 1)


def _check_hessian(series: TruncatedSeries) -> None:
    for (i, j), what in (((0, 0), "phi(0)"), ((1, 0), "d1 phi(0)"), ((0, 1), "d2 phi(0)")):
        if series.coefficient(i, j):
            raise HessianPreconditionError(f"{what} must vanish, got {series.coefficient(i, j)}")
    if series.coefficient(2, 0) or series.coefficient(1, 1):
        raise HessianPreconditionError(
            "Hessian at the origin must be diag(0, c): d1^2 phi(0) and d1 d2 phi(0) must vanish"
        )
    if not series.coefficient(0, 2):
        raise HessianPreconditionError("d2^2 phi(0) = 0: both principal curvatures vanish, not an A-type singularity")


def normal_form(phi: SeriesLike, order: int) -> NormalForm:
    """
    Compute psi, b0 and the vanishing orders n, m.

    Args:
        phi: Linearly adapted polynomial or series
        order: Working truncation order

    Returns:
        The normal form data

    Raises:
        HessianPreconditionError: If the Hessian at the origin is not diag(0, c) with c != 0
        FiniteTypeError: If b0 vanishes through the working order
    """
    series = TruncatedSeries.of(phi)
    _check_hessian(series)
    target = order if series.exact else min(order, series.valid_order - 1)
    psi = solve_implicit(series.diff(1), target, solve_for=1)
    if psi.exact and series.exact:
        b0 = series.substitute(x2=psi)
    else:
        b0 = series.substitute(x2=psi, order=order)

    n = b0.order()
    if n is None:
        if b0.exact:
            raise FiniteTypeError("b_0 vanishes identically; phi is not of finite A-type")
        raise FiniteTypeError(f"b_0 vanishes through order {b0.valid_order}; not of finite A-type within order")
    m = psi.order()
    logger.debug("normal form: psi=%s, b0=%s, n=%s, m=%s", psi, b0, n, m)
    return NormalForm(
        psi=psi,
        b0=b0,
        n=n,
        m=m,
        beta0=b0.poly.coefficient(n, 0),
        omega0=None if m is None else psi.poly.coefficient(m, 0),
        b1_0=series.coefficient(0, 2),
        m_exceeds_order=m is None and not psi.exact,
    )


def split_class(nf: NormalForm, phi: SeriesLike | None = None) -> Split:
    """
    Split into A- (n >= 2m) and A+ (n < 2m, m infinite counting as A+).

    When ``phi`` is given the answer is cross-checked against the principal face of N(phi):
    A+ holds exactly when that face is the segment [(0,2),(n,0)] carrying no other point.

    Raises:
        ClassificationConsistencyError: If the two tests disagree
    """
    split = Split.A_MINUS if nf.m is not None and nf.n >= 2 * nf.m else Split.A_PLUS
    if phi is None:
        return split
    kappa = Weight(Fraction(1, nf.n), Fraction(1, 2))
    face = principal_part(phi, kappa)
    on_face = min(kappa.degree(e) for e in face.support()) == 1
    face_test = Split.A_PLUS if on_face and face.support() == {(0, 2), (nf.n, 0)} else Split.A_MINUS
    if face_test != split:
        raise ClassificationConsistencyError(
            f"n={nf.n}, m={nf.m} gives {split} but the principal face {face} gives {face_test}"
        )
    return split


def reduced(phi: SeriesLike) -> TruncatedSeries:
    """phi_red = phi - phi(0, x2)."""
    return TruncatedSeries.of(phi).filter(lambda e: e[0] > 0)


def effective_data(phi_tilde: SeriesLike, n: int) -> EffectiveData:
    """
    Edge data of phi_red leaving the vertex (n, 0).

    Args:
        phi_tilde: A+ phase in the current coordinates
        n: Multiplicity of b0

    Returns:
        The weight, n_e in these coordinates and the principal part (vertical-edge content when k2 = 0)

    Raises:
        EdgeError: If (n, 0) is not a vertex of N(phi_red)
        SeriesOrderError: If the truncation order cannot certify the edge
    """
    phi_red = reduced(phi_tilde)
    if phi_red.poly.is_zero():
        raise EdgeError("phi_red vanishes within the working order")
    polyhedron: NewtonPolyhedron = newton_polyhedron_of(phi_red)
    kappa = polyhedron.edge_from((n, 0))

    vertical_within_order = False
    if kappa.k2 > 0:
        if not phi_red.exact:
            corner = kappa.k1 + kappa.k2 * phi_red.valid_order
            if n > phi_red.valid_order or corner <= 1:
                raise SeriesOrderError(
                    f"Order {phi_red.valid_order} cannot certify the edge of weight ({kappa.k1}, {kappa.k2}); "
                    "increase --order",
                    module="classify",
                )
        principal = principal_part(phi_red, kappa)
    else:
        vertical_within_order = not phi_red.exact
        principal = phi_red.poly.filter(lambda e: e[0] == n)
    n_e = (1 - kappa.k2) * n
    logger.debug("effective data: N(phi_red)=%s, kappa=%s, n_e=%s", polyhedron, kappa, n_e)
    return EffectiveData(kappa, n_e, principal, vertical_within_order)


def _univariate(p: LatticePolynomial, slope: Fraction, n: int) -> sympy.Poly | None:
    """P(t) with p = x2^(a n) P(x1 / x2^a), or None when a = slope is not an integer."""
    if slope.denominator != 1:
        return None
    t = sympy.Symbol("t")
    expr = sympy.Add(*(sympy.Rational(c.numerator, c.denominator) * t**i for (i, _), c in p.items()))
    return sympy.Poly(expr, t, domain="QQ")


def _to_fraction(value: sympy.Rational) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def _single_root(poly: sympy.Poly, multiplicity: int) -> Fraction | None:
    """The root c != 0 when poly = lead * (t - c)^multiplicity, else None."""
    if poly.degree() != multiplicity:
        return None
    _, factors = poly.sqf_list()
    if len(factors) != 1:
        return None
    factor, power = factors[0]
    if power != multiplicity or factor.degree() != 1:
        return None
    c1, c0 = factor.all_coeffs()
    root = -_to_fraction(c0) / _to_fraction(c1)
    return root or None


def adaptation_conditions(effective: EffectiveData, n: int) -> tuple[bool, bool, bool]:
    """
    Test whether the current coordinates fail to be line-adapted.

    Returns:
        (a) k2 > 0, (b) k1/k2 is an integer, (c) d1 p has one non-trivial root of multiplicity n - 1
    """
    kappa = effective.kappa
    a = kappa.k2 > 0
    if not a:
        return (False, False, False)
    slope = kappa.k1 / kappa.k2
    b = slope.denominator == 1
    if not b:
        return (True, False, False)
    poly = _univariate(effective.principal, slope, n)
    c = poly is not None and _single_root(poly.diff(), n - 1) is not None
    return (True, True, c)


def line_adapt(phi: SeriesLike, n: int, order: int) -> LineAdaptation:
    """
    Construct line-adapted coordinates y1 = x1 - alpha(x2).

    Args:
        phi: A+ phase in linearly adapted coordinates
        n: Multiplicity of b0
        order: Working truncation order

    Returns:
        The total shear, the phase in the new coordinates and its edge data

    Raises:
        ClassificationConsistencyError: If the new coordinates still fail to be line-adapted
    """
    current = TruncatedSeries.of(phi)
    effective = effective_data(current, n)
    if not all(adaptation_conditions(effective, n)):
        logger.debug("coordinates already line-adapted (kappa=%s)", effective.kappa)
        empty = TruncatedSeries(LatticePolynomial({}))
        return LineAdaptation(empty, current, effective, ())

    chain: list[TruncatedSeries] = []
    target = order if current.exact else min(order, current.valid_order - n + 1)
    alpha = solve_implicit(current.diff(0, n - 1), target, solve_for=0)
    if alpha.order() == 1:
        linear = TruncatedSeries(alpha.poly.filter(lambda e: e[1] == 1))
        chain.append(linear)
        current = shear_substitute(current, linear, None if current.exact else order)
        target = order if current.exact else min(order, current.valid_order - n + 1)
        alpha = solve_implicit(current.diff(0, n - 1), target, solve_for=0)
    if not alpha.poly.is_zero():
        chain.append(alpha)
        current = shear_substitute(current, alpha, None if current.exact and alpha.exact else order)
    total = chain[0]
    for shear in chain[1:]:
        total = total + shear

    adapted = effective_data(current, n)
    if all(adaptation_conditions(adapted, n)):
        raise ClassificationConsistencyError(f"Shear {total} did not produce line-adapted coordinates")
    logger.debug("line-adapting shear alpha=%s, n_e %s -> %s", total, effective.n_e_coords, adapted.n_e_coords)
    return LineAdaptation(total, current, adapted, tuple(chain))


def exceptional_condition(p: LatticePolynomial, kappa: Weight, n: int) -> str | None:
    """
    Name the condition that makes p exceptional, if any.

    Args:
        p: Principal part in line-adapted coordinates
        kappa: Its weight, with k2 > 0
        n: Multiplicity of b0

    Returns:
        "A1" when d1^2 p is a single monomial, "A2" when d1^2 p vanishes of maximal order n - 2 along a
        real non-trivial root (and the shift u1 = y1 - c y2^a confirms the exceptional form), else None
    """
    second = p.diff(0, 2)
    if len(second) == 1:
        return "A1"
    slope = kappa.slope
    if slope is None or slope.denominator != 1:
        return None
    poly = _univariate(p, slope, n)
    root = None if poly is None else _single_root(poly.diff().diff(), n - 2)
    if root is None:
        return None
    shift = TruncatedSeries(LatticePolynomial.monomial(0, int(slope), root))
    shifted = reduced(shear_substitute(p, shift)).poly
    if len(shifted.diff(0, 2)) == 1:
        return "A2"
    logger.warning(
        "d1^2 p vanishes maximally along y1 = %s y2^%s but the shifted part %s is not exceptional", root, slope, shifted
    )
    return None


def detect_Ae(p: LatticePolynomial, kappa: Weight, n: int) -> bool:
    """Whether p, the principal part in line-adapted coordinates, makes phi exceptional."""
    return exceptional_condition(p, kappa, n) is not None


def classify(phi: SeriesLike, order: int, input_text: str | None = None) -> ClassificationReport:
    """
    Classify an A-type singularity and compute its critical exponent.

    Args:
        phi: Linearly adapted polynomial or series
        order: Working truncation order
        input_text: Echo of the user's input for the report

    Returns:
        The classification report
    """
    series = TruncatedSeries.of(phi)
    nf = normal_form(series, order)
    n = nf.n
    h = height(n)
    d_input = newton_distance(newton_polyhedron_of(series))
    text = input_text or series.to_text()
    split = split_class(nf, series)

    if split == Split.A_MINUS:
        p_c = max(THREE_HALVES, h)
        report = ClassificationReport(text, order, SingularityClass.A_MINUS, nf, h, p_c, d_input=d_input)
        # n >= 2m with the curve x2 = psi(x1) tangent to the x1-axis: N(phi) sees only m
        if nf.m is not None and d_input == Fraction(2 * nf.m, nf.m + 1):
            report.flags.add("non_adapted_height")
        return report

    if n == 3:
        report = ClassificationReport(
            text, order, SingularityClass.A_PLUS_GENERIC, nf, h, THREE_HALVES, d_input=d_input
        )
        report.flags.add("n_equals_3")
        if nf.m_exceeds_order:
            report.flags.add("m_exceeds_order")
        return report

    initial = effective_data(series, n)
    adaptation = line_adapt(series, n, order)
    effective = adaptation.effective
    n_e = effective.n_e_coords
    p_e = exponent_of(n_e)
    report = ClassificationReport(
        text,
        order,
        SingularityClass.A_PLUS_GENERIC,
        nf,
        h,
        max(THREE_HALVES, p_e),
        n_e_x=initial.n_e_coords,
        n_e=n_e,
        p_e=p_e,
        kappa_e=effective.kappa,
        adaptation=adaptation,
        d_input=d_input,
    )
    if nf.m_exceeds_order:
        report.flags.add("m_exceeds_order")
    if adaptation.already_adapted:
        report.flags.add("line_adapted_input")
    if effective.vertical_within_order:
        report.flags.add("vertical_edge_within_order")

    if effective.kappa.k2 == 0:
        report.flags.add("kappa2_zero")
        logger.warning("kappa_2 = 0 in line-adapted coordinates; treated as A_plus (not exceptional)")
        return report

    condition = exceptional_condition(effective.principal, effective.kappa, n)
    if condition is not None:
        report.singularity_class = SingularityClass.A_E
        report.exceptional_condition = condition
        report.p_c = Interval(max(THREE_HALVES, p_e), max(THREE_HALVES, exponent_of(n)))
        report.conjectured_pc = max(THREE_HALVES, p_e, h)
    logger.debug("classified %s as %s with n_e=%s", text, report.singularity_class, n_e)
    return report
