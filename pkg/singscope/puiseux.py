"""Newton-Puiseux expansion of the phase's second derivative and the resolution algorithm.

Polynomials here carry integer z-exponents, rational s-exponents and coefficients that are
either exact ``Fraction`` values or complex doubles. Shifts by rational roots keep everything
exact; shifts by irrational or complex roots switch to floating point, with cancellations
cleaned relative to the size of the contributions that produced them.
"""

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import StrEnum
from fractions import Fraction

import numpy as np
import sympy

from singscope.errors import (
    ClusterSeparationError,
    EdgeError,
    EmptyDomainError,
    PreconditionError,
    PuiseuxError,
    ResolutionLimitError,
    SeriesOrderError,
)
from singscope.newton import Edge, NewtonPolyhedron, Point, Weight, newton_polyhedron
from singscope.poly import LatticePolynomial, SeriesLike, TruncatedSeries

logger = logging.getLogger(__name__)

Coefficient = Fraction | complex
PuiseuxExponent = tuple[int, Fraction]

REAL_TOLERANCE = 1e-9
SAME_ROOT = 1e-9
SEPARATION = 1e-6
GROUPING = 1e-4
CLEANING = 1e-9
EXPANSION_TOLERANCE = 1e-8


def is_real(c: Coefficient) -> bool:
    if isinstance(c, Fraction):
        return True
    return abs(c.imag) <= REAL_TOLERANCE * abs(c)


def format_coefficient(c: Coefficient) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if is_real(c):
        return f"{c.real:.8g}"
    return f"{c.real:.8g}{c.imag:+.8g}i"


def _sort_key(c: Coefficient) -> tuple[float, float]:
    value = complex(c)
    return (value.real, value.imag)


def _close(a: Coefficient, b: Coefficient, tolerance: float) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    scale = max(abs(complex(a)), abs(complex(b)))
    return abs(complex(a) - complex(b)) <= tolerance * scale


@dataclass(frozen=True)
class Validity:
    """Every unknown term c z^B s^A of a truncated polynomial has omega * B + A > bound."""

    omega: Fraction
    bound: Fraction

    def known(self, b: int | Fraction, a: Fraction) -> bool:
        return self.omega * b + a <= self.bound

    def certifies(self, slope: Fraction, degree: Fraction) -> bool:
        """Whether no unknown term can reach the line slope * B + A = degree."""
        return self.bound * min(Fraction(1), slope / self.omega) >= degree

    def after_shift(self, slope: Fraction) -> "Validity":
        if slope < self.omega:
            return Validity(slope, self.bound * slope / self.omega)
        return self


class PuiseuxPolynomial:
    """Finite sum of c z^B s^A with B a non-negative integer and A a non-negative rational."""

    __slots__ = ("_terms", "validity")

    def __init__(self, terms: Mapping[PuiseuxExponent, Coefficient], validity: Validity | None = None) -> None:
        """
        Initialize the polynomial.

        Args:
            terms: Mapping (B, A) -> coefficient; zero coefficients are dropped
            validity: Region outside of which terms are unknown, None when complete
        """
        self._terms: dict[PuiseuxExponent, Coefficient] = {}
        for (b, a), c in terms.items():
            if c == 0:
                continue
            if validity is not None and not validity.known(b, Fraction(a)):
                continue
            self._terms[(int(b), Fraction(a))] = c
        self.validity = validity

    @classmethod
    def of(cls, value: "PuiseuxPolynomial | SeriesLike") -> "PuiseuxPolynomial":
        """Read a series in (z, s) = (first, second variable)."""
        if isinstance(value, PuiseuxPolynomial):
            return value
        series = TruncatedSeries.of(value)
        validity = None if series.exact else Validity(Fraction(1), Fraction(series.valid_order))
        return cls({(i, Fraction(j)): c for (i, j), c in series.poly.items()}, validity)

    @property
    def complete(self) -> bool:
        return self.validity is None

    @property
    def exact(self) -> bool:
        """Whether every coefficient is a rational number."""
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def items(self) -> Iterable[tuple[PuiseuxExponent, Coefficient]]:
        return self._terms.items()

    def support(self) -> list[Point]:
        return [(Fraction(b), a) for b, a in self._terms]

    def coefficient(self, b: int, a: Fraction | int) -> Coefficient:
        return self._terms.get((b, Fraction(a)), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def z_order(self) -> int:
        return min(b for b, _ in self._terms)

    def s_order(self) -> Fraction:
        return min(a for _, a in self._terms)

    def divide_monomial(self, b: int, a: Fraction) -> "PuiseuxPolynomial":
        validity = None
        if self.validity is not None:
            validity = Validity(self.validity.omega, self.validity.bound - self.validity.omega * b - a)
        return PuiseuxPolynomial({(tb - b, ta - a): c for (tb, ta), c in self._terms.items()}, validity)

    def filter_line(self, kappa: Weight) -> "PuiseuxPolynomial":
        """Terms of kappa-degree 1."""
        return PuiseuxPolynomial({e: c for e, c in self._terms.items() if kappa.degree(e) == 1})

    def shift(self, c: Coefficient, slope: Fraction) -> "PuiseuxPolynomial":
        """
        Substitute z -> z + c s^slope.

        Rational c keeps the arithmetic exact; otherwise coefficients become complex and a term
        whose value is below ``CLEANING`` times the total size of its contributions is dropped.
        """
        validity = None if self.validity is None else self.validity.after_shift(slope)
        values: dict[PuiseuxExponent, Coefficient] = {}
        sizes: dict[PuiseuxExponent, float] = {}
        for (b, a), coefficient in self._terms.items():
            for k in range(b + 1):
                exponent = (k, a + slope * (b - k))
                if validity is not None and not validity.known(*exponent):
                    continue
                term = coefficient * math.comb(b, k) * c ** (b - k)
                values[exponent] = values.get(exponent, Fraction(0)) + term
                sizes[exponent] = sizes.get(exponent, 0.0) + abs(complex(term))
        cleaned = {
            e: v
            for e, v in values.items()
            if isinstance(v, Fraction) or abs(v) > CLEANING * sizes[e]
        }
        return PuiseuxPolynomial(cleaned, validity)

    def __mul__(self, other: "PuiseuxPolynomial") -> "PuiseuxPolynomial":
        terms: dict[PuiseuxExponent, Coefficient] = {}
        for (b1, a1), c1 in self._terms.items():
            for (b2, a2), c2 in other._terms.items():
                e = (b1 + b2, a1 + a2)
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return PuiseuxPolynomial(terms)

    def numeric_terms(self) -> list[tuple[int, Fraction, complex]]:
        return [(b, a, complex(c)) for (b, a), c in self._terms.items()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PuiseuxPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = [
            f"({format_coefficient(c)})*z^{b}*s^{a}"
            for (b, a), c in sorted(self._terms.items(), key=lambda item: (-item[0][0], item[0][1]))
        ]
        return " + ".join(parts)


@dataclass(frozen=True)
class PuiseuxSeries:
    """
    Root z(s) = sum c_k s^(a_k) of a polynomial, carried to a finite depth.

    ``exact`` marks a series that is the whole root rather than a truncation of it.
    """

    terms: tuple[tuple[Fraction, Coefficient], ...]
    multiplicity: int = 1
    exact: bool = False
    separated: bool = True

    @property
    def depth(self) -> int:
        return len(self.terms)

    @property
    def ramification(self) -> int:
        return math.lcm(1, *(a.denominator for a, _ in self.terms))

    @property
    def leading(self) -> tuple[Fraction, Coefficient] | None:
        return self.terms[0] if self.terms else None

    @property
    def real(self) -> bool:
        return all(is_real(c) for _, c in self.terms)

    def evaluate(self, s: float) -> complex:
        return sum((complex(c) * s ** float(a) for a, c in self.terms), 0j)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({format_coefficient(c)})*s^{a}" for a, c in self.terms)


def _edge_coefficients(p: PuiseuxPolynomial, edge: Edge) -> dict[int, Coefficient]:
    base = int(edge.left[0])
    return {b - base: c for (b, a), c in p.items() if edge.weight.degree((b, a)) == 1}


def polynomial_roots(coefficients: Mapping[int, Coefficient]) -> list[tuple[Coefficient, int]]:
    """
    Roots with multiplicities of sum_k c_k t^k.

    Rational coefficients are factored exactly over Q: linear factors give exact roots, the
    others are refined numerically. Complex coefficients go through numpy with roots closer
    than ``GROUPING`` merged into one multiple root.

    Raises:
        ClusterSeparationError: If two distinct roots are too close to be told apart
    """
    degree = max(coefficients)
    roots: list[tuple[Coefficient, int]] = []
    if all(isinstance(c, Fraction) for c in coefficients.values()):
        t = sympy.Symbol("t")
        exact = {k: c for k, c in coefficients.items() if isinstance(c, Fraction)}
        expr = sympy.Add(*(sympy.Rational(c.numerator, c.denominator) * t**k for k, c in exact.items()))
        _, factors = sympy.Poly(expr, t, domain="QQ").factor_list()
        for factor, multiplicity in factors:
            if factor.degree() == 1:
                c1, c0 = factor.all_coeffs()
                root = -c0 / c1
                roots.append((Fraction(int(root.p), int(root.q)), multiplicity))
            else:
                roots.extend((complex(r), multiplicity) for r in factor.nroots(n=15))
    else:
        array = np.array([complex(coefficients.get(k, 0)) for k in range(degree, -1, -1)])
        groups: list[list[complex]] = []
        for r in sorted((complex(r) for r in np.roots(array)), key=_sort_key):
            for group in groups:
                centre = complex(np.mean(group))
                if abs(r - centre) <= GROUPING * max(abs(r), abs(centre)):
                    group.append(r)
                    break
            else:
                groups.append([r])
        roots = [(complex(np.mean(group)), len(group)) for group in groups]

    for i, (a, _) in enumerate(roots):
        for b, _ in roots[i + 1 :]:
            if not isinstance(a, Fraction) or not isinstance(b, Fraction):
                if _close(a, b, SEPARATION):
                    raise ClusterSeparationError(
                        f"Edge roots {format_coefficient(a)} and {format_coefficient(b)} are not separated"
                    )
    roots.sort(key=lambda item: _sort_key(item[0]))
    return roots


def _certify(p: PuiseuxPolynomial, edge: Edge) -> None:
    if p.validity is None:
        return
    degree = edge.slope * edge.right[0] + edge.right[1]
    if not p.validity.known(edge.right[0], edge.right[1]) or not p.validity.certifies(edge.slope, degree):
        raise SeriesOrderError(
            f"Truncation cannot certify the edge of slope {edge.slope}; increase --order", module="puiseux-resolve"
        )


def _expand(
    p: PuiseuxPolynomial, prefix: tuple[tuple[Fraction, Coefficient], ...], multiplicity: int, depth: int
) -> list[PuiseuxSeries]:
    if p.is_zero() or p.z_order() >= multiplicity:
        return [PuiseuxSeries(prefix, multiplicity, exact=p.complete, separated=True)]
    edges = [e for e in newton_polyhedron(p.support()).edges if e.right[0] <= multiplicity]
    try:
        for edge in edges:
            _certify(p, edge)
    except SeriesOrderError:
        if not prefix:
            raise
        logger.warning("expansion of %s stops early: truncation order reached", PuiseuxSeries(prefix))
        return [PuiseuxSeries(prefix, multiplicity, separated=multiplicity == 1)]
    out: list[PuiseuxSeries] = []
    for edge in edges:
        for c, mu in polynomial_roots(_edge_coefficients(p, edge)):
            terms = prefix + ((edge.slope, c),)
            if depth <= 1:
                if mu > 1:
                    logger.warning("root cluster %s of multiplicity %d not separated at the requested depth", terms, mu)
                out.append(PuiseuxSeries(terms, mu, separated=mu == 1))
            else:
                out.extend(_expand(p.shift(c, edge.slope), terms, mu, depth - 1))
    return out


def phase_second_derivative(phi1: SeriesLike) -> TruncatedSeries:
    """Phi = d^2/dz1^2 of phi1."""
    return TruncatedSeries.of(phi1).diff(0, 2)


def puiseux_roots(psi: "PuiseuxPolynomial | SeriesLike", depth: int = 6) -> list[PuiseuxSeries]:
    """
    Expand the roots z = z(s) of psi near the origin as Puiseux series.

    The trivial factor z^nu1 s^nu2 is split off first; z = 0 is returned as an exact root of
    multiplicity nu1 when nu1 > 0.

    Args:
        psi: Polynomial or series in (z, s)
        depth: Number of terms to compute per root

    Returns:
        The roots, each carrying its multiplicity

    Raises:
        PreconditionError: If psi vanishes
        SeriesOrderError: If the truncation cannot certify the leading terms
    """
    p = PuiseuxPolynomial.of(psi)
    if p.is_zero():
        raise PreconditionError("Puiseux expansion of the zero polynomial")
    nu1, nu2 = p.z_order(), p.s_order()
    reduced = p.divide_monomial(nu1, nu2)
    roots: list[PuiseuxSeries] = []
    if nu1:
        roots.append(PuiseuxSeries((), nu1, exact=True))
    weierstrass = min((b for (b, a), _ in reduced.items() if a == 0), default=0)
    if weierstrass:
        roots.extend(_expand(reduced, (), weierstrass, depth))
    logger.debug("Puiseux roots of %s: %s", p, [str(r) for r in roots])
    return roots


def substitute_root(psi: "PuiseuxPolynomial | SeriesLike", root: PuiseuxSeries) -> PuiseuxPolynomial:
    """psi(z + root(s), s), computed one term at a time."""
    p = PuiseuxPolynomial.of(psi)
    for a, c in root.terms:
        p = p.shift(c, a)
    return p


def residual_exponent(psi: "PuiseuxPolynomial | SeriesLike", root: PuiseuxSeries) -> Fraction | None:
    """Lowest s-exponent of psi(root(s), s), or None when it vanishes."""
    shifted = substitute_root(psi, root)
    exponents = [a for (b, a), _ in shifted.items() if b == 0]
    return min(exponents) if exponents else None


# -- cluster trees ----------------------------------------------------------------------


@dataclass(frozen=True)
class RootCluster:
    """All roots sharing a jet up to the coefficient ``coefficient``."""

    coefficient: Coefficient
    multiplicity: int
    children: tuple["PuiseuxCluster", ...] = ()

    @property
    def real(self) -> bool:
        return is_real(self.coefficient)


@dataclass(frozen=True)
class PuiseuxCluster:
    """All roots whose next exponent is ``leading_exponent``."""

    leading_exponent: Fraction
    multiplicity: int
    children: tuple[RootCluster, ...]


@dataclass(frozen=True)
class ClusterTree:
    nu1: int
    clusters: tuple[PuiseuxCluster, ...]
    nu2: Fraction = Fraction(0)

    @property
    def degree(self) -> int:
        return self.nu1 + sum(c.multiplicity for c in self.clusters)

    def render(self) -> str:
        """Plain-text rendering, one node per line."""
        lines = [f"nu1={self.nu1} nu2={self.nu2}"]

        def walk(clusters: tuple[PuiseuxCluster, ...], indent: str) -> None:
            for cluster in clusters:
                lines.append(f"{indent}a={cluster.leading_exponent} N={cluster.multiplicity}")
                for child in cluster.children:
                    kind = "real" if child.real else "complex"
                    lines.append(f"{indent}  c={format_coefficient(child.coefficient)} ({kind}) N={child.multiplicity}")
                    walk(child.children, indent + "    ")

        walk(self.clusters, "")
        return "\n".join(lines)


def _group(entries: list[tuple[tuple[tuple[Fraction, Coefficient], ...], int]]) -> tuple[PuiseuxCluster, ...]:
    by_exponent: dict[Fraction, list[tuple[tuple[tuple[Fraction, Coefficient], ...], int]]] = {}
    for terms, multiplicity in entries:
        if terms:
            by_exponent.setdefault(terms[0][0], []).append((terms, multiplicity))
    clusters: list[PuiseuxCluster] = []
    for exponent in sorted(by_exponent):
        buckets: list[tuple[Coefficient, list[tuple[tuple[tuple[Fraction, Coefficient], ...], int]]]] = []
        for terms, multiplicity in by_exponent[exponent]:
            c = terms[0][1]
            for anchor, bucket in buckets:
                if _close(anchor, c, SAME_ROOT):
                    bucket.append((terms[1:], multiplicity))
                    break
                if _close(anchor, c, SEPARATION):
                    raise ClusterSeparationError(
                        f"Coefficients {format_coefficient(anchor)} and {format_coefficient(c)} at exponent {exponent} "
                        "are too close to separate"
                    )
            else:
                buckets.append((c, [(terms[1:], multiplicity)]))
        children = tuple(
            RootCluster(anchor, sum(m for _, m in bucket), _group(bucket))
            for anchor, bucket in sorted(buckets, key=lambda item: _sort_key(item[0]))
        )
        clusters.append(PuiseuxCluster(exponent, sum(child.multiplicity for child in children), children))
    return tuple(clusters)


def cluster_tree(roots: Iterable[PuiseuxSeries], nu2: Fraction = Fraction(0)) -> ClusterTree:
    """
    Group roots by (exponent, coefficient) level by level.

    Raises:
        ClusterSeparationError: If two distinct coefficients are closer than the separation tolerance
    """
    roots = list(roots)
    nu1 = sum(r.multiplicity for r in roots if not r.terms)
    return ClusterTree(nu1, _group([(r.terms, r.multiplicity) for r in roots]), nu2)


def cluster_tree_of(psi: "PuiseuxPolynomial | SeriesLike", depth: int = 6) -> ClusterTree:
    p = PuiseuxPolynomial.of(psi)
    return cluster_tree(puiseux_roots(p, depth), p.s_order())


@dataclass(frozen=True)
class VertexData:
    vertices: tuple[Point, ...]
    slopes: tuple[Fraction, ...]


def vertex_data(tree: ClusterTree) -> VertexData:
    """
    Vertices (B_l, A_l) predicted by the top-level clusters.

    B_l counts the roots with leading exponent above a_l (trivial roots included); A_l adds
    a_mu N_mu over the clusters up to l.
    """
    clusters = sorted(tree.clusters, key=lambda c: c.leading_exponent)
    vertices: list[Point] = []
    for l in range(len(clusters) + 1):
        b = tree.nu1 + sum(c.multiplicity for c in clusters[l:])
        a = tree.nu2 + sum((c.leading_exponent * c.multiplicity for c in clusters[:l]), Fraction(0))
        vertices.append((Fraction(b), a))
    return VertexData(tuple(vertices), tuple(c.leading_exponent for c in clusters))


# -- edge principal parts ----------------------------------------------------------------


@dataclass(frozen=True)
class EdgeFactorization:
    """c_l s^A_(l-1) z^B_l prod (z - c s^a_l)^N over the roots of edge l."""

    edge: int
    constant: Coefficient
    s_power: Fraction
    z_power: int
    slope: Fraction
    factors: tuple[tuple[Coefficient, int], ...]

    def expand(self) -> PuiseuxPolynomial:
        product = PuiseuxPolynomial({(self.z_power, self.s_power): self.constant})
        for c, multiplicity in self.factors:
            linear = PuiseuxPolynomial({(1, Fraction(0)): Fraction(1), (0, self.slope): -c})
            for _ in range(multiplicity):
                product = product * linear
        return product


def principal_part_of_edge(phi: "PuiseuxPolynomial | SeriesLike", l: int) -> EdgeFactorization:
    """
    Factor the principal part of edge l (1-based) over its roots.

    Raises:
        EdgeError: If edge l does not exist
        PuiseuxError: If the factored form does not expand back to the principal part
    """
    p = PuiseuxPolynomial.of(phi)
    polyhedron = newton_polyhedron(p.support())
    if not 1 <= l <= len(polyhedron.edges):
        raise EdgeError(f"Newton polyhedron {polyhedron} has no compact edge {l}")
    edge = polyhedron.edges[l - 1]
    _certify(p, edge)
    right_b, right_a = edge.right
    factorization = EdgeFactorization(
        edge=l,
        constant=p.coefficient(int(right_b), right_a),
        s_power=right_a,
        z_power=int(edge.left[0]),
        slope=edge.slope,
        factors=tuple(polynomial_roots(_edge_coefficients(p, edge))),
    )
    expected = p.filter_line(edge.weight)
    expanded = factorization.expand()
    scale = max(abs(complex(c)) for _, c in expected.items())
    keys = {e for e, _ in expected.items()} | {e for e, _ in expanded.items()}
    for b, a in keys:
        if abs(complex(expected.coefficient(b, a)) - complex(expanded.coefficient(b, a))) > EXPANSION_TOLERANCE * scale:
            raise PuiseuxError(f"Factored principal part of edge {l} does not reproduce the term z^{b} s^{a}")
    return factorization


def edge_factorizations(phi: "PuiseuxPolynomial | SeriesLike") -> list[EdgeFactorization]:
    p = PuiseuxPolynomial.of(phi)
    count = len(newton_polyhedron(p.support()).edges)
    return [principal_part_of_edge(p, l) for l in range(1, count + 1)]


# -- multiplicity lemma -----------------------------------------------------------------


class LemmaBranch(StrEnum):
    FULL_COLLAPSE = "full_collapse_form"
    SIMPLE_REAL_ROOTS = "simple_real_roots_form"
    NO_HIGH_MULTIPLICITY = "no_high_mult_real_root"


@dataclass(frozen=True)
class LemmaResult:
    branch: LemmaBranch
    n_e_minus_2: Fraction
    real_root_multiplicities: tuple[int, ...]


def multiplicity_lemma_classify(P: "PuiseuxPolynomial | LatticePolynomial", kappa: Weight) -> LemmaResult:
    """
    Decide which form a kappa-homogeneous principal part takes.

    P is factored as y1^nu1 prod_k (y1^q - lambda_k y2^p)^n_k with p/q = k1/k2 in lowest terms;
    real non-trivial roots come from real lambda_k (both signs when q is odd, positive ones
    twice when q is even).

    Raises:
        PuiseuxError: If P is not kappa-homogeneous of degree 1 with P(y1, 0) a power of y1, or if
            none of the three forms applies
    """
    p = PuiseuxPolynomial.of(P) if isinstance(P, LatticePolynomial) else P
    if not p.exact:
        raise PuiseuxError("Multiplicity lemma needs rational coefficients")
    if not 0 < kappa.k2 <= 1 or kappa.k1 <= 0:
        raise PuiseuxError(f"Weight ({kappa.k1}, {kappa.k2}) outside 0 < k2 <= 1")
    if any(kappa.degree(e) != 1 for e, _ in p.items()):
        raise PuiseuxError("P is not kappa-homogeneous of degree 1")
    axis = [(b, c) for (b, a), c in p.items() if a == 0]
    if len(axis) != 1:
        raise PuiseuxError("P(y1, 0) must be a single power of y1")
    d, lead = axis[0]
    n_e_minus_2 = (1 - kappa.k2) / kappa.k1

    ratio = kappa.k1 / kappa.k2
    q = ratio.denominator
    coefficients = {b: Fraction(c) / Fraction(lead) for (b, _), c in p.items()}
    nu1 = min(coefficients)
    u = sympy.Symbol("u")
    terms = []
    for b, c in coefficients.items():
        if (b - nu1) % q:
            raise PuiseuxError(f"Exponent {b} does not fit the factorization with q = {q}")
        terms.append(sympy.Rational(c.numerator, c.denominator) * u ** ((b - nu1) // q))
    _, factors = sympy.Poly(sympy.Add(*terms), u, domain="QQ").factor_list()

    multiplicities: list[int] = []
    for factor, n_k in factors:
        for lam in factor.real_roots():
            if lam.is_zero:
                continue
            if q % 2 == 1:
                multiplicities.append(n_k)
            elif lam.is_positive:
                multiplicities.extend([n_k, n_k])

    if q == 1 and nu1 == 0 and len(factors) == 1 and factors[0][0].degree() == 1 and factors[0][1] == d:
        branch = LemmaBranch.FULL_COLLAPSE
    elif multiplicities and all(m == 1 for m in multiplicities):
        branch = LemmaBranch.SIMPLE_REAL_ROOTS
    elif all(m <= n_e_minus_2 for m in multiplicities):
        branch = LemmaBranch.NO_HIGH_MULTIPLICITY
    else:
        raise PuiseuxError(f"Real root multiplicities {multiplicities} exceed n_e - 2 = {n_e_minus_2}")
    return LemmaResult(branch, n_e_minus_2, tuple(sorted(multiplicities)))


# -- resolution -------------------------------------------------------------------------


class CaseTag(StrEnum):
    CASE_1 = "Case1_c_not_real_root"
    CASE_2_I = "Case2_subcase_i"
    CASE_2_II = "Case2_subcase_ii"


@dataclass(frozen=True)
class ResolutionStep:
    """One shift z = z~ + c s^a of the resolution tree, with the checks made on the result."""

    step_index: int
    jet: PuiseuxSeries
    polyhedron: NewtonPolyhedron
    case: CaseTag
    multiplicity: int
    stopped: bool
    a1_at_least_one: bool | None
    lemma_branch: LemmaBranch | None = None
    shifted: PuiseuxPolynomial = field(default_factory=lambda: PuiseuxPolynomial({}), compare=False, repr=False)

    @property
    def vertex_data(self) -> tuple[Point, ...]:
        return self.polyhedron.vertices


@dataclass(frozen=True)
class Resolution:
    """Step-1 polyhedron of Phi and every step of every real branch."""

    polyhedron: NewtonPolyhedron
    steps: tuple[ResolutionStep, ...]
    a1_at_least_one: bool | None
    lemma_branch: LemmaBranch | None = None

    @property
    def max_step(self) -> int:
        return max((s.step_index for s in self.steps), default=0)


def _a1_check(polyhedron: NewtonPolyhedron) -> bool | None:
    if not polyhedron.edges:
        return None
    return polyhedron.vertices[1][1] >= 1


def _lemma_branch(p: PuiseuxPolynomial, polyhedron: NewtonPolyhedron) -> LemmaBranch | None:
    """Branch of the first edge's principal part; None when the lemma does not apply."""
    if not polyhedron.edges or not p.exact:
        return None
    edge = polyhedron.edges[0]
    try:
        return multiplicity_lemma_classify(p.filter_line(edge.weight), edge.weight).branch
    except PuiseuxError as e:
        logger.warning("multiplicity lemma not applicable to the first edge: %s", e)
        return None


def resolution_step(
    phi_p: "PuiseuxPolynomial | SeriesLike",
    cluster_choice: tuple[Fraction, Coefficient],
    step_index: int = 1,
    jet: tuple[tuple[Fraction, Coefficient], ...] = (),
) -> ResolutionStep:
    """
    Shift z = z~ + c s^a and classify the outcome.

    Args:
        phi_p: Current polynomial
        cluster_choice: Slope a of an edge and a real coefficient c (a root of that edge, or a test point)
        step_index: Index recorded in the step
        jet: Terms subtracted by earlier steps

    Returns:
        The step; ``case`` is Case 1 when c is not a root of the edge polynomial, Case 2 (ii) when
        the principal part collapses to a monomial and Case 2 (i) otherwise

    Raises:
        EdgeError: If no edge has slope a
        SeriesOrderError: If the truncation cannot certify the edge
    """
    p = PuiseuxPolynomial.of(phi_p)
    slope, c = cluster_choice
    polyhedron = newton_polyhedron(p.support())
    edge = next((e for e in polyhedron.edges if e.slope == slope), None)
    if edge is None:
        raise EdgeError(f"No edge of slope {slope} in {polyhedron}")
    _certify(p, edge)
    roots = polynomial_roots(_edge_coefficients(p, edge))
    match = next(((r, mu) for r, mu in roots if _close(r, c, SAME_ROOT)), None)
    shifted = p.shift(c, slope)
    new_polyhedron = newton_polyhedron(shifted.support())
    if match is None:
        case, multiplicity = CaseTag.CASE_1, 0
    else:
        on_line = shifted.filter_line(edge.weight)
        case = CaseTag.CASE_2_II if len(list(on_line.items())) == 1 else CaseTag.CASE_2_I
        multiplicity = match[1]
    a1 = _a1_check(new_polyhedron)
    branch = _lemma_branch(shifted, new_polyhedron) if a1 is False else None
    if a1 is False and branch != LemmaBranch.SIMPLE_REAL_ROOTS:
        logger.warning("A_1 < 1 after shifting by %s s^%s outside the simple-root branch (%s)", c, slope, branch)
    return ResolutionStep(
        step_index=step_index,
        jet=PuiseuxSeries(jet + ((slope, c),), max(multiplicity, 1)),
        polyhedron=new_polyhedron,
        case=case,
        multiplicity=multiplicity,
        stopped=case == CaseTag.CASE_1 or multiplicity == 1,
        a1_at_least_one=a1,
        lemma_branch=branch,
        shifted=shifted,
    )


def _branch(
    p: PuiseuxPolynomial,
    jet: tuple[tuple[Fraction, Coefficient], ...],
    step: int,
    min_slope: Fraction | None,
    bound: int,
    steps: list[ResolutionStep],
    max_steps: int,
) -> None:
    if step > max_steps:
        raise ResolutionLimitError(f"Branch {PuiseuxSeries(jet)} did not stabilise within {max_steps} steps")
    polyhedron = newton_polyhedron(p.support())
    if min_slope is not None and p.z_order() >= bound:
        # every root of this sub-cluster coincides with the jet
        steps.append(
            ResolutionStep(
                step_index=step,
                jet=PuiseuxSeries(jet, bound, exact=p.complete),
                polyhedron=polyhedron,
                case=CaseTag.CASE_2_II,
                multiplicity=bound,
                stopped=True,
                a1_at_least_one=_a1_check(polyhedron),
                shifted=p,
            )
        )
        return
    for edge in polyhedron.edges:
        if edge.right[0] > bound or (min_slope is not None and edge.slope <= min_slope):
            continue
        roots = polynomial_roots(_edge_coefficients(p, edge))
        for c, mu in roots:
            if not is_real(c):
                continue
            real_c: Coefficient = c if isinstance(c, Fraction) else complex(c.real, 0.0)
            record = resolution_step(p, (edge.slope, real_c), step, jet)
            if min_slope is not None and mu == bound:
                # principal part is (z - c s^a)^bound: the sub-cluster did not split
                steps.append(replace(record, stopped=True))
                logger.debug("step %d: multiplicity %d stable at a=%s, branch stops", step, mu, edge.slope)
                return
            steps.append(record)
            logger.debug("step %d: a=%s c=%s -> %s", step, edge.slope, format_coefficient(real_c), record.case)
            if not record.stopped:
                _branch(record.shifted, record.jet.terms, step + 1, edge.slope, record.multiplicity, steps, max_steps)
        outside = 1 + max(abs(complex(r)) for r, _ in roots)
        test_point = Fraction(math.ceil(outside))
        steps.append(resolution_step(p, (edge.slope, test_point), step, jet))


def resolve(phi: "PuiseuxPolynomial | SeriesLike", max_steps: int = 20) -> Resolution:
    """
    Run the resolution algorithm over every real branch of Phi.

    Each edge contributes one step per real root c (Case 2) and one stopped step for a test
    point outside the root set (Case 1). A branch stops when its sub-cluster is a single root:
    the multiplicity is 1, all its roots coincide with the jet, or a later step finds one real
    root carrying the whole multiplicity of the sub-cluster (an infinite Puiseux series).

    Raises:
        ResolutionLimitError: If a branch needs more than ``max_steps`` steps
        SeriesOrderError: If the truncation cannot certify an edge
    """
    p = PuiseuxPolynomial.of(phi)
    if p.is_zero():
        raise PreconditionError("Resolution of the zero polynomial")
    polyhedron = newton_polyhedron(p.support())
    a1 = _a1_check(polyhedron)
    branch = _lemma_branch(p, polyhedron) if a1 is False else None
    steps: list[ResolutionStep] = []
    _branch(p, (), 1, None, int(polyhedron.vertices[0][0]), steps, max_steps)
    logger.debug("resolution of %s: %d steps", polyhedron, len(steps))
    return Resolution(polyhedron, tuple(steps), a1, branch)


# -- numeric checks ---------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionCheck:
    vertex: Point
    coefficient: complex
    ratio_min: float
    ratio_max: float
    samples: int
    passed: bool
    value_min: float = 0.0
    value_max: float = 0.0


def transition_factorization_check(
    phi: "PuiseuxPolynomial | SeriesLike", l: int, M: int = 8, samples: int = 64, seed: int = 0, constant: float = 4.0
) -> TransitionCheck:
    """
    Sample the transition domain of vertex l and compare Phi with its vertex monomial.

    ``value_min``/``value_max`` bound |Phi / (s^A_l z^B_l)| itself, which is close to |c_l| on the
    domain; the verdict uses ``ratio_min``/``ratio_max``, the same quantity divided by |c_l|.

    The domain is 2^M s^a_(l+1) < |z| < 2^-M s^a_l with a_0 = 0; for the last vertex the lower bound
    is replaced by 2^-16 times the upper one.

    Raises:
        EmptyDomainError: If no admissible s exists in double precision
    """
    p = PuiseuxPolynomial.of(phi)
    polyhedron = newton_polyhedron(p.support())
    if not 0 <= l < len(polyhedron.vertices):
        raise PreconditionError(f"Vertex {l} does not exist in {polyhedron}")
    b_l, a_l = polyhedron.vertices[l]
    coefficient = complex(p.coefficient(int(b_l), a_l))
    slopes = polyhedron.slopes
    low_slope = float(slopes[l - 1]) if l >= 1 else 0.0
    high_slope = float(slopes[l]) if l < len(slopes) else None

    if high_slope is None:
        log_s_max = -float(M)
    else:
        log_s_max = -2.0 * M / (high_slope - low_slope) - 1.0
    log_s_min = log_s_max - 16.0
    if log_s_min < -1000.0:
        raise EmptyDomainError(f"Transition domain of vertex {l} is empty in double precision for M = {M}")

    rng = np.random.default_rng(seed)
    log_s = rng.uniform(log_s_min, log_s_max, samples)
    log_upper = -M + low_slope * log_s
    log_lower = M + high_slope * log_s if high_slope is not None else log_upper - 16.0
    if np.any(log_lower >= log_upper):
        raise EmptyDomainError(f"Transition domain of vertex {l} is empty for M = {M}")
    log_z = log_lower + (log_upper - log_lower) * rng.uniform(0.0, 1.0, samples)
    sign = rng.choice([-1.0, 1.0], samples)

    total = np.zeros(samples, dtype=complex)
    for b, a, c in p.numeric_terms():
        exponent = (b - float(b_l)) * log_z + (float(a) - float(a_l)) * log_s
        total += c * sign ** (b - int(b_l)) * np.exp2(exponent)
    ratio = np.abs(total) / abs(coefficient)
    passed = bool(np.all((ratio >= 1 / constant) & (ratio <= constant)))
    logger.debug("transition check at vertex %s: ratio in [%g, %g]", (b_l, a_l), ratio.min(), ratio.max())
    values = ratio * abs(coefficient)
    return TransitionCheck(
        (b_l, a_l),
        coefficient,
        float(ratio.min()),
        float(ratio.max()),
        samples,
        passed,
        float(values.min()),
        float(values.max()),
    )


def integrate_twice(V: LatticePolynomial, B: int) -> LatticePolynomial:
    """
    U with d^2/dz^2 (U z^(B+2)) = V z^B, z being the first variable.

    Raises:
        PreconditionError: If B is negative
    """
    if B < 0:
        raise PreconditionError(f"Exponent B must be non-negative, got {B}")
    return LatticePolynomial({(k, j): c / ((k + B + 2) * (k + B + 1)) for (k, j), c in V.items()}, V.vars)
