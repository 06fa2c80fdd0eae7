"""Exact bivariate polynomials, truncated power series and the expression front-end."""

import logging
from collections.abc import Callable, Iterator, Mapping
from fractions import Fraction
from typing import Any

import numpy as np
import numpy.typing as npt
import sympy

from singscope.errors import ExpressionSyntaxError, PreconditionError, SeriesOrderError

logger = logging.getLogger(__name__)

Exponent = tuple[int, int]
Rational = Fraction | int

DEFAULT_VARS = ("x1", "x2")


def _rational_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class LatticePolynomial:
    """Sparse polynomial in two variables with exact rational coefficients.

    Terms are stored as a mapping from exponent pairs to non-zero ``Fraction`` values.
    Instances are immutable; every operation returns a new polynomial.
    """

    __slots__ = ("_terms", "vars", "_hash")

    def __init__(self, terms: Mapping[Exponent, Rational] | None = None, vars: tuple[str, str] = DEFAULT_VARS) -> None:
        """
        Initialize the polynomial.

        Args:
            terms: Mapping from (i, j) to the coefficient of vars[0]^i * vars[1]^j
            vars: Display names of the two variables

        Raises:
            PreconditionError: If an exponent is negative or not an integer
        """
        clean: dict[Exponent, Fraction] = {}
        for (i, j), coefficient in (terms or {}).items():
            if not isinstance(i, int) or not isinstance(j, int) or i < 0 or j < 0:
                raise PreconditionError(f"Exponents must be non-negative integers, got ({i}, {j})")
            value = Fraction(coefficient)
            if value:
                clean[(i, j)] = value
        self._terms = clean
        self.vars = vars
        self._hash: int | None = None

    @classmethod
    def constant(cls, value: Rational, vars: tuple[str, str] = DEFAULT_VARS) -> "LatticePolynomial":
        return cls({(0, 0): value}, vars)

    @classmethod
    def variable(cls, index: int, vars: tuple[str, str] = DEFAULT_VARS) -> "LatticePolynomial":
        return cls({(1, 0) if index == 0 else (0, 1): 1}, vars)

    @classmethod
    def monomial(
        cls, i: int, j: int, coefficient: Rational = 1, vars: tuple[str, str] = DEFAULT_VARS
    ) -> "LatticePolynomial":
        return cls({(i, j): coefficient}, vars)

    def with_vars(self, vars: tuple[str, str]) -> "LatticePolynomial":
        """Return the same terms under different variable names."""
        return LatticePolynomial(self._terms, vars)

    # -- inspection ---------------------------------------------------------------------

    def items(self) -> Iterator[tuple[Exponent, Fraction]]:
        return iter(self._terms.items())

    def coefficient(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def support(self) -> frozenset[Exponent]:
        """Return the Taylor support: exponent pairs with non-zero coefficient."""
        return frozenset(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def total_degree(self) -> int:
        """Largest total degree of a term; -1 for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def order(self) -> int | None:
        """Smallest total degree of a term, or None for the zero polynomial."""
        return min((i + j for i, j in self._terms), default=None)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def order_in(self, index: int) -> int | None:
        return min((e[index] for e in self._terms), default=None)

    def is_constant(self) -> bool:
        return all(e == (0, 0) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self.coefficient(0, 0)

    # -- arithmetic ---------------------------------------------------------------------

    def _coerce(self, other: "LatticePolynomial | Rational") -> "LatticePolynomial":
        if isinstance(other, LatticePolynomial):
            return other
        return LatticePolynomial.constant(other, self.vars)

    def __add__(self, other: "LatticePolynomial | Rational") -> "LatticePolynomial":
        other = self._coerce(other)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return LatticePolynomial(terms, self.vars)

    __radd__ = __add__

    def __neg__(self) -> "LatticePolynomial":
        return LatticePolynomial({e: -c for e, c in self._terms.items()}, self.vars)

    def __sub__(self, other: "LatticePolynomial | Rational") -> "LatticePolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Rational) -> "LatticePolynomial":
        return (-self) + other

    def mul(self, other: "LatticePolynomial | Rational", cap: int | None = None) -> "LatticePolynomial":
        """
        Multiply, optionally dropping every product term of total degree above ``cap``.

        Args:
            other: Polynomial or rational factor
            cap: Optional total-degree cut-off

        Returns:
            The (possibly truncated) product
        """
        other = self._coerce(other)
        terms: dict[Exponent, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                e = (i1 + i2, j1 + j2)
                if cap is not None and e[0] + e[1] > cap:
                    continue
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return LatticePolynomial(terms, self.vars)

    def __mul__(self, other: "LatticePolynomial | Rational") -> "LatticePolynomial":
        return self.mul(other)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "LatticePolynomial":
        if exponent < 0:
            raise PreconditionError(f"Negative power {exponent} of a polynomial")
        result = LatticePolynomial.constant(1, self.vars)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def scale(self, factor: Rational) -> "LatticePolynomial":
        factor = Fraction(factor)
        return LatticePolynomial({e: c * factor for e, c in self._terms.items()}, self.vars)

    def diff(self, index: int, times: int = 1) -> "LatticePolynomial":
        """
        Exact partial derivative.

        Args:
            index: 0 for the first variable, 1 for the second
            times: Number of derivatives to take

        Returns:
            The derivative polynomial
        """
        terms: dict[Exponent, Fraction] = {}
        for (i, j), c in self._terms.items():
            k = (i, j)[index]
            if k < times:
                continue
            factor = 1
            for step in range(times):
                factor *= k - step
            e = (i - times, j) if index == 0 else (i, j - times)
            terms[e] = c * factor
        return LatticePolynomial(terms, self.vars)

    def truncate(self, order: int) -> "LatticePolynomial":
        """Drop every term of total degree above ``order``."""
        return LatticePolynomial({e: c for e, c in self._terms.items() if e[0] + e[1] <= order}, self.vars)

    def filter(self, keep: Callable[[Exponent], bool]) -> "LatticePolynomial":
        return LatticePolynomial({e: c for e, c in self._terms.items() if keep(e)}, self.vars)

    def restrict_first(self) -> "LatticePolynomial":
        """Return p(0, x2)."""
        return self.filter(lambda e: e[0] == 0)

    def restrict_second(self) -> "LatticePolynomial":
        """Return p(x1, 0)."""
        return self.filter(lambda e: e[1] == 0)

    def coefficients_in(self, index: int) -> dict[int, "LatticePolynomial"]:
        """Group terms by the power of one variable.

        Returns:
            Mapping k -> polynomial q_k with p = sum_k q_k * var^k, q_k free of that variable
        """
        groups: dict[int, dict[Exponent, Fraction]] = {}
        for (i, j), c in self._terms.items():
            k = (i, j)[index]
            rest = (i, 0) if index == 1 else (0, j)
            groups.setdefault(k, {})[rest] = c
        return {k: LatticePolynomial(t, self.vars) for k, t in groups.items()}

    # -- evaluation ---------------------------------------------------------------------

    def evaluate(self, x1: Rational, x2: Rational) -> Fraction:
        return sum((c * Fraction(x1) ** i * Fraction(x2) ** j for (i, j), c in self._terms.items()), Fraction(0))

    def evaluate_numeric(self, x1: Any, x2: Any) -> npt.NDArray[np.float64]:
        """Evaluate in double precision, broadcasting over numpy arrays."""
        a = np.asarray(x1, dtype=float)
        b = np.asarray(x2, dtype=float)
        total = np.zeros(np.broadcast(a, b).shape)
        for (i, j), c in self._terms.items():
            total = total + float(c) * a**i * b**j
        return total

    def to_sympy(self, x: sympy.Symbol, y: sympy.Symbol) -> sympy.Expr:
        terms = (sympy.Rational(c.numerator, c.denominator) * x**i * y**j for (i, j), c in self._terms.items())
        return sympy.Add(*terms)

    # -- printing and identity ----------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in graded lexicographic order: higher total degree first, then higher first exponent."""
        return sorted(self._terms.items(), key=lambda item: (-(item[0][0] + item[0][1]), -item[0][0]))

    def to_text(self) -> str:
        """Canonical text that ``parse_poly`` reads back to an equal polynomial."""
        if not self._terms:
            return "0"
        parts: list[str] = []
        for (i, j), c in self.sorted_terms():
            factors = [name if k == 1 else f"{name}^{k}" for name, k in zip(self.vars, (i, j)) if k]
            monomial = "*".join(factors)
            magnitude = abs(c)
            if not monomial:
                body = _rational_text(magnitude)
            elif magnitude == 1:
                body = monomial
            else:
                body = f"{_rational_text(magnitude)}*{monomial}"
            if not parts:
                parts.append(f"-{body}" if c < 0 else body)
            else:
                parts.append(f"- {body}" if c < 0 else f"+ {body}")
        return " ".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"LatticePolynomial({self.to_text()!r})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LatticePolynomial.constant(other)
        if not isinstance(other, LatticePolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash


class TruncatedSeries:
    """Power series known exactly through a certified total degree.

    ``valid_order`` is the total degree through which every coefficient is certified. When
    ``exact`` is set the series is a polynomial with no unknown tail and ``valid_order`` is
    ignored for coefficient access.
    """

    __slots__ = ("poly", "valid_order", "exact")

    def __init__(self, poly: LatticePolynomial, valid_order: int | None = None) -> None:
        """
        Initialize the series.

        Args:
            poly: Known part of the series
            valid_order: Certified total degree, or None for an exact polynomial
        """
        self.exact = valid_order is None
        self.valid_order = poly.total_degree() if valid_order is None else valid_order
        self.poly = poly if valid_order is None else poly.truncate(valid_order)

    @classmethod
    def of(cls, value: "TruncatedSeries | LatticePolynomial | Rational") -> "TruncatedSeries":
        if isinstance(value, TruncatedSeries):
            return value
        if isinstance(value, LatticePolynomial):
            return cls(value)
        return cls(LatticePolynomial.constant(value))

    @classmethod
    def variable(cls, index: int, vars: tuple[str, str] = DEFAULT_VARS) -> "TruncatedSeries":
        return cls(LatticePolynomial.variable(index, vars))

    @property
    def vars(self) -> tuple[str, str]:
        return self.poly.vars

    def _bound(self) -> float:
        return float("inf") if self.exact else float(self.valid_order)

    def _low(self) -> float:
        """Total degree of the lowest term that may be non-zero (known part or tail)."""
        order = self.poly.order()
        if order is not None:
            return float(order)
        return float("inf") if self.exact else float(self.valid_order + 1)

    @staticmethod
    def _make(poly: LatticePolynomial, bound: float) -> "TruncatedSeries":
        if bound == float("inf"):
            return TruncatedSeries(poly)
        return TruncatedSeries(poly, int(bound))

    def coefficient(self, i: int, j: int) -> Fraction:
        """
        Return a certified coefficient.

        Raises:
            SeriesOrderError: If i + j lies beyond the certified order
        """
        if not self.exact and i + j > self.valid_order:
            raise SeriesOrderError(
                f"Coefficient of degree {i + j} requested from a series valid only through order {self.valid_order}"
            )
        return self.poly.coefficient(i, j)

    def order(self) -> int | None:
        """Order of vanishing if it is certified, else None (all known coefficients vanish)."""
        return self.poly.order()

    def is_zero_to_order(self) -> bool:
        return self.poly.is_zero()

    def __add__(self, other: "TruncatedSeries | LatticePolynomial | Rational") -> "TruncatedSeries":
        other = TruncatedSeries.of(other)
        return self._make(self.poly + other.poly, min(self._bound(), other._bound()))

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return self._make(-self.poly, self._bound())

    def __sub__(self, other: "TruncatedSeries | LatticePolynomial | Rational") -> "TruncatedSeries":
        return self + (-TruncatedSeries.of(other))

    def __rsub__(self, other: "LatticePolynomial | Rational") -> "TruncatedSeries":
        return (-self) + other

    def mul(self, other: "TruncatedSeries | LatticePolynomial | Rational", cap: int | None = None) -> "TruncatedSeries":
        """Multiply with validity min(v_a + low(b), v_b + low(a)), optionally capped."""
        other = TruncatedSeries.of(other)
        bound = min(self._bound() + other._low(), other._bound() + self._low())
        if cap is not None and bound > cap:
            # an exact product of degree <= cap loses nothing to the cut-off
            fits = bound == float("inf") and self.poly.total_degree() + other.poly.total_degree() <= cap
            bound = bound if fits else float(cap)
        limit = None if bound == float("inf") else int(bound)
        return self._make(self.poly.mul(other.poly, limit), bound)

    def __mul__(self, other: "TruncatedSeries | LatticePolynomial | Rational") -> "TruncatedSeries":
        return self.mul(other)

    __rmul__ = __mul__

    def power(self, exponent: int, cap: int | None = None) -> "TruncatedSeries":
        result = TruncatedSeries.of(LatticePolynomial.constant(1, self.vars))
        for _ in range(exponent):
            result = result.mul(self, cap)
        return result

    def __pow__(self, exponent: int) -> "TruncatedSeries":
        return self.power(exponent)

    def scale(self, factor: Rational) -> "TruncatedSeries":
        return self._make(self.poly.scale(factor), self._bound())

    def diff(self, index: int, times: int = 1) -> "TruncatedSeries":
        """Partial derivative; certified order drops by ``times``."""
        return self._make(self.poly.diff(index, times), self._bound() - times)

    def truncate(self, order: int) -> "TruncatedSeries":
        """Forget everything above ``order``."""
        return TruncatedSeries(self.poly, min(order, int(self._bound())) if not self.exact else order)

    def filter(self, keep: Callable[[Exponent], bool]) -> "TruncatedSeries":
        return self._make(self.poly.filter(keep), self._bound())

    def inverse(self, order: int) -> "TruncatedSeries":
        """
        Multiplicative inverse of a unit through ``order``.

        Raises:
            PreconditionError: If the constant term vanishes
        """
        u0 = self.poly.constant_term()
        if not u0:
            raise PreconditionError("Only series with non-zero constant term can be inverted")
        w = (self - u0).scale(1 / u0)
        result = TruncatedSeries.of(LatticePolynomial.constant(1, self.vars)).truncate(order)
        term = result
        for _ in range(order):
            term = term.mul(-w, order)
            result = result + term
        limit = order if self.exact else min(order, self.valid_order)
        return result.truncate(limit).scale(1 / u0)

    def substitute(
        self,
        x1: "TruncatedSeries | LatticePolynomial | None" = None,
        x2: "TruncatedSeries | LatticePolynomial | None" = None,
        order: int | None = None,
    ) -> "TruncatedSeries":
        """
        Compose: replace the variables by series.

        Args:
            x1: Replacement for the first variable (identity if omitted)
            x2: Replacement for the second variable (identity if omitted)
            order: Optional cut-off for intermediate and final results

        Returns:
            Series with propagated certified order

        Raises:
            PreconditionError: If the series has an unknown tail and a replacement does not vanish at 0
        """
        s1 = TruncatedSeries.of(x1) if x1 is not None else TruncatedSeries.variable(0, self.vars)
        s2 = TruncatedSeries.of(x2) if x2 is not None else TruncatedSeries.variable(1, self.vars)
        vars = s1.vars if x1 is not None else s2.vars
        tail_bound = float("inf")
        if not self.exact:
            low = min(s1._low(), s2._low())
            if low < 1:
                raise PreconditionError("Composition of a truncated series needs replacements vanishing at the origin")
            tail_bound = (self.valid_order + 1) * low - 1
        powers1 = [TruncatedSeries(LatticePolynomial.constant(1, vars))]
        powers2 = [TruncatedSeries(LatticePolynomial.constant(1, vars))]
        for _ in range(self.poly.degree_in(0)):
            powers1.append(powers1[-1].mul(s1, order))
        for _ in range(self.poly.degree_in(1)):
            powers2.append(powers2[-1].mul(s2, order))
        result = TruncatedSeries(LatticePolynomial({}, vars))
        for (i, j), c in self.poly.items():
            result = result + powers1[i].mul(powers2[j], order).scale(c)
        bound = min(result._bound(), tail_bound)
        if order is not None:
            bound = min(bound, float(order))
        return self._make(result.poly, bound)

    def to_text(self) -> str:
        if self.exact:
            return self.poly.to_text()
        return f"{self.poly.to_text()} + O({self.valid_order + 1})"

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.to_text()!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.exact == other.exact and self.valid_order == other.valid_order and self.poly == other.poly

    def __hash__(self) -> int:
        return hash((self.poly, self.valid_order, self.exact))


SeriesLike = TruncatedSeries | LatticePolynomial


def taylor_support(p: SeriesLike) -> frozenset[Exponent]:
    """Exponent pairs with non-zero coefficient."""
    return TruncatedSeries.of(p).poly.support()


def shear_substitute(p: SeriesLike, a: SeriesLike, order: int | None = None) -> TruncatedSeries:
    """
    Rewrite p in the sheared coordinates y1 = x1 - a(x2), y2 = x2.

    Args:
        p: Polynomial or series in (x1, x2)
        a: Series in the second variable only, with a(0) = 0
        order: Optional truncation order for the result

    Returns:
        The series p(y1 + a(y2), y2)

    Raises:
        PreconditionError: If a(0) != 0 or a depends on the first variable
        SeriesOrderError: If the propagated order falls below 1
    """
    shift = TruncatedSeries.of(a)
    if shift.poly.constant_term():
        raise PreconditionError("Shear must vanish at the origin")
    if shift.poly.degree_in(0) > 0:
        raise PreconditionError("Shear must depend on the second variable only")
    series = TruncatedSeries.of(p)
    result = series.substitute(x1=TruncatedSeries.variable(0, series.vars) + shift, order=order)
    if not result.exact and result.valid_order < 1:
        raise SeriesOrderError(f"Shear leaves only order {result.valid_order} certified")
    return result


def solve_implicit(F: SeriesLike, order: int, solve_for: int = 0) -> TruncatedSeries:
    """
    Solve F(u, v) = 0 for u = u(v) with u(0) = 0 by term-by-term coefficient matching.

    Args:
        F: Series in two variables; ``solve_for`` selects which one is u
        order: Target order; the solution satisfies F(u(v), v) = O(v^(order+1))
        solve_for: 0 to solve for the first variable, 1 for the second

    Returns:
        u(v), stored with its exponents in the slot of v. Marked exact when F is a polynomial and
        the residual vanishes identically.

    Raises:
        PreconditionError: If F(0,0) != 0 or the derivative in u vanishes at the origin
        SeriesOrderError: If ``order`` exceeds the certified order of F
    """
    series = TruncatedSeries.of(F)
    if series.poly.constant_term():
        raise PreconditionError("Implicit equation must vanish at the origin")
    slope = series.poly.coefficient(*((1, 0) if solve_for == 0 else (0, 1)))
    if not slope:
        raise PreconditionError("Implicit equation is degenerate: its derivative in the unknown vanishes at the origin")
    if not series.exact and order > series.valid_order:
        raise SeriesOrderError(
            f"Requested order {order} exceeds the certified order {series.valid_order} of the equation"
        )

    vars = series.vars
    identity = TruncatedSeries.variable(1 - solve_for, vars)

    def residual(u: TruncatedSeries, cap: int | None) -> TruncatedSeries:
        if solve_for == 0:
            return series.substitute(x1=u, x2=identity, order=cap)
        return series.substitute(x1=identity, x2=u, order=cap)

    # Iteration k fixes the degree-k coefficient; lower ones of the residual already vanish.
    u = LatticePolynomial({}, vars)
    for k in range(1, order + 1):
        r = residual(TruncatedSeries(u), k)
        u = u - r.poly.truncate(k).scale(1 / slope)
    check = residual(TruncatedSeries(u), order)
    if not check.poly.is_zero():
        raise PreconditionError(f"Implicit solution residual does not vanish through order {order}: {check}")
    if series.exact and residual(TruncatedSeries(u), None).poly.is_zero():
        logger.debug("implicit solution is a polynomial: %s", u)
        return TruncatedSeries(u)
    return TruncatedSeries(u, order)


class _Parser:
    """Precedence-climbing parser over the expression grammar.

    Values are ``TruncatedSeries``; in exact mode only constant divisors are accepted.
    """

    BINARY = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
    ALIASES = {"x1": 0, "x": 0, "x2": 1, "y": 1}

    def __init__(self, text: str, order: int | None) -> None:
        self.text = text
        self.order = order
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _offset(self, index: int) -> int:
        return len(self.text[:index].encode())

    def _tokenize(self, text: str) -> list[tuple[str, str, int]]:
        tokens: list[tuple[str, str, int]] = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                start = i
                while i < len(text) and text[i].isdigit():
                    i += 1
                tokens.append(("num", text[start:i], start))
            elif ch.isalpha() or ch == "_":
                start = i
                while i < len(text) and (text[i].isalnum() or text[i] == "_"):
                    i += 1
                tokens.append(("ident", text[start:i], start))
            elif ch in "+-*/^()":
                tokens.append(("op", ch, i))
                i += 1
            else:
                raise ExpressionSyntaxError(f"Unexpected character {ch!r}", self._offset(i))
        tokens.append(("end", "", len(text)))
        return tokens

    def _peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def _advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def parse(self) -> TruncatedSeries:
        value = self._climb(1)
        kind, text, index = self._peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"Unexpected token {text!r}", self._offset(index))
        return value

    def _climb(self, min_prec: int) -> TruncatedSeries:
        left = self._unary()
        while True:
            kind, text, index = self._peek()
            if kind == "op" and text in self.BINARY:
                op, explicit = text, True
            elif kind == "ident" or (kind == "op" and text == "("):
                op, explicit = "*", False  # implicit product
            else:
                return left
            prec = self.BINARY[op]
            if prec < min_prec:
                return left
            if explicit:
                self._advance()
            if op == "^":
                left = self._power(left)
                continue
            right = self._climb(prec + 1)
            left = self._apply(op, left, right, index)

    def _power(self, base: TruncatedSeries) -> TruncatedSeries:
        start = self._peek()[2]
        exponent = self._unary_operand()
        if self._peek()[1] == "^":
            raise ExpressionSyntaxError("Chained exponent, use parentheses", self._offset(self._peek()[2]))
        if not exponent.exact or not exponent.poly.is_constant():
            raise ExpressionSyntaxError("Exponent must be an integer literal", self._offset(start))
        value = exponent.poly.constant_term()
        if value < 0:
            raise ExpressionSyntaxError("Negative exponent", self._offset(start))
        if value.denominator != 1:
            raise ExpressionSyntaxError("Fractional exponent", self._offset(start))
        return base.power(int(value), self.order)

    def _unary_operand(self) -> TruncatedSeries:
        kind, text, _ = self._peek()
        if kind == "op" and text in "+-":
            self._advance()
            operand = self._unary_operand()
            return -operand if text == "-" else operand
        return self._atom()

    def _unary(self) -> TruncatedSeries:
        kind, text, _ = self._peek()
        if kind == "op" and text in "+-":
            self._advance()
            operand = self._climb(3)
            return -operand if text == "-" else operand
        return self._atom()

    def _atom(self) -> TruncatedSeries:
        kind, text, index = self._advance()
        if kind == "num":
            return TruncatedSeries.of(int(text))
        if kind == "ident":
            if text not in self.ALIASES:
                raise ExpressionSyntaxError(f"Unknown identifier {text!r}", self._offset(index))
            return TruncatedSeries.variable(self.ALIASES[text])
        if kind == "op" and text == "(":
            value = self._climb(1)
            closing = self._advance()
            if closing[1] != ")":
                raise ExpressionSyntaxError("Expected ')'", self._offset(closing[2]))
            return value
        if kind == "end":
            raise ExpressionSyntaxError("Unexpected end of expression", self._offset(index))
        raise ExpressionSyntaxError(f"Unexpected token {text!r}", self._offset(index))

    def _apply(self, op: str, left: TruncatedSeries, right: TruncatedSeries, index: int) -> TruncatedSeries:
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left.mul(right, self.order)
        if right.poly.is_zero():
            raise ExpressionSyntaxError("Division by zero", self._offset(index))
        if right.exact and right.poly.is_constant():
            return left.scale(1 / right.poly.constant_term())
        if self.order is None:
            raise ExpressionSyntaxError("Division by a non-constant expression", self._offset(index))
        if not right.poly.constant_term():
            raise ExpressionSyntaxError("Division by an expression vanishing at the origin", self._offset(index))
        return left.mul(right.inverse(self.order), self.order)


def parse_poly(text: str) -> LatticePolynomial:
    """
    Parse an exact polynomial.

    Args:
        text: Expression over x1, x2 (aliases x, y) with rational literals and + - * / ^

    Returns:
        The polynomial

    Raises:
        ExpressionSyntaxError: On any syntax error, unknown identifier, bad exponent or non-constant divisor
    """
    return _Parser(text, None).parse().poly


def parse_series(text: str, order: int) -> TruncatedSeries:
    """
    Parse an expression that may divide by units, expanding it through ``order``.

    Raises:
        ExpressionSyntaxError: As ``parse_poly``, except that unit divisors are accepted
    """
    value = _Parser(text, order).parse()
    if value.exact and value.poly.total_degree() <= order:
        return value
    return value.truncate(order)
