"""Named model families with their expected invariants.

Each family turns a few integer parameters into expression text that ``parse_series`` reads,
together with the exact invariants ``classify`` must report for it.
"""

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from fractions import Fraction

from singscope.classify import THREE_HALVES, Interval, SingularityClass, exponent_of, height
from singscope.errors import InputError


@dataclass(frozen=True)
class Expectation:
    """Invariants a family instance is known to have."""

    singularity_class: SingularityClass
    n: int
    h: Fraction
    p_c: Fraction | Interval
    n_e: Fraction | None = None
    n_e_x: Fraction | None = None
    p_e: Fraction | None = None
    m: int | None = None


@dataclass(frozen=True)
class FamilyInstance:
    family: str
    parameters: dict[str, int]
    expression: str
    expected: Expectation

    @property
    def label(self) -> str:
        values = ",".join(f"{key}={value}" for key, value in self.parameters.items())
        return f"@{self.family}:{values}"


@dataclass(frozen=True)
class Family:
    """
    A named model family.

    Attributes:
        name: Identifier used after ``@`` on the command line
        template: Human readable form of the expression
        defaults: Parameter names with their default values
        build: Expression text builder
        expect: Expected invariants
        check: Parameter validation; returns an error message or None
        note: One-line description
    """

    name: str
    template: str
    defaults: dict[str, int]
    build: Callable[..., str]
    expect: Callable[..., Expectation]
    check: Callable[..., str | None]
    note: str = ""

    def instance(self, **values: int) -> FamilyInstance:
        """
        Instantiate the family.

        Raises:
            InputError: If a parameter is unknown or out of range
        """
        unknown = sorted(set(values) - set(self.defaults))
        if unknown:
            raise InputError(f"Unknown parameter(s) {', '.join(unknown)} for family '{self.name}'")
        parameters = {**self.defaults, **values}
        problem = self.check(**parameters)
        if problem is not None:
            raise InputError(f"Family '{self.name}': {problem}")
        return FamilyInstance(self.name, parameters, self.build(**parameters), self.expect(**parameters))


def _plus(n: int, n_e: Fraction, n_e_x: Fraction | None = None) -> Expectation:
    p_e = exponent_of(n_e)
    return Expectation(
        SingularityClass.A_PLUS_GENERIC, n, height(n), max(THREE_HALVES, p_e), n_e, n_e_x or n_e, p_e
    )


def _exceptional(n: int, n_e: Fraction) -> Expectation:
    p_e = exponent_of(n_e)
    p_c = Interval(max(THREE_HALVES, p_e), max(THREE_HALVES, exponent_of(n)))
    return Expectation(SingularityClass.A_E, n, height(n), p_c, n_e, n_e, p_e)


def _pure(n: int) -> Expectation:
    if n == 3:
        return Expectation(SingularityClass.A_PLUS_GENERIC, n, height(n), THREE_HALVES)
    return _plus(n, Fraction(n))


def _shifted_parabola(n: int) -> Expectation:
    h = height(n)
    return Expectation(SingularityClass.A_MINUS, n, h, max(THREE_HALVES, h), m=2)


def _perturbed(n: int, alpha: int, beta: int) -> Expectation:
    if 1 <= alpha < n:
        n_e = Fraction(n * (beta + 1) + alpha, beta + 2)
    else:
        n_e = Fraction(n)
    if alpha == 1:
        return _exceptional(n, n_e)
    return _plus(n, n_e)


def _at_least(**bounds: tuple[int, int]) -> str | None:
    for name, (value, lower) in bounds.items():
        if value < lower:
            return f"{name} must be at least {lower}, got {value}"
    return None


def _square_check(n: int) -> str | None:
    if n % 2:
        return f"n must be even, got {n}"
    return _at_least(n=(n, 4))


FAMILIES: dict[str, Family] = {
    entry.name: entry
    for entry in (
        Family(
            "pure",
            "x2^2 + x1^n",
            {"n": 4},
            lambda n: f"x2^2 + x1^{n}",
            _pure,
            lambda n: _at_least(n=(n, 3)),
            "model A+ singularity; h = 2n/(n+2), n_e = n",
        ),
        Family(
            "shifted_parabola",
            "(x2 - x1^2)^2 + x1^n",
            {"n": 5},
            lambda n: f"(x2 - x1^2)^2 + x1^{n}",
            _shifted_parabola,
            lambda n: _at_least(n=(n, 4)),
            "A- with m = 2; coordinates not adapted",
        ),
        Family(
            "curved_line",
            "x2^2 + (x1 + x2^l)^n",
            {"n": 4, "l": 2},
            lambda n, l: f"x2^2 + (x1 + x2^{l})^{n}",
            lambda n, l: _plus(n, Fraction(n), n - Fraction(1, l)),
            lambda n, l: _at_least(n=(n, 4), l=(l, 2)),
            "not line-adapted; n_e^x = n - 1/l but n_e = n",
        ),
        Family(
            "perturbed_coefficient",
            "(1 + x1^alpha*x2^beta)*x2^2 + x1^n",
            {"n": 5, "alpha": 2, "beta": 0},
            lambda n, alpha, beta: f"(1 + x1^{alpha}*x2^{beta})*x2^2 + x1^{n}",
            _perturbed,
            lambda n, alpha, beta: _at_least(n=(n, 4), alpha=(alpha, 0), beta=(beta, 0)),
            "line-adapted; n_e = (n(beta+1)+alpha)/(beta+2) < n for 1 <= alpha < n; A^e iff alpha = 1",
        ),
        Family(
            "unit_denominator",
            "x2^2/(1 - x1) + x1^n",
            {"n": 5},
            lambda n: f"x2^2/(1 - x1) + x1^{n}",
            lambda n: _exceptional(n, Fraction(n + 1, 2)),
            lambda n: _at_least(n=(n, 4)),
            "series input of type A^e; n_e = (n+1)/2",
        ),
        Family(
            "unit_denominator_square",
            "x2^2/(1 - x1^2) + x1^n",
            {"n": 4},
            lambda n: f"x2^2/(1 - x1^2) + x1^{n}",
            lambda n: _plus(n, Fraction(n + 2, 2)),
            _square_check,
            "convex for even n; n_e = (n+2)/2 with p_e < 2n/(n+1)",
        ),
    )
}


def family(name: str) -> Family:
    """
    Raises:
        InputError: If no family has this name
    """
    try:
        return FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(FAMILIES))
        raise InputError(f"Unknown family '{name}' (known: {known})") from None


def _parse_values(text: str) -> Mapping[str, int]:
    values: dict[str, int] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise InputError(f"Expected key=value, got '{item}'")
        try:
            values[key.strip()] = int(raw)
        except ValueError:
            raise InputError(f"Parameter '{key.strip()}' needs an integer, got '{raw.strip()}'") from None
    return values


def resolve_family(reference: str) -> FamilyInstance:
    """
    Instantiate a family from ``@name`` or ``@name:key=value,...``.

    Raises:
        InputError: If the reference is malformed, names an unknown family or a bad parameter
    """
    if not reference.startswith("@"):
        raise InputError(f"Family references start with '@', got '{reference}'")
    name, _, values = reference[1:].partition(":")
    return family(name.strip()).instance(**_parse_values(values))


def render_catalog() -> str:
    lines: list[str] = []
    for entry in FAMILIES.values():
        defaults = ",".join(f"{key}={value}" for key, value in entry.defaults.items())
        lines.append(f"@{entry.name:<24} {entry.template:<38} defaults {defaults}")
        lines.append(f"  {entry.note}")
    return "\n".join(lines)
