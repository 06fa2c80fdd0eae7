"""Newton polyhedra of bivariate supports and their edge/weight calculus.

Vertices are listed as (B, A) pairs with B strictly decreasing and A strictly increasing, so
vertex 0 is the point on (or nearest to) the horizontal axis. Edge l joins vertex l-1 (its
right endpoint) with vertex l (its left endpoint).
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction

from singscope.errors import EdgeError, GeometryError, KeyInequalityError, SeriesOrderError
from singscope.poly import LatticePolynomial, SeriesLike, TruncatedSeries

logger = logging.getLogger(__name__)

Point = tuple[Fraction, Fraction]


def as_point(t: Iterable[Fraction | int]) -> Point:
    t1, t2 = t
    return (Fraction(t1), Fraction(t2))


@dataclass(frozen=True)
class Weight:
    """Weight (k1, k2) of a supporting line k1*t1 + k2*t2 = 1."""

    k1: Fraction
    k2: Fraction

    @property
    def slope(self) -> Fraction | None:
        """Modulus k1/k2 of the slope; None stands for a vertical line."""
        if self.k2 == 0:
            return None
        return self.k1 / self.k2

    def degree(self, t: tuple[Fraction | int, Fraction | int]) -> Fraction:
        return self.k1 * t[0] + self.k2 * t[1]


def slope_less(a: Fraction | None, b: Fraction | None) -> bool:
    """Compare slopes where None is the vertical slope (larger than any rational)."""
    if a is None:
        return False
    if b is None:
        return True
    return a < b


def supporting_weight(right: Point, left: Point) -> Weight:
    """
    Weight of the line through two vertices.

    Args:
        right: Endpoint with the larger B
        left: Endpoint with the smaller B

    Returns:
        The weight (k1, k2) with both points at weighted degree 1
    """
    (b_r, a_r), (b_l, a_l) = right, left
    det = b_r * a_l - b_l * a_r
    if det <= 0 or b_r <= b_l or a_l <= a_r:
        raise GeometryError(f"Points {right} and {left} are not consecutive Newton vertices")
    return Weight((a_l - a_r) / det, (b_r - b_l) / det)


@dataclass(frozen=True)
class Edge:
    """Compact edge between two consecutive vertices."""

    right: Point
    left: Point
    weight: Weight

    @property
    def slope(self) -> Fraction:
        return (self.left[1] - self.right[1]) / (self.right[0] - self.left[0])


@dataclass(frozen=True)
class NewtonPolyhedron:
    """Newton polyhedron described by its vertices and compact edges."""

    vertices: tuple[Point, ...]
    edges: tuple[Edge, ...]

    @property
    def slopes(self) -> list[Fraction]:
        return [edge.slope for edge in self.edges]

    def vertex(self, index: int) -> Point:
        return self.vertices[index]

    def contains(self, t: tuple[Fraction | int, Fraction | int]) -> bool:
        """Whether a point lies in the polyhedron."""
        if t[0] < self.vertices[-1][0] or t[1] < self.vertices[0][1]:
            return False
        return all(edge.weight.degree(t) >= 1 for edge in self.edges)

    def edge_from(self, vertex: Point) -> Weight:
        """
        Weight of the first non-horizontal edge leaving ``vertex`` towards the t2-axis.

        Returns the compact edge's weight, or the vertical ray's weight (1/B, 0) when the
        vertex is the last one.

        Raises:
            EdgeError: If ``vertex`` is not a vertex or the vertical ray lies on the t2-axis
        """
        vertex = as_point(vertex)
        if vertex not in self.vertices:
            raise EdgeError(f"{vertex} is not a vertex of the Newton polyhedron {list(self.vertices)}")
        index = self.vertices.index(vertex)
        if index < len(self.edges):
            return self.edges[index].weight
        if vertex[0] == 0:
            raise EdgeError(f"Vertex {vertex} lies on the t2-axis; no non-horizontal edge leaves it")
        return Weight(1 / vertex[0], Fraction(0))

    def __str__(self) -> str:
        return " -- ".join(f"({b}, {a})" for b, a in self.vertices)


def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def newton_polyhedron(support: Iterable[tuple[Fraction | int, Fraction | int]]) -> NewtonPolyhedron:
    """
    Build the Newton polyhedron of a finite set of (rational) points.

    Args:
        support: Non-empty set of points with non-negative coordinates

    Returns:
        Polyhedron with the minimal vertex list of the lower-left staircase hull

    Raises:
        GeometryError: If the support is empty
    """
    lowest: dict[Fraction, Fraction] = {}
    for t in support:
        t1, t2 = as_point(t)
        if t1 not in lowest or t2 < lowest[t1]:
            lowest[t1] = t2
    if not lowest:
        raise GeometryError("Newton polyhedron of an empty support")

    staircase: list[Point] = []
    for t1 in sorted(lowest):
        t2 = lowest[t1]
        if not staircase or t2 < staircase[-1][1]:
            staircase.append((t1, t2))

    hull: list[Point] = []
    for p in staircase:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)

    vertices = tuple(reversed(hull))
    edges = tuple(
        Edge(right, left, supporting_weight(right, left)) for right, left in zip(vertices, vertices[1:])
    )
    return NewtonPolyhedron(vertices, edges)


def newton_polyhedron_of(p: SeriesLike) -> NewtonPolyhedron:
    """Newton polyhedron of the known Taylor support of a polynomial or series."""
    return newton_polyhedron(TruncatedSeries.of(p).poly.support())


def newton_distance(polyhedron: NewtonPolyhedron) -> Fraction:
    """
    Coordinate d such that (d, d) lies on the boundary of the polyhedron.

    Args:
        polyhedron: Newton polyhedron

    Returns:
        The Newton distance
    """
    for b, a in polyhedron.vertices:
        if a == b:
            return b
    for edge in polyhedron.edges:
        (b_r, a_r), (b_l, a_l) = edge.right, edge.left
        if b_r > a_r and b_l < a_l:
            return 1 / (edge.weight.k1 + edge.weight.k2)
    last_b, last_a = polyhedron.vertices[-1]
    if last_b > last_a:
        return last_b
    return polyhedron.vertices[0][1]


def principal_part(p: SeriesLike, kappa: Weight) -> LatticePolynomial:
    """
    Terms of minimal kappa-degree.

    Args:
        p: Polynomial or truncated series
        kappa: Weight with k1 > 0 and k2 >= 0

    Returns:
        The kappa-principal part

    Raises:
        GeometryError: If p is zero or the weight is invalid
        SeriesOrderError: If the unknown tail of a series could still contribute
    """
    if kappa.k1 <= 0 or kappa.k2 < 0:
        raise GeometryError(f"Invalid weight ({kappa.k1}, {kappa.k2})")
    series = TruncatedSeries.of(p)
    if series.poly.is_zero():
        raise GeometryError("Principal part of the zero polynomial")
    minimal = min(kappa.degree(e) for e in series.poly.support())
    if not series.exact:
        tail = min(kappa.k1, kappa.k2) * (series.valid_order + 1)
        if tail <= minimal:
            raise SeriesOrderError(
                f"Order {series.valid_order} is too small to certify the principal part "
                f"of weight ({kappa.k1}, {kappa.k2})",
                module="newton-geometry",
            )
    return series.poly.filter(lambda e: kappa.degree(e) == minimal)


def n_kappa(kappa: Weight, point: tuple[Fraction | int, Fraction | int]) -> Fraction:
    """
    The quantity (A-1)/a + B + 2 for a point (B, A) on the line of weight kappa.

    It equals (1 - k2)/k1 + 2; for a vertical line (k2 = 0) it is B + 2.

    Raises:
        GeometryError: If the point is not on the line
    """
    b, a = as_point(point)
    if kappa.degree((b, a)) != 1:
        raise GeometryError(f"Point ({b}, {a}) is not on the line of weight ({kappa.k1}, {kappa.k2})")
    slope = kappa.slope
    if slope is None:
        return b + 2
    value = (a - 1) / slope + b + 2
    closed_form = (1 - kappa.k2) / kappa.k1 + 2
    if value != closed_form:  # pragma: no cover
        raise AssertionError(f"n_kappa formulas disagree: {value} != {closed_form}")
    return value


@dataclass(frozen=True)
class KeyInequality:
    """Outcome of the key inequality along all compact edges."""

    holds: bool
    n_values: tuple[Fraction, ...]
    margins: tuple[Fraction, ...]


def key_inequality_holds(polyhedron: NewtonPolyhedron) -> KeyInequality:
    """
    Check that n_kappa_l, evaluated at each edge's left vertex, never exceeds its value on edge 1.

    Raises:
        KeyInequalityError: If A_1 < 1
    """
    if not polyhedron.edges:
        return KeyInequality(True, (), ())
    a_1 = polyhedron.vertices[1][1]
    if a_1 < 1:
        raise KeyInequalityError(f"Key inequality needs A_1 >= 1, got A_1 = {a_1}")
    values = tuple(n_kappa(edge.weight, edge.left) for edge in polyhedron.edges)
    margins = tuple(values[0] - v for v in values)
    holds = all(later <= earlier for earlier, later in zip(values, values[1:]))
    logger.debug("key inequality on %s: %s", polyhedron, values)
    return KeyInequality(holds, values, margins)
