"""Numeric reproduction of the necessary-condition exponents and the oscillatory decay rates.

Measures are computed column by column: for each x1 on a midpoint grid the set of x2 with
|phi(x1, x2) - level| <= delta is read off from the real roots of phi - level -+ delta, so its
length is exact up to rounding and tiny deltas stay resolvable on a modest grid. Oscillatory
integrals use Gauss-Legendre panels short enough for the phase to turn by at most pi on each.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

import numpy as np
import numpy.typing as npt
from numpy.polynomial.legendre import leggauss
from scipy.stats import linregress

from singscope.classify import ClassificationReport, classify
from singscope.errors import (
    EmptyDomainError,
    FiniteTypeError,
    FitInconclusiveError,
    PreconditionError,
    QuadratureError,
)
from singscope.newton import NewtonPolyhedron
from singscope.poly import LatticePolynomial, SeriesLike, TruncatedSeries

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

MIN_POINTS = 6
NOISE_FLOOR = 1e-12
GRADIENT_BOUND = 0.1
PANEL_CHUNK = 1 << 15


class Verdict(StrEnum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


class Mode(StrEnum):
    EQUAL = "equal"
    AT_MOST = "at_most"


@dataclass(frozen=True)
class FitResult:
    """Least-squares slope of log2(value) against log2(delta) or log2(lambda)."""

    kind: str
    exponent_hat: float
    stderr: float
    x_range: tuple[float, float]
    points: tuple[tuple[float, float], ...]
    predicted: Fraction
    tolerance: float
    mode: Mode = Mode.EQUAL
    threshold: float | None = None
    threshold_predicted: Fraction | None = None
    notes: tuple[str, ...] = ()

    @property
    def verdict(self) -> Verdict:
        if self.stderr > self.tolerance:
            return Verdict.INCONCLUSIVE
        if self.mode == Mode.AT_MOST:
            ok = self.exponent_hat <= float(self.predicted) + self.tolerance
        else:
            ok = abs(self.exponent_hat - float(self.predicted)) <= self.tolerance
        return Verdict.PASS if ok else Verdict.FAIL


def dyadic_range(lower: float, upper: float, points: int) -> list[float]:
    """``points`` values equally spaced in log2 between lower and upper."""
    if points < 2 or lower <= 0 or upper <= lower:
        raise PreconditionError(f"Invalid sweep [{lower}, {upper}] with {points} points")
    return [float(v) for v in np.exp2(np.linspace(math.log2(lower), math.log2(upper), points))]


def fit_exponent(xs: Sequence[float], values: Sequence[float]) -> tuple[float, float, tuple[tuple[float, float], ...]]:
    """
    Ordinary least squares of log2(values) on log2(xs).

    Returns:
        (slope, standard error of the slope, fitted points)

    Raises:
        FitInconclusiveError: With fewer than six points or a non-positive value
    """
    if len(xs) < MIN_POINTS:
        raise FitInconclusiveError(f"Need at least {MIN_POINTS} points for a fit, got {len(xs)}")
    if any(v <= 0 for v in values):
        raise FitInconclusiveError("Cannot fit a vanishing measure or integral on a log scale")
    log_x = np.log2(np.asarray(xs, dtype=float))
    log_y = np.log2(np.asarray(values, dtype=float))
    result = linregress(log_x, log_y)
    points = tuple((float(a), float(b)) for a, b in zip(log_x, log_y))
    return float(result.slope), float(result.stderr), points


# -- measures ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Half-widths of the box T centred at (z1, z2, z3)."""

    d1: float
    d2: float
    d3: float

    @property
    def volume(self) -> float:
        return 8 * self.d1 * self.d2 * self.d3


def _polynomial(phi: SeriesLike) -> LatticePolynomial:
    return TruncatedSeries.of(phi).poly


def _roots_real_parts(q: FloatArray) -> FloatArray:
    """Real parts of the roots of each row's polynomial (ascending coefficients), padded with NaN."""
    rows, width = q.shape
    degree = width - 1
    out = np.full((rows, degree), np.nan)
    lead = q[:, -1]
    scale = np.max(np.abs(q), axis=1)
    regular = np.abs(lead) > 1e-14 * np.where(scale > 0, scale, 1.0)
    if degree >= 1 and np.any(regular):
        block = q[regular]
        companion = np.zeros((block.shape[0], degree, degree))
        companion[:, 0, :] = -block[:, -2::-1] / block[:, -1:]
        if degree > 1:
            companion[:, np.arange(1, degree), np.arange(degree - 1)] = 1.0
        out[regular] = np.linalg.eigvals(companion).real
    for row in np.nonzero(~regular)[0]:
        roots = np.roots(q[row, ::-1])
        out[row, : len(roots)] = roots.real
    return out


def _column_lengths(coefficients: FloatArray, level: float, d3: float, w_lo: float, w_hi: float) -> FloatArray:
    """Length of {x2 in [w_lo, w_hi] : |g(x2)| <= d3} per column, g having the given coefficients minus level."""
    g = coefficients.copy()
    g[:, 0] -= level
    columns: list[FloatArray] = [np.full((g.shape[0], 1), w_lo), np.full((g.shape[0], 1), w_hi)]
    if g.shape[1] > 1:
        for shift in (d3, -d3):
            q = g.copy()
            q[:, 0] -= shift
            columns.append(_roots_real_parts(q))
    breaks = np.concatenate(columns, axis=1)
    breaks = np.where(np.isnan(breaks), w_lo, breaks)
    breaks = np.sort(np.clip(breaks, w_lo, w_hi), axis=1)
    mids = (breaks[:, 1:] + breaks[:, :-1]) / 2
    values = np.zeros_like(mids)
    for k in range(g.shape[1] - 1, -1, -1):
        values = values * mids + g[:, k : k + 1]
    inside = np.abs(values) <= d3
    return np.sum(np.diff(breaks, axis=1) * inside, axis=1)


def intersection_measure(
    phi: SeriesLike,
    box: Box,
    center: tuple[float, float],
    z3: float,
    grid: int = 256,
    epsilon: float = 0.25,
) -> float:
    """
    Area of {x' in [-eps, eps]^2 : |x1 - z1| <= d1, |x2 - z2| <= d2, |1 + phi(x') - z3| <= d3}.

    A first pass on ``grid`` columns locates the x1-range where the slice is non-empty; a second
    pass integrates over that range on ``grid`` fresh columns.

    Returns:
        The area, 0.0 for an empty intersection
    """
    if grid < 64:
        raise PreconditionError(f"Grid must have at least 64 columns, got {grid}")
    poly = _polynomial(phi)
    z1, z2 = center
    x_lo, x_hi = max(-epsilon, z1 - box.d1), min(epsilon, z1 + box.d1)
    w_lo, w_hi = max(-epsilon, z2 - box.d2), min(epsilon, z2 + box.d2)
    if x_lo >= x_hi or w_lo >= w_hi:
        return 0.0
    by_power = poly.coefficients_in(1)
    degree = max(by_power, default=0)
    level = z3 - 1

    def columns(lo: float, hi: float) -> tuple[float, FloatArray]:
        h = (hi - lo) / grid
        x = lo + h * (np.arange(grid) + 0.5)
        coefficients = np.zeros((grid, degree + 1))
        for k, q in by_power.items():
            coefficients[:, k] = q.evaluate_numeric(x, 0.0)
        return h, _column_lengths(coefficients, level, box.d3, w_lo, w_hi)

    h, lengths = columns(x_lo, x_hi)
    active = np.nonzero(lengths > 0)[0]
    if active.size == 0:
        return 0.0
    lo = max(x_lo, x_lo + (int(active[0]) - 1) * h)
    hi = min(x_hi, x_lo + (int(active[-1]) + 2) * h)
    h, lengths = columns(lo, hi)
    return float(h * np.sum(lengths))


def gradient_bound_holds(phi: SeriesLike, epsilon: float = 0.25, samples: int = 65) -> bool:
    """Whether |grad phi| <= 1/10 on a sample grid of [-eps, eps]^2."""
    poly = _polynomial(phi)
    axis = np.linspace(-epsilon, epsilon, samples)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    norm = np.hypot(poly.diff(0).evaluate_numeric(x1, x2), poly.diff(1).evaluate_numeric(x1, x2))
    return bool(np.max(norm) <= GRADIENT_BOUND)


def _gradient_note(phi: SeriesLike, epsilon: float) -> str:
    if gradient_bound_holds(phi, epsilon):
        return f"|grad phi| <= 1/10 on the eps={epsilon} square"
    return f"|grad phi| exceeds 1/10 somewhere on the eps={epsilon} square"


def _classification(phi: SeriesLike, report: ClassificationReport | None, order: int | None) -> ClassificationReport:
    if report is not None:
        return report
    series = TruncatedSeries.of(phi)
    return classify(series, order or 4 * max(series.poly.total_degree(), 2))


def sublevel_exponent(
    phi: SeriesLike,
    deltas: Sequence[float],
    grid: int = 256,
    tolerance: float = 0.05,
    epsilon: float = 0.25,
    report: ClassificationReport | None = None,
    order: int | None = None,
) -> FitResult:
    """
    Fit the exponent of delta -> |{x' : |phi(x')| < delta}|.

    The prediction is 1/h = 1/2 + 1/n, or 1/2 when b_0 vanishes to the working order.
    """
    try:
        predicted = 1 / _classification(phi, report, order).h
    except FiniteTypeError:
        predicted = Fraction(1, 2)
    values = [intersection_measure(phi, Box(1.0, 1.0, d), (0.0, 0.0), 1.0, grid, epsilon) for d in deltas]
    slope, stderr, points = fit_exponent(deltas, values)
    logger.debug("sublevel exponent %.4f +- %.4f (predicted %s)", slope, stderr, predicted)
    return FitResult(
        "sublevel",
        slope,
        stderr,
        (min(deltas), max(deltas)),
        points,
        predicted,
        tolerance,
        notes=(_gradient_note(phi, epsilon),),
    )


def _box_sweep(
    phi: SeriesLike,
    k: int,
    deltas: Sequence[float],
    grid: int,
    epsilon: float,
    report: ClassificationReport,
    zgrid: int,
) -> list[tuple[float, FloatArray, float]]:
    """Per delta: (area of the z'-range, measures over the z'-sample, |T|)."""
    poly = _polynomial(phi)
    half = epsilon / 2
    out: list[tuple[float, FloatArray, float]] = []
    if k == 0:
        axis = np.linspace(-half, half, zgrid)
        centers = [(float(a), float(b)) for a in axis for b in axis]
        levels = [1.0 + float(poly.evaluate_numeric(a, b)) for a, b in centers]
        for d in deltas:
            box = Box(d, d, d)
            measures = np.array([intersection_measure(phi, box, c, z, grid, epsilon) for c, z in zip(centers, levels)])
            out.append(((2 * half) ** 2, measures, box.volume))
    elif k == 2:
        for d in deltas:
            box = Box(1.0, 1.0, d)
            measure = intersection_measure(phi, box, (0.0, 0.0), 1.0, grid, epsilon)
            out.append(((2 * half) ** 2, np.array([measure]), box.volume))
    else:
        if report.kappa_e is None or report.adaptation is None:
            raise PreconditionError("The k=1 family needs line-adapted data of an A+ phase")
        kappa = report.kappa_e
        alpha = report.adaptation.alpha.poly
        for d in deltas:
            reach = half * d ** float(kappa.k2)
            z2 = np.linspace(-reach, reach, zgrid)
            z1 = alpha.evaluate_numeric(0.0, z2)
            levels = 1.0 + poly.evaluate_numeric(z1, z2)
            box = Box(1.0, d ** float(1 - kappa.k2), d)
            measures = np.array(
                [intersection_measure(phi, box, (0.0, float(b)), float(z), grid, epsilon) for b, z in zip(z2, levels)]
            )
            out.append((2 * half * 2 * reach, measures, box.volume))
    return out


def _box_exponent(sweep: list[tuple[float, FloatArray, float]], p: float) -> list[float]:
    return [area * float(np.mean(measures**p)) / volume for area, measures, volume in sweep]


def box_family_exponent(
    phi: SeriesLike,
    k: int,
    p: Fraction,
    deltas: Sequence[float],
    grid: int = 256,
    tolerance: float = 0.1,
    epsilon: float = 0.25,
    report: ClassificationReport | None = None,
    order: int | None = None,
    zgrid: int = 8,
) -> FitResult:
    """
    Fit the exponent of delta -> int |T_delta(z') cap S|^p dz' / |T_delta|.

    k=0 uses delta-cubes centred on the surface (predicted 2p - 3), k=2 the slab (1, 1, delta)
    at height 1 (predicted p/h - 1) and k=1 the boxes (1, delta^(1-k2), delta) centred on the
    line-adapted curve with |z2| <= delta^k2 (predicted (k1 + 1 - k2) p - 2 (1 - k2)). The zero
    crossing in p is estimated from the fits at p and p + 1/4.

    Raises:
        PreconditionError: For an unknown k, or k=1 without line-adapted data
    """
    if k not in (0, 1, 2):
        raise PreconditionError(f"Box family k must be 0, 1 or 2, got {k}")
    p = Fraction(p)
    report = _classification(phi, report, order)
    if k == 0:
        predicted, necessary = 2 * p - 3, Fraction(3, 2)
    elif k == 2:
        predicted, necessary = p / report.h - 1, report.h
    else:
        if report.kappa_e is None or report.p_e is None:
            raise PreconditionError("The k=1 family needs line-adapted data of an A+ phase")
        k1, k2 = report.kappa_e.k1, report.kappa_e.k2
        predicted, necessary = (k1 + 1 - k2) * p - 2 * (1 - k2), report.p_e

    sweep = _box_sweep(phi, k, deltas, grid, epsilon, report, zgrid)
    slope, stderr, points = fit_exponent(deltas, _box_exponent(sweep, float(p)))
    step = 0.25
    slope_next, _, _ = fit_exponent(deltas, _box_exponent(sweep, float(p) + step))
    threshold = None if slope_next == slope else float(p) - slope * step / (slope_next - slope)
    logger.debug("box family k=%d at p=%s: exponent %.4f, zero crossing %s", k, p, slope, threshold)
    return FitResult(
        f"box_k{k}",
        slope,
        stderr,
        (min(deltas), max(deltas)),
        points,
        predicted,
        tolerance,
        threshold=threshold,
        threshold_predicted=necessary,
        notes=(_gradient_note(phi, epsilon), f"p={p}"),
    )


# -- oscillatory integrals --------------------------------------------------------------


def oscillatory_integral(
    phase: Callable[[FloatArray], FloatArray],
    amplitude: Callable[[FloatArray], FloatArray],
    lo: float,
    hi: float,
    frequency: float,
    nodes: int = 16,
    max_doublings: int = 6,
    rtol: float = 1e-9,
    atol: float = 1e-14,
) -> complex:
    """
    Integral of exp(i phase(x)) amplitude(x) over [lo, hi].

    Args:
        frequency: Upper bound for |phase'| on the interval
        nodes: Gauss-Legendre nodes per panel; the result is compared with twice as many

    Raises:
        QuadratureError: If the two rules disagree after ``max_doublings`` panel doublings
    """
    panels = max(8, math.ceil(frequency * (hi - lo) / math.pi))

    def rule(count: int, order: int) -> complex:
        t, w = leggauss(order)
        edges = np.linspace(lo, hi, count + 1)
        total = 0j
        for start in range(0, count, PANEL_CHUNK):
            stop = min(start + PANEL_CHUNK, count)
            left = edges[start:stop]
            right = edges[start + 1 : stop + 1]
            half = (right - left)[:, None] / 2
            x = (left + right)[:, None] / 2 + half * t[None, :]
            total += complex(np.sum(w[None, :] * half * amplitude(x) * np.exp(1j * phase(x))))
        return total

    for _ in range(max_doublings + 1):
        coarse, fine = rule(panels, nodes), rule(panels, 2 * nodes)
        if abs(fine - coarse) <= atol + rtol * abs(fine):
            return fine
        panels *= 2
    raise QuadratureError(f"Oscillatory quadrature did not converge with {panels // 2} panels")


def _frequency(derivative: Callable[[FloatArray], FloatArray], lo: float, hi: float) -> float:
    sample = np.linspace(lo, hi, 4097)
    return float(np.max(np.abs(derivative(sample)))) * 1.25 + 1.0 / (hi - lo)


def _univariate(phase: SeriesLike) -> LatticePolynomial:
    poly = _polynomial(phase)
    if poly.degree_in(1) > 0:
        raise PreconditionError(f"Phase {poly} must depend on x1 only")
    return poly


def _decay_fit(
    kind: str,
    lambdas: Sequence[float],
    values: Sequence[float],
    predicted: Fraction,
    tolerance: float,
    mode: Mode,
    notes: tuple[str, ...] = (),
) -> FitResult:
    kept = [(lam, v) for lam, v in zip(lambdas, values) if v > NOISE_FLOOR]
    if len(kept) < len(values):
        logger.warning("%s: dropped %d points below the noise floor", kind, len(values) - len(kept))
        notes = notes + (f"dropped {len(values) - len(kept)} points below {NOISE_FLOOR:g}",)
    slope, stderr, points = fit_exponent([lam for lam, _ in kept], [v for _, v in kept])
    return FitResult(kind, slope, stderr, (min(lambdas), max(lambdas)), points, predicted, tolerance, mode, notes=notes)


def corput_decay(phase: SeriesLike, m: int, lambdas: Sequence[float], tolerance: float = 0.05) -> FitResult:
    """
    Fit the decay of |int exp(i lambda phase(x)) (1 - x^2)^2 dx| over [-1, 1].

    Predicted exponent -1/m; for m = 1 the rate is only bounded above by -1.

    Raises:
        PreconditionError: If |phase^(m)| < 1 somewhere on [-1, 1]
        QuadratureError: If the quadrature fails to converge
    """
    if m < 1:
        raise PreconditionError(f"Derivative order must be positive, got {m}")
    poly = _univariate(phase)
    sample = np.linspace(-1.0, 1.0, 1025)
    if np.min(np.abs(poly.diff(0, m).evaluate_numeric(sample, 0.0))) < 1.0:
        raise PreconditionError(f"|phase^({m})| >= 1 fails on [-1, 1]")
    derivative = poly.diff(0)

    def amplitude(x: FloatArray) -> FloatArray:
        return (1 - x**2) ** 2

    values: list[float] = []
    for lam in lambdas:
        frequency = _frequency(lambda x: lam * derivative.evaluate_numeric(x, 0.0), -1.0, 1.0)
        value = oscillatory_integral(lambda x: lam * poly.evaluate_numeric(x, 0.0), amplitude, -1.0, 1.0, frequency)
        values.append(abs(value))
    mode = Mode.AT_MOST if m == 1 else Mode.EQUAL
    return _decay_fit("corput", lambdas, values, Fraction(-1, m), tolerance, mode, (f"m={m}",))


@dataclass(frozen=True)
class TransitionWindow:
    """Vertex governing the dyadic window |x1| ~ 2^-j, s2 ~ 2^-k."""

    index: int
    vertex: tuple[Fraction, Fraction]
    d: float


def locate_transition(polyhedron: NewtonPolyhedron, j: int, k: int, margin: int = 1) -> TransitionWindow:
    """
    Find the transition domain containing the window.

    The window lies in E_l when k a_l + margin <= j <= k a_(l+1) - margin with a_0 = 0.

    Raises:
        EmptyDomainError: If the window straddles a boundary between two domains
    """
    if j < 0 or k < 0:
        raise PreconditionError(f"Window indices must be non-negative, got ({j}, {k})")
    slopes = polyhedron.slopes
    l = sum(1 for a in slopes if k * a < j)
    low = k * slopes[l - 1] if l >= 1 else Fraction(-margin)
    high = k * slopes[l] if l < len(slopes) else None
    if j < low + margin or (high is not None and j > high - margin):
        raise EmptyDomainError(f"Window (j, k) = ({j}, {k}) is within {margin} of a domain boundary")
    b, a = polyhedron.vertices[l]
    d = 2.0 ** float(-k * a - j * (b + 2))
    return TransitionWindow(l, (b, a), d)


def _window(t: FloatArray) -> FloatArray:
    inside = (t > 0.5) & (t < 2.0)
    return np.where(inside, ((t - 0.5) * (2.0 - t)) ** 2, 0.0)


def oscillatory_J(
    phi1: SeriesLike,
    polyhedron: NewtonPolyhedron,
    j: int,
    k: int,
    s1: float | None = None,
    offsets: Sequence[float] = tuple(range(2, 10)),
    tolerance: float = 0.07,
) -> FitResult:
    """
    Fit the decay of J(lambda) = int exp(-i lambda (phi1(x1, s2) + s1 x1)) b(2^j x1) dx1 with s2 = 2^-k.

    lambda runs over 2^t / d for the offsets t, d = 2^(-k A - j (B + 2)) being the scale of the
    window's vertex; s1 defaults to the value putting a stationary point at x1 = 2^-j. The ratio
    of |J| to 2^-j (lambda d)^(-1/2) is recorded in the notes.

    Raises:
        EmptyDomainError: If the window is not inside a transition domain
    """
    window = locate_transition(polyhedron, j, k)
    poly = _polynomial(phi1)
    s2 = 2.0**-k
    x0 = 2.0**-j
    d1 = poly.diff(0)
    if s1 is None:
        s1 = -float(d1.evaluate_numeric(x0, s2))
    lo, hi = x0 / 2, 2 * x0
    lambdas = [2.0**t / window.d for t in offsets]
    shift = float(s1)

    def amplitude(x: FloatArray) -> FloatArray:
        return _window(x / x0)

    values: list[float] = []
    envelope: list[float] = []
    for lam in lambdas:
        frequency = _frequency(lambda x: lam * (d1.evaluate_numeric(x, s2) + shift), lo, hi)

        def phase(x: FloatArray, lam: float = lam) -> FloatArray:
            return -lam * (poly.evaluate_numeric(x, s2) + shift * x)

        value = oscillatory_integral(phase, amplitude, lo, hi, frequency)
        values.append(abs(value))
        envelope.append(abs(value) / (x0 * (lam * window.d) ** -0.5))
    notes = (
        f"window (j, k) = ({j}, {k}) in E_{window.index}, vertex {window.vertex}",
        f"|J| / envelope in [{min(envelope):.4g}, {max(envelope):.4g}]",
    )
    return _decay_fit("oscillatory", lambdas, values, Fraction(-1, 2), tolerance, Mode.AT_MOST, notes)


def stationary_scaling_check(
    Ns: Sequence[float], u: float = 0.3, tolerance: float = 0.05
) -> FitResult:
    """
    Decay in N of I(u) = int int exp(i N (x^2 + eta x - eta u)) exp(-x^2 - eta^2) dx deta.

    The eta-integral is Gaussian, sqrt(pi) exp(-N^2 (x - u)^2 / 4); the remaining x-integral is
    taken by quadrature over twelve widths around x = u. Predicted exponent -1.
    """
    values: list[float] = []
    for N in Ns:
        width = 12.0 / N
        lo, hi = u - width, u + width

        def amplitude(x: FloatArray, n: float = N) -> FloatArray:
            return math.sqrt(math.pi) * np.exp(-(x**2) - n**2 * (x - u) ** 2 / 4)

        value = oscillatory_integral(lambda x, n=N: n * x**2, amplitude, lo, hi, N * 2 * (abs(u) + width) + 1.0)
        values.append(abs(value))
    return _decay_fit("stationary_scaling", Ns, values, Fraction(-1), tolerance, Mode.EQUAL)


@dataclass(frozen=True)
class VerificationSettings:
    """Sweep parameters shared by the command line and the tests."""

    grid: int = 256
    epsilon: float = 0.25
    deltas: tuple[float, ...] = field(default_factory=lambda: tuple(dyadic_range(2.0**-26, 2.0**-12, 8)))
    lambdas: tuple[float, ...] = field(default_factory=lambda: tuple(dyadic_range(2.0**6, 2.0**20, 8)))
    tolerance: float = 0.05
    box_tolerance: float = 0.1
