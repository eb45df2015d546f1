"""Time-indexed jump intensity kernels K(t, dx).

A kernel gives, per time t, a (possibly infinite) measure on R \\ {0}; all
parameters are piecewise constant in t over ``breakpoints`` cells, the last
cell extending to infinity.  Intensities are integrated against a clock dA
elsewhere; everything here is a fixed-t query.

Tail conventions: ``upper_tail(t, x) = K(t, [x, inf))`` for x > 0 and
``lower_tail(t, x) = K(t, (-inf, x])`` for x < 0.  Strict variants exclude
the endpoint, which only matters for kernels with atoms.
"""

from __future__ import annotations

import functools
import math
from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .jumps import JumpSizeDistribution, point_mass

__all__ = [
    "JumpKernel",
    "CompoundPoissonKernel",
    "CGMYKernel",
    "TabulatedKernel",
    "SuperposedKernel",
    "zero_kernel",
    "DEFAULT_THRESHOLD",
]

DEFAULT_THRESHOLD = 1.0
_TAIL_FLOOR = 1e-12


def _check_cells(breakpoints: np.ndarray, n: int):
    if breakpoints.ndim != 1 or breakpoints.size == 0 or breakpoints[0] != 0.0:
        raise ValueError("time breakpoints must start at 0")
    if np.any(np.diff(breakpoints) <= 0):
        raise ValueError("time breakpoints must be strictly increasing")
    if n != len(breakpoints):
        raise ValueError("one parameter value per time cell required")


class JumpKernel(ABC):
    """Base interface; subclasses fill in per-cell scalar queries."""

    breakpoints: np.ndarray

    # -- time structure --------------------------------------------------

    def cell_index(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, float(t), side="right")) - 1

    def time_breakpoints(self) -> np.ndarray:
        return self.breakpoints

    # -- per-time queries --------------------------------------------------

    @abstractmethod
    def upper_tail(self, t: float, x):
        """K(t, [x, inf)) for x > 0, vectorized in x."""

    @abstractmethod
    def lower_tail(self, t: float, x):
        """K(t, (-inf, x]) for x < 0, vectorized in x."""

    def strict_upper_tail(self, t: float, x):
        """K(t, (x, inf)); equals upper_tail for continuous kernels."""
        return self.upper_tail(t, x)

    def strict_lower_tail(self, t: float, x):
        return self.lower_tail(t, x)

    @abstractmethod
    def positive_mass(self, t: float) -> float:
        """K(t, (0, inf)), possibly inf."""

    @abstractmethod
    def negative_mass(self, t: float) -> float:
        """K(t, (-inf, 0)), possibly inf."""

    def mass(self, t: float) -> float:
        return self.positive_mass(t) + self.negative_mass(t)

    def is_finite_activity(self) -> bool:
        return all(np.isfinite(self.mass(t)) for t in self.breakpoints)

    @abstractmethod
    def integral(self, t: float, f: Callable, breaks: Sequence[float] = ()) -> float:
        """int f dK(t, .) for f with f(0) = 0 and at most linear growth.

        ``breaks`` lists kinks of f to help the quadrature.  May return
        +-inf when the integral diverges.
        """

    def h_integral(self, t: float, threshold: float = DEFAULT_THRESHOLD, eps: float = 0.0) -> float:
        """int y 1{eps <= |y| <= threshold} K(t, dy).

        With eps = 0 this is the compensator integrand for the truncation
        h(y) = y 1{|y| <= threshold}; nan signals divergence.
        """
        if not 0.0 <= eps <= threshold:
            raise ValueError("need 0 <= eps <= threshold")
        if eps == 0.0 and not self._small_jump_summable(t):
            return math.nan

        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where((np.abs(y) >= eps) & (np.abs(y) <= threshold), y, 0.0)

        return self.integral(t, g, breaks=(-threshold, -eps, eps, threshold))

    def abs_h_integral(self, t: float, threshold: float = DEFAULT_THRESHOLD, eps: float = 0.0) -> float:
        if eps == 0.0 and not self._small_jump_summable(t):
            return math.inf

        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where((np.abs(y) >= eps) & (np.abs(y) <= threshold), np.abs(y), 0.0)

        return self.integral(t, g, breaks=(-threshold, -eps, eps, threshold))

    def big_jump_integral(self, t: float, threshold: float = DEFAULT_THRESHOLD) -> float:
        """int (y - h(y)) K(t, dy) = int y 1{|y| > threshold} K(t, dy)."""

        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where(np.abs(y) > threshold, y, 0.0)

        return self.integral(t, g, breaks=(-threshold, threshold))

    def abs_big_jump_integral(self, t: float, threshold: float = DEFAULT_THRESHOLD) -> float:
        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where(np.abs(y) > threshold, np.abs(y), 0.0)

        return self.integral(t, g, breaks=(-threshold, threshold))

    def _small_jump_summable(self, t: float) -> bool:
        """Whether int_{|y|<1} |y| K(t, dy) converges."""
        return True

    @abstractmethod
    def small_jump_abs_moment(self, t: float, eps: float) -> float:
        """int_{|y| < eps} |y| K(t, dy); inf when divergent."""

    @abstractmethod
    def stop_loss(self, t: float, x: float) -> float:
        """int (y - x)+ K(t, dy); inf when divergent."""

    def positive_part_mean(self, t: float) -> float:
        return self.stop_loss(t, 0.0)

    def negative_part_mean(self, t: float) -> float:
        """int (-y)+ K(t, dy)."""
        if not self._small_jump_summable(t):
            return math.inf

        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where(y < 0, -y, 0.0)

        return self.integral(t, g, breaks=(0.0,))

    def mean(self, t: float) -> float:
        """int y K(t, dy); +-inf one-sided divergence, nan if two-sided."""
        pos, neg = self.positive_part_mean(t), self.negative_part_mean(t)
        if math.isinf(pos) and math.isinf(neg):
            return math.nan
        if math.isinf(pos):
            return math.inf
        if math.isinf(neg):
            return -math.inf
        return pos - neg

    def density(self, t: float, x):
        """Lebesgue density at x (vectorized), or None for atomic kernels."""
        return None

    def atoms(self, t: float) -> list[tuple[float, float]] | None:
        """(location, intensity) pairs, or None for continuous kernels."""
        return None

    def shifted_integral(self, t: float, f: Callable, z: np.ndarray) -> np.ndarray:
        """int (f(z + y) - f(z)) K(t, dy), vectorized over z.

        Default does pointwise quadrature; compound-Poisson kernels override
        with an exact vectorized form.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty_like(z)
        for i, zi in enumerate(z):
            out[i] = self.integral(t, lambda y, zi=zi: f(zi + np.asarray(y)) - f(zi))
        return out

    # -- interval masses ----------------------------------------------------

    def interval_mass(
        self,
        t: float,
        a: float,
        b: float,
        include_left: bool = True,
        include_right: bool = False,
    ) -> float:
        """K(t, interval(a, b)) with selectable endpoint closure."""
        a, b = float(a), float(b)
        if b < a or (a == b and not (include_left and include_right)):
            return 0.0
        if a > 0:
            left = self.upper_tail(t, a) if include_left else self.strict_upper_tail(t, a)
            if math.isinf(b):
                right = 0.0
            else:
                right = self.strict_upper_tail(t, b) if include_right else self.upper_tail(t, b)
            return max(float(left) - float(right), 0.0)
        if b < 0:
            right = self.lower_tail(t, b) if include_right else self.strict_lower_tail(t, b)
            if math.isinf(a):
                left = 0.0
            else:
                left = self.strict_lower_tail(t, a) if include_left else self.lower_tail(t, a)
            return max(float(right) - float(left), 0.0)
        # interval touches or straddles 0; K({0}) = 0 by construction
        neg = 0.0
        if a < 0:
            neg = self.negative_mass(t)
            if math.isinf(neg):
                return math.inf
            if not math.isinf(a):
                neg -= float(self.strict_lower_tail(t, a) if include_left else self.lower_tail(t, a))
        pos = 0.0
        if b > 0:
            pos = self.positive_mass(t)
            if math.isinf(pos):
                return math.inf
            if not math.isinf(b):
                pos -= float(self.upper_tail(t, b) if include_right else self.strict_upper_tail(t, b))
        return max(neg, 0.0) + max(pos, 0.0)

    # -- simulation support ---------------------------------------------------

    @abstractmethod
    def sample_sizes(self, t: float, n: int, rng: np.random.Generator, eps: float = 0.0) -> np.ndarray:
        """Draw n sizes from K(t, .) restricted to {|y| >= eps}, normalized.

        eps = 0 requires finite activity.
        """

    def mass_outside(self, t: float, eps: float) -> float:
        """K(t, {|y| >= eps}) for eps > 0, or total mass for eps = 0."""
        if eps <= 0.0:
            return self.mass(t)
        return float(self.upper_tail(t, eps)) + float(self.lower_tail(t, -eps))

    @abstractmethod
    def scaled(self, factor: float) -> "JumpKernel":
        """Kernel with all intensities multiplied by factor >= 0."""

    def scaled_piecewise(self, breaks, factors) -> "JumpKernel":
        """Piecewise-constant-in-time rescaling c(t) * K."""
        breaks = np.asarray(breaks, dtype=float)
        factors = np.atleast_1d(np.asarray(factors, dtype=float))
        _check_cells(breaks, len(factors))
        if np.any(factors < 0):
            raise ValueError("scale factors must be nonnegative")
        merged = np.union1d(self.breakpoints, breaks)
        fac = factors[np.searchsorted(breaks, merged, side="right") - 1]
        return self._scaled_cells(merged, fac)

    def _scaled_cells(self, merged: np.ndarray, factors: np.ndarray) -> "JumpKernel":
        raise NotImplementedError(f"piecewise rescaling not supported for {type(self).__name__}")

    # -- inverse tails ----------------------------------------------------------

    def inverse_upper_tail(self, t: float, level, tol: float = 1e-10, y_floor: float = 1e-14):
        """sup{y > 0 : K(t, [y, inf)) >= level}, 0 when the set is empty."""
        return _inverse_tail(lambda y: self.upper_tail(t, y), level, tol, y_floor)

    def inverse_lower_tail(self, t: float, level, tol: float = 1e-10, y_floor: float = 1e-14):
        """sup{y > 0 : K(t, (-inf, -y]) >= level}, 0 when the set is empty."""
        return _inverse_tail(lambda y: self.lower_tail(t, -y), level, tol, y_floor)


def _inverse_tail(tail_of_mag: Callable, level, tol: float, y_floor: float):
    """Vectorized bisection for sup{y : G(y) >= c}, G nonincreasing in y > 0."""
    scalar = np.ndim(level) == 0
    level = np.atleast_1d(np.asarray(level, dtype=float))
    if np.any(level <= 0):
        raise ValueError("tail levels must be positive")
    lo = np.full(level.shape, y_floor)
    alive = np.asarray(tail_of_mag(lo)) >= level
    out = np.zeros(level.shape)
    if not np.any(alive):
        return float(out[0]) if scalar else out
    hi = np.full(level.shape, 1.0)
    for _ in range(200):  # grow hi until the tail falls below the level
        need = alive & (np.asarray(tail_of_mag(hi)) >= level)
        if not np.any(need):
            break
        hi = np.where(need, 2.0 * hi, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ge = np.asarray(tail_of_mag(mid)) >= level
        lo = np.where(alive & ge, mid, lo)
        hi = np.where(alive & ~ge, mid, hi)
        if np.all(hi[alive] - lo[alive] <= tol):
            break
    out[alive] = (0.5 * (lo + hi))[alive]
    return float(out[0]) if scalar else out


# -- compound Poisson ---------------------------------------------------------


class CompoundPoissonKernel(JumpKernel):
    """K(t, dy) = rate(t) * F(dy) for a fixed jump-size law F."""

    def __init__(self, rates, dist: JumpSizeDistribution, breakpoints=(0.0,)):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.rates = np.atleast_1d(np.asarray(rates, dtype=float))
        _check_cells(self.breakpoints, len(self.rates))
        if np.any(self.rates < 0):
            raise ValueError("rates must be nonnegative")
        self.dist = dist

    def rate(self, t: float) -> float:
        return float(self.rates[self.cell_index(t)])

    def upper_tail(self, t, x):
        return self.rate(t) * self.dist.upper_tail(x)

    def strict_upper_tail(self, t, x):
        return self.rate(t) * self.dist.strict_upper_tail(x)

    def lower_tail(self, t, x):
        return self.rate(t) * self.dist.cdf(x)

    def strict_lower_tail(self, t, x):
        x = np.asarray(x, dtype=float)
        return self.rate(t) * (1.0 - np.asarray(self.dist.upper_tail(x)))

    def positive_mass(self, t):
        return self.rate(t) * float(self.dist.strict_upper_tail(0.0))

    def negative_mass(self, t):
        return self.rate(t) * float(1.0 - np.asarray(self.dist.upper_tail(0.0)))

    def integral(self, t, f, breaks=()):
        r = self.rate(t)
        return r * self.dist.expect(f, breaks=breaks) if r > 0 else 0.0

    def small_jump_abs_moment(self, t, eps):
        def g(y):
            y = np.asarray(y, dtype=float)
            return np.where(np.abs(y) < eps, np.abs(y), 0.0)

        return self.integral(t, g, breaks=(-eps, eps))

    def stop_loss(self, t, x):
        return self.rate(t) * self.dist.stop_loss(float(x))

    def density(self, t, x):
        d = self.dist.density(x)
        return None if d is None else self.rate(t) * d

    def atoms(self, t):
        a = self.dist.atoms()
        if a is None:
            return None
        r = self.rate(t)
        return [(loc, r * w) for loc, w in a]

    def shifted_integral(self, t, f, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        r = self.rate(t)
        if r == 0.0:
            return np.zeros_like(z)
        return r * (self.dist.expect_shifted(f, z) - np.asarray(f(z), dtype=float))

    def sample_sizes(self, t, n, rng, eps=0.0):
        if eps <= 0.0:
            return self.dist.sample(n, rng)
        out = np.empty(n)
        filled = 0
        while filled < n:
            draw = self.dist.sample(max(n - filled, 16), rng)
            keep = draw[np.abs(draw) >= eps]
            take = min(len(keep), n - filled)
            out[filled : filled + take] = keep[:take]
            filled += take
        return out

    def scaled(self, factor):
        if factor < 0:
            raise ValueError("scale factors must be nonnegative")
        return CompoundPoissonKernel(self.rates * float(factor), self.dist, self.breakpoints)

    def _scaled_cells(self, merged, factors):
        idx = np.searchsorted(self.breakpoints, merged, side="right") - 1
        return CompoundPoissonKernel(self.rates[idx] * factors, self.dist, merged)


def zero_kernel() -> CompoundPoissonKernel:
    """The kernel of a process with no jumps."""
    return CompoundPoissonKernel([0.0], point_mass(1.0))


# -- tempered stable ---------------------------------------------------------


def _upper_gamma(a: float, z: float) -> float:
    """Upper incomplete gamma for z > 0 and any real a, via the recursion
    Gamma(a, z) = (Gamma(a+1, z) - z^a e^{-z}) / a below a <= 0."""
    if a > 0:
        return float(special.gammaincc(a, z)) * float(special.gamma(a))
    if a == 0.0:
        return float(special.exp1(z))
    return (_upper_gamma(a + 1.0, z) - z**a * math.exp(-z)) / a


@functools.lru_cache(maxsize=200_000)
def _ts_tail(c: float, damp: float, y: float, x: float) -> float:
    """c int_x^inf s^{-1-y} e^{-damp s} ds, x > 0."""
    if damp == 0.0:
        if y <= 0:
            return math.inf
        return c * x ** (-y) / y
    return c * damp**y * _upper_gamma(-y, damp * x)


@functools.lru_cache(maxsize=200_000)
def _ts_partial_moment(c: float, damp: float, y: float, lo: float, hi: float, power: float) -> float:
    """c int_lo^hi s^(power-1-y) e^(-damp s) ds over magnitudes."""
    expo = power - 1.0 - y
    if lo == 0.0 and expo <= -1.0:
        return math.inf
    if math.isinf(hi) and damp == 0.0 and expo >= -1.0:
        return math.inf
    val, _ = integrate.quad(
        lambda s: math.exp(-damp * s) * s**expo, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200
    )
    return c * val


class CGMYKernel(JumpKernel):
    """Tempered stable: density c e^{-m s}/s^{1+y} for jumps s > 0 and
    c e^{-g s}/s^{1+y} for jumps -s < 0, per time cell."""

    def __init__(self, c, g, m, y, breakpoints=(0.0,)):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        n = len(self.breakpoints)

        def cell_array(v):
            a = np.asarray(v, dtype=float)
            return np.full(n, float(a)) if a.ndim == 0 else a

        self.c, self.g, self.m, self.y = map(cell_array, (c, g, m, y))
        for arr in (self.c, self.g, self.m, self.y):
            _check_cells(self.breakpoints, len(arr))
        if np.any(self.c <= 0):
            raise ValueError("c must be positive")
        if np.any(self.g < 0) or np.any(self.m < 0):
            raise ValueError("tempering parameters must be nonnegative")
        if np.any(self.y >= 2):
            raise ValueError("stability parameter must be below 2")
        if np.any(((self.m == 0) | (self.g == 0)) & (self.y <= 0)):
            raise ValueError("zero tempering requires positive stability parameter")

    def _params(self, t):
        i = self.cell_index(t)
        return float(self.c[i]), float(self.g[i]), float(self.m[i]), float(self.y[i])

    def upper_tail(self, t, x):
        c, _, m, y = self._params(t)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs <= 0):
            raise ValueError("upper_tail needs x > 0")
        out = np.array([_ts_tail(c, m, y, float(v)) for v in xs])
        return float(out[0]) if np.ndim(x) == 0 else out

    def lower_tail(self, t, x):
        c, g, _, y = self._params(t)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs >= 0):
            raise ValueError("lower_tail needs x < 0")
        out = np.array([_ts_tail(c, g, y, float(-v)) for v in xs])
        return float(out[0]) if np.ndim(x) == 0 else out

    def positive_mass(self, t):
        c, _, m, y = self._params(t)
        return math.inf if y >= 0 else _ts_partial_moment(c, m, y, 0.0, math.inf, 0.0)

    def negative_mass(self, t):
        c, g, _, y = self._params(t)
        return math.inf if y >= 0 else _ts_partial_moment(c, g, y, 0.0, math.inf, 0.0)

    def _small_jump_summable(self, t):
        return self._params(t)[3] < 1.0

    def density(self, t, x):
        c, g, m, y = self._params(t)
        xs = np.asarray(x, dtype=float)
        mag = np.abs(xs)
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = c * np.exp(-m * mag) * mag ** (-1.0 - y)
            neg = c * np.exp(-g * mag) * mag ** (-1.0 - y)
        return np.where(xs > 0, pos, np.where(xs < 0, neg, np.inf))

    def integral(self, t, f, breaks=()):
        c, g, m, y = self._params(t)
        total = 0.0
        for sign, damp in ((1.0, m), (-1.0, g)):
            cuts = sorted({abs(b) for b in breaks if b * sign > 0 and np.isfinite(b)})
            far = 2.0 * max([1.0] + cuts) + 60.0 / max(damp, 0.05)
            pieces = [0.0] + [u for u in cuts if u < far] + [far]
            for a, b in zip(pieces[:-1], pieces[1:]):
                val, _ = integrate.quad(
                    lambda s: float(f(np.asarray(sign * s))) * math.exp(-damp * s) * s ** (-1.0 - y),
                    a,
                    b,
                    epsabs=1e-12,
                    limit=200,
                )
                total += c * val
            tail, _ = integrate.quad(
                lambda s: float(f(np.asarray(sign * s))) * math.exp(-damp * s) * s ** (-1.0 - y),
                far,
                np.inf,
                epsabs=1e-12,
                limit=200,
            )
            total += c * tail
        return total

    def small_jump_abs_moment(self, t, eps):
        c, g, m, y = self._params(t)
        if y >= 1.0:
            return math.inf
        return _ts_partial_moment(c, m, y, 0.0, float(eps), 1.0) + _ts_partial_moment(
            c, g, y, 0.0, float(eps), 1.0
        )

    def positive_part_mean(self, t):
        c, _, m, y = self._params(t)
        if y >= 1.0 or (m == 0.0 and y <= 1.0):
            return math.inf
        return _ts_partial_moment(c, m, y, 0.0, math.inf, 1.0)

    def negative_part_mean(self, t):
        c, g, _, y = self._params(t)
        if y >= 1.0 or (g == 0.0 and y <= 1.0):
            return math.inf
        return _ts_partial_moment(c, g, y, 0.0, math.inf, 1.0)

    def stop_loss(self, t, x):
        c, g, m, y = self._params(t)
        x = float(x)
        if x > 0:
            if m == 0.0 and y <= 1.0:
                return math.inf
            val, _ = integrate.quad(
                lambda s: (s - x) * math.exp(-m * s) * s ** (-1.0 - y), x, np.inf, epsabs=1e-13, limit=200
            )
            return c * val
        if x == 0.0:
            return self.positive_part_mean(t)
        if y >= 0:
            return math.inf  # (y - x)+ >= |x| near 0 against infinite mass
        out = self.positive_part_mean(t) - x * self.positive_mass(t)
        val, _ = integrate.quad(
            lambda s: (-s - x) * math.exp(-g * s) * s ** (-1.0 - y), 0.0, -x, epsabs=1e-13, limit=200
        )
        return out + c * val

    def sample_sizes(self, t, n, rng, eps=0.0):
        if eps <= 0.0:
            raise ValueError("infinite-activity kernel: sampling needs a positive size floor")
        up = float(self.upper_tail(t, eps))
        lo = float(self.lower_tail(t, -eps))
        total = up + lo
        if total <= 0:
            raise ValueError("no mass beyond the size floor")
        u = rng.uniform(size=n)
        sign_pos = rng.uniform(size=n) < up / total
        out = np.empty(n)
        if np.any(sign_pos):
            out[sign_pos] = self.inverse_upper_tail(t, np.maximum(u[sign_pos] * up, _TAIL_FLOOR))
        if np.any(~sign_pos):
            out[~sign_pos] = -self.inverse_lower_tail(t, np.maximum(u[~sign_pos] * lo, _TAIL_FLOOR))
        return out

    def scaled(self, factor):
        if factor < 0:
            raise ValueError("scale factors must be nonnegative")
        return CGMYKernel(self.c * float(factor), self.g, self.m, self.y, self.breakpoints)

    def _scaled_cells(self, merged, factors):
        idx = np.searchsorted(self.breakpoints, merged, side="right") - 1
        return CGMYKernel(self.c[idx] * factors, self.g[idx], self.m[idx], self.y[idx], merged)


# -- tabulated ----------------------------------------------------------------


class _TabCell:
    """Monotone tail interpolants for one time cell."""

    def __init__(self, x_pos, tail_pos, x_neg, ltail_neg):
        self.x_pos = np.asarray(x_pos, dtype=float)
        self.tail_pos = np.asarray(tail_pos, dtype=float)
        self.x_neg = np.asarray(x_neg, dtype=float)
        self.ltail_neg = np.asarray(ltail_neg, dtype=float)
        for side, xs, vals, mono in (
            ("positive", self.x_pos, self.tail_pos, -1),
            ("negative", self.x_neg, self.ltail_neg, +1),
        ):
            if xs.size == 0:
                continue
            if (side == "positive" and np.any(xs <= 0)) or (side == "negative" and np.any(xs >= 0)):
                raise ValueError(f"{side} grid on the wrong side of 0")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulation grids must be strictly increasing")
            if np.any(vals < 0):
                raise ValueError("tail values must be nonnegative")
            if np.any(mono * np.diff(vals) < 0):
                raise ValueError(f"{side} tail values must be monotone")
        self._up = PchipInterpolator(self.x_pos, self.tail_pos) if self.x_pos.size > 1 else None
        self._lo = PchipInterpolator(self.x_neg, self.ltail_neg) if self.x_neg.size > 1 else None
        self._up_anti = self._up.antiderivative() if self._up is not None else None
        self._lo_anti = self._lo.antiderivative() if self._lo is not None else None

    def upper(self, x):
        x = np.asarray(x, dtype=float)
        if self.x_pos.size == 0:
            return np.zeros_like(x)
        lo_val = self.tail_pos[0]
        if self._up is None:
            inside = x <= self.x_pos[0]
            return np.where(inside, lo_val, 0.0)
        out = np.where(
            x < self.x_pos[0],
            lo_val,
            np.where(x > self.x_pos[-1], 0.0, self._up(np.clip(x, self.x_pos[0], self.x_pos[-1]))),
        )
        return out

    def lower(self, x):
        x = np.asarray(x, dtype=float)
        if self.x_neg.size == 0:
            return np.zeros_like(x)
        hi_val = self.ltail_neg[-1]
        if self._lo is None:
            inside = x >= self.x_neg[-1]
            return np.where(inside, hi_val, 0.0)
        out = np.where(
            x > self.x_neg[-1],
            hi_val,
            np.where(x < self.x_neg[0], 0.0, self._lo(np.clip(x, self.x_neg[0], self.x_neg[-1]))),
        )
        return out

    def upper_integral(self, a: float) -> float:
        """int_a^inf K([y, inf)) dy for a >= 0 (tail runs out at the grid end)."""
        if self.x_pos.size == 0:
            return 0.0
        x0, x1 = self.x_pos[0], self.x_pos[-1]
        head = max(x0 - max(a, 0.0), 0.0) * self.tail_pos[0]
        if self._up_anti is None:
            return head
        lo = np.clip(a, x0, x1)
        return head + float(self._up_anti(x1) - self._up_anti(lo))

    def lower_integral(self, b: float) -> float:
        """int_-inf^b K((-inf, y]) dy for b <= 0."""
        if self.x_neg.size == 0:
            return 0.0
        x0, x1 = self.x_neg[0], self.x_neg[-1]
        tail = max(min(b, 0.0) - x1, 0.0) * self.ltail_neg[-1]
        if self._lo_anti is None:
            return tail
        hi = np.clip(b, x0, x1)
        return tail + float(self._lo_anti(hi) - self._lo_anti(x0))

    def pos_density(self, x):
        if self._up is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x_pos[0]) & (x <= self.x_pos[-1])
        return np.where(inside, np.maximum(-self._up.derivative()(x), 0.0), 0.0)

    def neg_density(self, x):
        if self._lo is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x_neg[0]) & (x <= self.x_neg[-1])
        return np.where(inside, np.maximum(self._lo.derivative()(x), 0.0), 0.0)

class TabulatedKernel(JumpKernel):
    """Kernel defined by tabulated tails with monotone (PCHIP) interpolation.

    The measure lives on the tabulated range: below the first positive node
    the upper tail is constant (no mass), beyond the last node it is zero,
    with the leftover tail mass kept as an atom at the extreme node.
    """

    def __init__(self, cells: Sequence[_TabCell], breakpoints=(0.0,)):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.cells = list(cells)
        _check_cells(self.breakpoints, len(self.cells))

    @classmethod
    def from_data(cls, x_pos, tail_pos, x_neg=(), ltail_neg=(), breakpoints=(0.0,)):
        cell = _TabCell(x_pos, tail_pos, x_neg, ltail_neg)
        return cls([cell] * len(np.atleast_1d(np.asarray(breakpoints))), breakpoints)

    @classmethod
    def from_kernel(
        cls,
        kernel: JumpKernel,
        t_max: float,
        n_points: int = 256,
        x_floor: float = 1e-6,
        tail_cut: float = _TAIL_FLOOR,
    ) -> "TabulatedKernel":
        """Tabulate another kernel's tails on geometric grids per time cell."""
        bks = kernel.breakpoints[kernel.breakpoints <= t_max]
        cells = []
        for t in bks:
            x_hi = 1.0
            for _ in range(200):
                if float(kernel.upper_tail(t, x_hi)) <= tail_cut:
                    break
                x_hi *= 2.0
            xs = np.geomspace(x_floor, x_hi, n_points)
            tails = np.maximum.accumulate(np.asarray(kernel.upper_tail(t, xs))[::-1])[::-1]
            x_lo = -1.0
            for _ in range(200):
                if float(kernel.lower_tail(t, x_lo)) <= tail_cut:
                    break
                x_lo *= 2.0
            xn = -np.geomspace(x_floor, -x_lo, n_points)[::-1]
            ltails = np.maximum.accumulate(np.asarray(kernel.lower_tail(t, xn)))
            cells.append(_TabCell(xs, tails, xn, ltails))
        return cls(cells, bks)

    def _cell(self, t) -> _TabCell:
        return self.cells[self.cell_index(t)]

    def upper_tail(self, t, x):
        xs = np.asarray(x, dtype=float)
        if np.any(np.atleast_1d(xs) <= 0):
            raise ValueError("upper_tail needs x > 0")
        out = self._cell(t).upper(xs)
        return float(out) if np.ndim(x) == 0 else out

    def lower_tail(self, t, x):
        xs = np.asarray(x, dtype=float)
        if np.any(np.atleast_1d(xs) >= 0):
            raise ValueError("lower_tail needs x < 0")
        out = self._cell(t).lower(xs)
        return float(out) if np.ndim(x) == 0 else out

    def positive_mass(self, t):
        c = self._cell(t)
        return float(c.tail_pos[0]) if c.x_pos.size else 0.0

    def negative_mass(self, t):
        c = self._cell(t)
        return float(c.ltail_neg[-1]) if c.x_neg.size else 0.0

    def density(self, t, x):
        c = self._cell(t)
        xs = np.asarray(x, dtype=float)
        return np.where(xs > 0, c.pos_density(xs), c.neg_density(xs))

    def integral(self, t, f, breaks=()):
        c = self._cell(t)
        total = 0.0
        for xs, dens in ((c.x_pos, c.pos_density), (c.x_neg, c.neg_density)):
            if xs.size < 2:
                continue
            cuts = sorted({float(b) for b in breaks if xs[0] < b < xs[-1]})
            pieces = [float(xs[0])] + cuts + [float(xs[-1])]
            for a, b in zip(pieces[:-1], pieces[1:]):
                val, _ = integrate.quad(
                    lambda v: float(f(np.asarray(v))) * float(dens(np.asarray(v))), a, b, limit=200
                )
                total += val
        for loc, w in self._boundary_atoms(t):
            total += w * float(f(np.asarray(loc)))
        return total

    def _boundary_atoms(self, t):
        c = self._cell(t)
        out = []
        if c.x_pos.size:
            w = float(c.tail_pos[-1])
            if w > 0:
                out.append((float(c.x_pos[-1]), w))
            if c.x_pos.size == 1 and c.tail_pos[0] > c.tail_pos[-1]:
                out.append((float(c.x_pos[0]), float(c.tail_pos[0] - c.tail_pos[-1])))
        if c.x_neg.size:
            w = float(c.ltail_neg[0])
            if w > 0:
                out.append((float(c.x_neg[0]), w))
            if c.x_neg.size == 1 and c.ltail_neg[-1] > c.ltail_neg[0]:
                out.append((float(c.x_neg[-1]), float(c.ltail_neg[-1] - c.ltail_neg[0])))
        return out

    def band_first_moment(
        self, t, a: float, b: float, include_left: bool = True, include_right: bool = True
    ) -> float:
        """int_{a <= y <= b} y K(t, dy), exact from the tail antiderivatives."""
        a, b = float(a), float(b)
        if b < a:
            return 0.0
        c = self._cell(t)
        total = 0.0
        if c.x_pos.size >= 2:
            lo = max(a, float(c.x_pos[0]))
            hi = min(b, float(c.x_pos[-1]))
            if hi > lo:
                total += lo * float(c._up(lo)) - hi * float(c._up(hi)) + float(c._up_anti(hi) - c._up_anti(lo))
        if c.x_neg.size >= 2:
            lo = max(a, float(c.x_neg[0]))
            hi = min(b, float(c.x_neg[-1]))
            if hi > lo:
                total += hi * float(c._lo(hi)) - lo * float(c._lo(lo)) - float(c._lo_anti(hi) - c._lo_anti(lo))
        for loc, w in self._boundary_atoms(t):
            if (a < loc < b) or (loc == a and include_left) or (loc == b and include_right):
                total += loc * w
        return total

    def h_integral(self, t, threshold=DEFAULT_THRESHOLD, eps=0.0):
        if not 0.0 <= eps <= threshold:
            raise ValueError("need 0 <= eps <= threshold")
        if eps == 0.0:
            return self.band_first_moment(t, -threshold, threshold)
        return self.band_first_moment(t, eps, threshold) + self.band_first_moment(t, -threshold, -eps)

    def abs_h_integral(self, t, threshold=DEFAULT_THRESHOLD, eps=0.0):
        return self.band_first_moment(t, eps, threshold) - self.band_first_moment(t, -threshold, -eps)

    def big_jump_integral(self, t, threshold=DEFAULT_THRESHOLD):
        return self.band_first_moment(t, threshold, math.inf, include_left=False) + \
            self.band_first_moment(t, -math.inf, -threshold, include_right=False)

    def abs_big_jump_integral(self, t, threshold=DEFAULT_THRESHOLD):
        return self.band_first_moment(t, threshold, math.inf, include_left=False) - \
            self.band_first_moment(t, -math.inf, -threshold, include_right=False)

    def mean(self, t):
        return self.band_first_moment(t, -math.inf, math.inf)

    def small_jump_abs_moment(self, t, eps):
        return self.band_first_moment(t, 0.0, eps, include_right=False) - \
            self.band_first_moment(t, -eps, 0.0, include_left=False)

    def stop_loss(self, t, x):
        c = self._cell(t)
        x = float(x)
        if x >= 0:
            return c.upper_integral(x)
        # int (y-x)+ = int_x^0 K((y, inf)) dy + stop_loss(0)
        mass = self.mass(t)
        strip = (-x) * mass - c.lower_integral(0.0) + c.lower_integral(x)
        return c.upper_integral(0.0) + strip

    def sample_sizes(self, t, n, rng, eps=0.0):
        up = float(self.upper_tail(t, eps)) if eps > 0 else self.positive_mass(t)
        lo = float(self.lower_tail(t, -eps)) if eps > 0 else self.negative_mass(t)
        total = up + lo
        if total <= 0:
            raise ValueError("no mass beyond the size floor")
        u = rng.uniform(size=n)
        sign_pos = rng.uniform(size=n) < up / total
        out = np.empty(n)
        floor = max(eps, 1e-14)
        if np.any(sign_pos):
            out[sign_pos] = _inverse_tail(
                lambda v: self._cell(t).upper(v), np.maximum(u[sign_pos] * up, _TAIL_FLOOR), 1e-10, floor
            )
        if np.any(~sign_pos):
            out[~sign_pos] = -_inverse_tail(
                lambda v: self._cell(t).lower(-v), np.maximum(u[~sign_pos] * lo, _TAIL_FLOOR), 1e-10, floor
            )
        return out

    def scaled(self, factor):
        if factor < 0:
            raise ValueError("scale factors must be nonnegative")
        cells = [
            _TabCell(c.x_pos, factor * c.tail_pos, c.x_neg, factor * c.ltail_neg) for c in self.cells
        ]
        return TabulatedKernel(cells, self.breakpoints)


# -- superposition -------------------------------------------------------------


class SuperposedKernel(JumpKernel):
    """Sum of independent component kernels."""

    def __init__(self, components: Sequence[JumpKernel]):
        if not components:
            raise ValueError("need at least one component")
        self.components = list(components)
        bks = self.components[0].breakpoints
        for k in self.components[1:]:
            bks = np.union1d(bks, k.breakpoints)
        self.breakpoints = bks

    def upper_tail(self, t, x):
        return sum(np.asarray(k.upper_tail(t, x)) for k in self.components)

    def strict_upper_tail(self, t, x):
        return sum(np.asarray(k.strict_upper_tail(t, x)) for k in self.components)

    def lower_tail(self, t, x):
        return sum(np.asarray(k.lower_tail(t, x)) for k in self.components)

    def strict_lower_tail(self, t, x):
        return sum(np.asarray(k.strict_lower_tail(t, x)) for k in self.components)

    def positive_mass(self, t):
        return sum(k.positive_mass(t) for k in self.components)

    def negative_mass(self, t):
        return sum(k.negative_mass(t) for k in self.components)

    def _small_jump_summable(self, t):
        return all(k._small_jump_summable(t) for k in self.components)

    def integral(self, t, f, breaks=()):
        return sum(k.integral(t, f, breaks=breaks) for k in self.components)

    def small_jump_abs_moment(self, t, eps):
        return sum(k.small_jump_abs_moment(t, eps) for k in self.components)

    def stop_loss(self, t, x):
        return sum(k.stop_loss(t, x) for k in self.components)

    def density(self, t, x):
        parts = [k.density(t, x) for k in self.components]
        if any(p is None for p in parts):
            return None
        return sum(np.asarray(p) for p in parts)

    def atoms(self, t):
        parts = [k.atoms(t) for k in self.components]
        if any(p is None for p in parts):
            return None
        merged: dict[float, float] = {}
        for p in parts:
            for loc, w in p:
                merged[loc] = merged.get(loc, 0.0) + w
        return sorted(merged.items())

    def shifted_integral(self, t, f, z):
        return sum(k.shifted_integral(t, f, z) for k in self.components)

    def sample_sizes(self, t, n, rng, eps=0.0):
        weights = np.array([k.mass_outside(t, eps) for k in self.components])
        total = weights.sum()
        if total <= 0:
            raise ValueError("no mass beyond the size floor")
        counts = rng.multinomial(n, weights / total)
        parts = [
            k.sample_sizes(t, int(c), rng, eps=eps)
            for k, c in zip(self.components, counts)
            if c > 0
        ]
        out = np.concatenate(parts) if parts else np.empty(0)
        return out[rng.permutation(n)] if len(out) == n else out

    def scaled(self, factor):
        return SuperposedKernel([k.scaled(factor) for k in self.components])

    def _scaled_cells(self, merged, factors):
        return SuperposedKernel([k.scaled_piecewise(merged, factors) for k in self.components])
