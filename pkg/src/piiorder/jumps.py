"""Jump-size distributions for compound-Poisson kernels and fixed jumps.

All laws here put no mass at 0 (a "jump of size 0" is not a jump).  Tails
are closed: upper_tail(x) = P(J >= x), lower_tail(x) = P(J <= x).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "JumpSizeDistribution",
    "ExponentialJumps",
    "UniformJumps",
    "DiscreteJumps",
    "point_mass",
]

_GL_NODES = 256


def _gl_unit_rule(n: int = _GL_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


class JumpSizeDistribution(ABC):
    """Law of a single jump size."""

    @abstractmethod
    def cdf(self, x): ...

    @abstractmethod
    def upper_tail(self, x):
        """P(J >= x)."""

    @abstractmethod
    def strict_upper_tail(self, x):
        """P(J > x)."""

    @abstractmethod
    def quantile(self, u):
        """Generalized inverse of the cdf, u in (0, 1)."""

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def second_moment(self) -> float: ...

    @abstractmethod
    def expect(self, f: Callable[[np.ndarray], np.ndarray], breaks=()) -> float:
        """E f(J); ``breaks`` lists known kinks of f for the quadrature."""

    @abstractmethod
    def expect_shifted(self, f, z: np.ndarray) -> np.ndarray:
        """E f(z + J) for an array of offsets z."""

    @abstractmethod
    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def sample_sums(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sums of ``counts[i]`` iid copies, vectorized over i."""

    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    def density(self, x):
        """Lebesgue density, or None if the law is not continuous."""
        return None

    def atoms(self) -> list[tuple[float, float]] | None:
        """(location, probability) pairs, or None if the law is continuous."""
        return None

    def lower_tail(self, x):
        return self.cdf(x)

    def stop_loss(self, x: float) -> float:
        """E (J - x)+."""
        return self.expect(lambda y: np.maximum(y - x, 0.0), breaks=(x,))


@dataclass(frozen=True)
class ExponentialJumps(JumpSizeDistribution):
    """sign * Exp(mean): one-sided exponential jump sizes."""

    mean_size: float = 1.0
    sign: int = 1

    def __post_init__(self):
        if self.mean_size <= 0:
            raise ValueError("mean_size must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def _mag_cdf(self, m):
        return -np.expm1(-np.maximum(m, 0.0) / self.mean_size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.sign == 1:
            return self._mag_cdf(x)
        return np.where(x >= 0, 1.0, np.exp(x / self.mean_size))

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        if self.sign == 1:
            return np.where(x <= 0, 1.0, np.exp(-x / self.mean_size))
        return 1.0 - self.cdf(x)  # continuous law, closed = open

    def strict_upper_tail(self, x):
        return self.upper_tail(x)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.sign == 1:
            return -self.mean_size * np.log1p(-u)
        return self.mean_size * np.log(u)

    def mean(self) -> float:
        return self.sign * self.mean_size

    def second_moment(self) -> float:
        return 2.0 * self.mean_size**2

    def density(self, x):
        x = np.asarray(x, dtype=float)
        m = self.sign * x
        return np.where(m > 0, np.exp(-np.maximum(m, 0.0) / self.mean_size) / self.mean_size, 0.0)

    def support(self) -> tuple[float, float]:
        return (0.0, np.inf) if self.sign == 1 else (-np.inf, 0.0)

    def expect(self, f, breaks=()) -> float:
        mu = self.mean_size
        cuts = sorted({abs(b) for b in breaks if 0.0 < abs(b) < np.inf})
        far = max([60.0 * mu] + [c for c in cuts]) + 10.0 * mu
        pieces = [0.0] + [c for c in cuts if c < far] + [far]
        total = 0.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            val, _ = integrate.quad(
                lambda m: f(np.asarray(self.sign * m)) * np.exp(-m / mu) / mu, a, b
            )
            total += val
        tail, _ = integrate.quad(
            lambda m: f(np.asarray(self.sign * m)) * np.exp(-m / mu) / mu, far, np.inf
        )
        return total + tail

    def expect_shifted(self, f, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        u, w = _gl_unit_rule()
        j = self.quantile(u)
        return (f(z[:, None] + j[None, :]) * w[None, :]).sum(axis=1)

    def sample(self, n, rng):
        return self.sign * rng.exponential(self.mean_size, size=n)

    def sample_sums(self, counts, rng):
        counts = np.asarray(counts)
        out = np.zeros(counts.shape, dtype=float)
        pos = counts > 0
        if np.any(pos):
            out[pos] = rng.gamma(shape=counts[pos], scale=self.mean_size)
        return self.sign * out


@dataclass(frozen=True)
class UniformJumps(JumpSizeDistribution):
    """Uniform(lo, hi) jump sizes."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def upper_tail(self, x):
        return 1.0 - self.cdf(x)

    def strict_upper_tail(self, x):
        return self.upper_tail(x)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return self.lo + u * (self.hi - self.lo)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def second_moment(self) -> float:
        return (self.hi**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def expect(self, f, breaks=()) -> float:
        cuts = sorted({float(b) for b in breaks if self.lo < b < self.hi})
        pieces = [self.lo] + cuts + [self.hi]
        width = self.hi - self.lo
        total = 0.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            val, _ = integrate.quad(lambda y: f(np.asarray(y)) / width, a, b)
            total += val
        return total

    def expect_shifted(self, f, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        u, w = _gl_unit_rule()
        j = self.quantile(u)
        return (f(z[:, None] + j[None, :]) * w[None, :]).sum(axis=1)

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=n)

    def sample_sums(self, counts, rng):
        counts = np.asarray(counts)
        out = np.zeros(counts.shape, dtype=float)
        for c in np.unique(counts):
            if c == 0:
                continue
            idx = counts == c
            out[idx] = rng.uniform(self.lo, self.hi, size=(int(idx.sum()), int(c))).sum(axis=1)
        return out


@dataclass(frozen=True, eq=False)
class DiscreteJumps(JumpSizeDistribution):
    """Finitely many atoms; probabilities must sum to 1."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        order = np.argsort(loc)
        loc, w = loc[order], w[order]
        if loc.size == 0:
            raise ValueError("need at least one atom")
        if np.any(np.diff(loc) == 0):
            raise ValueError("atom locations must be distinct")
        if np.any(loc == 0.0):
            raise ValueError("no atom at 0 allowed")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("atom weights must sum to 1")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w / w.sum())

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.locations, x, side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        out = cum[idx]
        return float(out) if x.ndim == 0 else out

    def upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.locations, x, side="left")
        tail = np.concatenate([np.cumsum(self.weights[::-1])[::-1], [0.0]])
        out = tail[idx]
        return float(out) if x.ndim == 0 else out

    def strict_upper_tail(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.locations, x, side="right")
        tail = np.concatenate([np.cumsum(self.weights[::-1])[::-1], [0.0]])
        out = tail[idx]
        return float(out) if x.ndim == 0 else out

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        cum = np.cumsum(self.weights)
        idx = np.minimum(np.searchsorted(cum, u, side="left"), len(cum) - 1)
        out = self.locations[idx]
        return float(out) if u.ndim == 0 else out

    def mean(self) -> float:
        return float(np.dot(self.locations, self.weights))

    def second_moment(self) -> float:
        return float(np.dot(self.locations**2, self.weights))

    def atoms(self) -> list[tuple[float, float]]:
        return [(float(a), float(w)) for a, w in zip(self.locations, self.weights)]

    def support(self) -> tuple[float, float]:
        return (float(self.locations[0]), float(self.locations[-1]))

    def expect(self, f, breaks=()) -> float:
        return float(np.dot(f(self.locations), self.weights))

    def expect_shifted(self, f, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return (f(z[:, None] + self.locations[None, :]) * self.weights[None, :]).sum(axis=1)

    def sample(self, n, rng):
        return rng.choice(self.locations, size=n, p=self.weights)

    def sample_sums(self, counts, rng):
        counts = np.asarray(counts)
        out = np.zeros(counts.shape, dtype=float)
        for i, c in enumerate(counts.ravel()):
            if c:
                out.ravel()[i] = self.sample(int(c), rng).sum()
        return out


def point_mass(at: float) -> DiscreteJumps:
    return DiscreteJumps(np.array([at]), np.array([1.0]))
