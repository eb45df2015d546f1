"""Piecewise-linear time functions.

Two flavours are used throughout:

* ``PiecewiseLinear``: cadlag piecewise-linear functions of time, used for
  drifts and Gaussian variance functions.  Jumps are allowed (a drift picks
  up steps when fixed-time jumps are compensated away).
* ``TimeMeasure``: a continuous nondecreasing piecewise-linear clock A with
  A_0 = 0, stored via segment slopes.  Kernel intensities are integrated
  against dA.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = ["PiecewiseLinear", "TimeMeasure"]

_EQ_TOL = 1e-12


def _as_farray(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Cadlag piecewise-linear f on [0, inf).

    ``values[i]`` is f(knots[i]) (the post-jump value), ``slopes[i]`` applies
    on [knots[i], knots[i+1]); the last slope extends to infinity.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "knots", _as_farray(self.knots))
        object.__setattr__(self, "values", _as_farray(self.values))
        object.__setattr__(self, "slopes", _as_farray(self.slopes))
        if self.knots.ndim != 1 or self.knots.size == 0:
            raise ValueError("need at least one knot")
        if self.knots[0] != 0.0:
            raise ValueError("first knot must be t = 0")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if self.values.shape != self.knots.shape or self.slopes.shape != self.knots.shape:
            raise ValueError("knots, values and slopes must have equal length")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls([0.0], [0.0], [0.0])

    @classmethod
    def constant_slope(cls, slope: float) -> "PiecewiseLinear":
        return cls([0.0], [0.0], [float(slope)])

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "PiecewiseLinear":
        """Continuous interpolation of (t, value) pairs, last slope extended.

        A single pair gives a constant function.
        """
        pts = _as_farray(points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be (t, value) pairs")
        t, v = pts[:, 0], pts[:, 1]
        if t[0] != 0.0:
            raise ValueError("first breakpoint must be t = 0")
        if len(t) == 1:
            return cls(t, v, [0.0])
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("breakpoint times must be strictly increasing")
        seg = np.diff(v) / dt
        slopes = np.append(seg, seg[-1])
        return cls(t, v, slopes)

    # -- evaluation ----------------------------------------------------

    def __call__(self, t):
        t_arr = _as_farray(t)
        if np.any(t_arr < 0):
            raise ValueError("time must be nonnegative")
        idx = np.searchsorted(self.knots, t_arr, side="right") - 1
        out = self.values[idx] + self.slopes[idx] * (t_arr - self.knots[idx])
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def left_limit(self, t: float) -> float:
        t = float(t)
        if t <= 0:
            raise ValueError("left limit needs t > 0")
        i = int(np.searchsorted(self.knots, t, side="left")) - 1
        return float(self.values[i] + self.slopes[i] * (t - self.knots[i]))

    def jump_times(self) -> list[tuple[float, float]]:
        """(time, jump size) pairs where the function is discontinuous."""
        out = []
        for i in range(1, len(self.knots)):
            t = self.knots[i]
            size = self.values[i] - self.left_limit(t)
            if abs(size) > _EQ_TOL:
                out.append((float(t), float(size)))
        return out

    # -- algebra -------------------------------------------------------

    def _merged_knots(self, other: "PiecewiseLinear") -> np.ndarray:
        return np.union1d(self.knots, other.knots)

    def _resample(self, knots: np.ndarray) -> "PiecewiseLinear":
        idx = np.searchsorted(self.knots, knots, side="right") - 1
        values = self.values[idx] + self.slopes[idx] * (knots - self.knots[idx])
        return PiecewiseLinear(knots, values, self.slopes[idx])

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        k = self._merged_knots(other)
        a, b = self._resample(k), other._resample(k)
        return PiecewiseLinear(k, a.values + b.values, a.slopes + b.slopes)

    def __sub__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "PiecewiseLinear":
        return PiecewiseLinear(self.knots, c * self.values, c * self.slopes)

    def with_steps(self, steps: Iterable[tuple[float, float]]) -> "PiecewiseLinear":
        """Add cadlag steps: size is added to f(t) for t >= step time."""
        steps = [(float(s), float(z)) for s, z in steps if z != 0.0]
        if not steps:
            return self
        step_t = np.array(sorted({s for s, _ in steps}))
        if np.any(step_t <= 0):
            raise ValueError("step times must be positive")
        knots = np.union1d(self.knots, step_t)
        base = self._resample(knots)
        shift = np.zeros_like(knots)
        for s, z in steps:
            shift[knots >= s - _EQ_TOL] += z
        return PiecewiseLinear(knots, base.values + shift, base.slopes)

    def is_nondecreasing(self, tol: float = _EQ_TOL) -> bool:
        if np.any(self.slopes < -tol):
            return False
        return all(size >= -tol for _, size in self.jump_times())

    def equal(self, other: "PiecewiseLinear", tol: float = 1e-12) -> bool:
        k = self._merged_knots(other)
        a, b = self._resample(k), other._resample(k)
        return bool(
            np.allclose(a.values, b.values, atol=tol, rtol=0.0)
            and np.allclose(a.slopes, b.slopes, atol=tol, rtol=0.0)
        )


@dataclass(frozen=True, eq=False)
class TimeMeasure:
    """Continuous nondecreasing piecewise-linear clock with A_0 = 0.

    ``slopes[i]`` is the density of dA on [breakpoints[i], breakpoints[i+1]);
    the last slope extends to infinity.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _as_farray(self.breakpoints))
        object.__setattr__(self, "slopes", _as_farray(self.slopes))
        bp, sl = self.breakpoints, self.slopes
        if bp.ndim != 1 or bp.size == 0 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if sl.shape != bp.shape:
            raise ValueError("one slope per breakpoint segment required")
        if np.any(sl < 0):
            raise ValueError("clock slopes must be nonnegative")
        cum = np.concatenate([[0.0], np.cumsum(sl[:-1] * np.diff(bp))])
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def lebesgue(cls) -> "TimeMeasure":
        return cls([0.0], [1.0])

    def __call__(self, t):
        t_arr = _as_farray(t)
        if np.any(t_arr < 0):
            raise ValueError("time must be nonnegative")
        idx = np.searchsorted(self.breakpoints, t_arr, side="right") - 1
        out = self._cum[idx] + self.slopes[idx] * (t_arr - self.breakpoints[idx])
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def increment(self, s: float, t: float) -> float:
        if t < s:
            raise ValueError("need s <= t")
        return float(self(t) - self(s))

    def slope_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.breakpoints, float(t), side="right")) - 1
        return float(self.slopes[idx])

    def inverse(self, a):
        """Generalized inverse inf{t : A_t >= a}; inf if the level is never hit."""
        a_arr = np.atleast_1d(_as_farray(a))
        if np.any(a_arr < 0):
            raise ValueError("levels must be nonnegative")
        out = np.empty_like(a_arr)
        for j, lvl in enumerate(a_arr):
            i = int(np.searchsorted(self._cum, lvl, side="left"))
            if i == 0:
                out[j] = 0.0
                continue
            i -= 1
            if i == len(self.breakpoints) - 1 and lvl > self._cum[-1]:
                if self.slopes[-1] == 0.0:
                    out[j] = np.inf
                    continue
            if self._cum[i] == lvl:
                out[j] = self.breakpoints[i]
            else:
                out[j] = self.breakpoints[i] + (lvl - self._cum[i]) / self.slopes[i]
        return float(out[0]) if np.isscalar(a) or np.ndim(a) == 0 else out

    def to_pwl(self) -> PiecewiseLinear:
        return PiecewiseLinear(self.breakpoints, self._cum, self.slopes)

    def __add__(self, other: "TimeMeasure") -> "TimeMeasure":
        s = self.to_pwl() + other.to_pwl()
        return TimeMeasure(s.knots, s.slopes)

    def equal(self, other: "TimeMeasure", tol: float = 1e-12) -> bool:
        return self.to_pwl().equal(other.to_pwl(), tol=tol)

    def segment_grid(self, t_max: float) -> np.ndarray:
        """Breakpoints clipped to [0, t_max], including both ends."""
        bp = self.breakpoints[(self.breakpoints > 0) & (self.breakpoints < t_max)]
        return np.concatenate([[0.0], bp, [float(t_max)]])
