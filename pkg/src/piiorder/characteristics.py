"""Characteristic triplets for processes with independent increments.

A process is described by a drift B (cadlag piecewise linear), a Gaussian
variance function C (continuous nondecreasing piecewise linear), a jump
kernel K integrated against a clock A, and a schedule of fixed-time jumps.
The truncation used in compensators is h(y) = y 1{|y| <= threshold}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .jumps import (
    DiscreteJumps,
    ExponentialJumps,
    JumpSizeDistribution,
    UniformJumps,
    point_mass,
)
from .kernels import (
    DEFAULT_THRESHOLD,
    CGMYKernel,
    CompoundPoissonKernel,
    JumpKernel,
    SuperposedKernel,
    TabulatedKernel,
    zero_kernel,
)
from .piecewise import PiecewiseLinear, TimeMeasure

__all__ = [
    "TruncationFunction",
    "FixedJumpEntry",
    "FixedJumpSchedule",
    "PIICharacteristics",
    "decompose",
    "h_compensator",
    "tail",
    "stop_loss",
    "align_pair",
    "combine",
    "load_process_spec",
    "parse_process_spec",
]

_QUAD_CELL_TOL = 1e-10


@dataclass(frozen=True)
class TruncationFunction:
    """h(y) = y 1{|y| <= threshold}: identity near 0, zero beyond."""

    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(np.abs(y) <= self.threshold, y, 0.0)
        return float(out) if out.ndim == 0 else out

    def residual(self, y):
        """y - h(y): the untruncated large-jump part."""
        y = np.asarray(y, dtype=float)
        out = np.where(np.abs(y) > self.threshold, y, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FixedJumpEntry:
    """Jump law at a fixed time: with probability p a draw from ``law``, else 0."""

    time: float
    probability: float
    law: JumpSizeDistribution

    def __post_init__(self):
        if self.time <= 0:
            raise ValueError("fixed jump times must be positive")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")

    def mixture_cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.probability
        return p * np.asarray(self.law.cdf(x)) + (1.0 - p) * (x >= 0.0)

    def mixture_quantile(self, u):
        """Generalized inverse of the mixture cdf (atom at 0 included)."""
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        p = self.probability
        neg_mass = p * float(self.law.cdf(0.0))
        out = np.zeros_like(u)
        low = u <= neg_mass
        if np.any(low) and p > 0:
            out[low] = self.law.quantile(u[low] / p)
        high = u > neg_mass + (1.0 - p)
        if np.any(high) and p > 0:
            out[high] = self.law.quantile((u[high] - (1.0 - p)) / p)
        return float(out[0]) if scalar else out

    def h_mean(self, threshold: float = DEFAULT_THRESHOLD, eps: float = 0.0) -> float:
        h = TruncationFunction(threshold)
        if eps == 0.0:
            f, breaks = h, (-threshold, threshold)
        else:
            def f(y):
                y = np.asarray(y, dtype=float)
                return np.where(np.abs(y) >= eps, h(y), 0.0)

            breaks = tuple(sorted({-threshold, -eps, eps, threshold}))
        return self.probability * self.law.expect(f, breaks=breaks)

    def mean(self) -> float:
        return self.probability * self.law.mean()

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.mixture_quantile(rng.uniform(size=n)))


@dataclass(frozen=True)
class FixedJumpSchedule:
    entries: tuple[FixedJumpEntry, ...] = ()

    def __post_init__(self):
        times = [e.time for e in self.entries]
        order = sorted(range(len(times)), key=times.__getitem__)
        entries = tuple(self.entries[i] for i in order)
        if len(set(times)) != len(times):
            raise ValueError("one entry per fixed time")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def empty(cls) -> "FixedJumpSchedule":
        return cls(())

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.entries])

    def before(self, t_max: float) -> "FixedJumpSchedule":
        return FixedJumpSchedule(tuple(e for e in self.entries if e.time <= t_max))


@dataclass(frozen=True, eq=False)
class PIICharacteristics:
    """Characteristic triplet (B, C, K dA) plus fixed-time jump laws."""

    drift: PiecewiseLinear = field(default_factory=PiecewiseLinear.zero)
    gaussian: PiecewiseLinear = field(default_factory=PiecewiseLinear.zero)
    kernel: JumpKernel = field(default_factory=zero_kernel)
    time_measure: TimeMeasure = field(default_factory=TimeMeasure.lebesgue)
    fixed_jumps: FixedJumpSchedule = field(default_factory=FixedJumpSchedule.empty)
    truncation: TruncationFunction = field(default_factory=TruncationFunction)

    def __post_init__(self):
        if abs(self.drift(0.0)) > 0:
            raise ValueError("drift must start at 0")
        if abs(self.gaussian(0.0)) > 0:
            raise ValueError("Gaussian variance must start at 0")
        if not self.gaussian.is_nondecreasing():
            raise ValueError("Gaussian variance must be nondecreasing")
        if not isinstance(self.fixed_jumps, FixedJumpSchedule):
            entries = tuple(
                e if isinstance(e, FixedJumpEntry) else FixedJumpEntry(*e)
                for e in self.fixed_jumps
            )
            object.__setattr__(self, "fixed_jumps", FixedJumpSchedule(entries))

    @property
    def threshold(self) -> float:
        return self.truncation.threshold

    def is_quasi_left_continuous(self) -> bool:
        return len(self.fixed_jumps) == 0

    def cell_grid(self, t_max: float) -> np.ndarray:
        """Merged kernel/clock breakpoints on [0, t_max]."""
        bks = np.union1d(self.kernel.time_breakpoints(), self.time_measure.breakpoints)
        bks = bks[(bks >= 0) & (bks < t_max)]
        return np.append(bks, float(t_max))


def decompose(char: PIICharacteristics) -> tuple[PIICharacteristics, FixedJumpSchedule]:
    """Split off fixed-time jumps, shifting their h-compensator out of the drift.

    Returns the quasi-left-continuous part (fixed jumps removed, drift
    reduced by the step p_s * E h(J_s) at each fixed time s) and the
    schedule itself.
    """
    if not char.fixed_jumps:
        return char, FixedJumpSchedule.empty()
    steps = []
    for entry in char.fixed_jumps:
        shift = entry.h_mean(char.threshold)
        if not math.isfinite(shift):
            raise ValueError(f"fixed-time jump law at t={entry.time} has no finite h-mean")
        steps.append((entry.time, -shift))
    qlc = PIICharacteristics(
        drift=char.drift.with_steps(steps),
        gaussian=char.gaussian,
        kernel=char.kernel,
        time_measure=char.time_measure,
        fixed_jumps=FixedJumpSchedule.empty(),
        truncation=char.truncation,
    )
    return qlc, char.fixed_jumps


def h_compensator(
    char: PIICharacteristics, t: float, eps: float = 0.0
) -> tuple[float, float]:
    """(int_0^t int h(y) 1{|y| >= eps} K(s, dy) dA_s, quadrature error bound).

    Raises when the compensator integrand diverges (infinite-variation
    kernels with eps = 0).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    total, err = 0.0, 0.0
    atomic = char.kernel.atoms(0.0) is not None
    for lo, hi in _cells(char, t):
        da = char.time_measure.increment(lo, hi)
        if da == 0.0:
            continue
        val = char.kernel.h_integral(lo, char.threshold, eps=eps)
        if not math.isfinite(val):
            raise ValueError("infinite-variation kernel: use truncated ladder")
        total += val * da
        if not atomic:
            err += _QUAD_CELL_TOL * da
    return total, err


def _cells(char: PIICharacteristics, t: float):
    grid = char.cell_grid(t)
    return zip(grid[:-1], grid[1:])


def tail(kernel: JumpKernel, t: float, x: float) -> float:
    """K(t, [x, inf)) for x > 0, K(t, (-inf, x]) for x < 0."""
    if x == 0:
        raise ValueError("tail undefined at 0; query a signed level")
    return float(kernel.upper_tail(t, x)) if x > 0 else float(kernel.lower_tail(t, x))


def stop_loss(kernel: JumpKernel, t: float, x: float) -> float:
    """int (y - x)+ K(t, dy); raises when not finite."""
    val = kernel.stop_loss(t, x)
    if not math.isfinite(val):
        raise ValueError("no finite stop-loss")
    return float(val)


def align_pair(
    x: PIICharacteristics, y: PIICharacteristics
) -> tuple[PIICharacteristics, PIICharacteristics]:
    """Re-express both processes against the shared clock A = A_X + A_Y.

    Kernels are rescaled cell by cell with the slope ratio of their own
    clock against the sum, so the jump measures K dA are unchanged.
    No-op when the clocks already agree.
    """
    if x.time_measure.equal(y.time_measure):
        return x, y
    total = x.time_measure + y.time_measure
    bks = total.breakpoints

    def rescaled(char: PIICharacteristics) -> PIICharacteristics:
        own = np.array([char.time_measure.slope_at(b) for b in bks])
        joint = np.array([total.slope_at(b) for b in bks])
        with np.errstate(invalid="ignore", divide="ignore"):
            factors = np.where(joint > 0, own / np.maximum(joint, 1e-300), 0.0)
        return PIICharacteristics(
            drift=char.drift,
            gaussian=char.gaussian,
            kernel=char.kernel.scaled_piecewise(bks, factors),
            time_measure=total,
            fixed_jumps=char.fixed_jumps,
            truncation=char.truncation,
        )

    return rescaled(x), rescaled(y)


def combine(base: PIICharacteristics, addon: PIICharacteristics) -> PIICharacteristics:
    """Characteristics of the sum of two independent processes."""
    if not base.time_measure.equal(addon.time_measure):
        raise ValueError("align clocks before combining")
    if len(base.fixed_jumps) and len(addon.fixed_jumps):
        raise ValueError("at most one summand may carry fixed-time jumps")
    return PIICharacteristics(
        drift=base.drift + addon.drift,
        gaussian=base.gaussian + addon.gaussian,
        kernel=SuperposedKernel([base.kernel, addon.kernel]),
        time_measure=base.time_measure,
        fixed_jumps=base.fixed_jumps if len(base.fixed_jumps) else addon.fixed_jumps,
        truncation=base.truncation,
    )


# -- JSON process specifications ------------------------------------------------


def _reject_unknown(obj: dict, allowed: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_jump_law(obj: dict) -> JumpSizeDistribution:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError("jump law must be an object with a 'type' tag")
    kind = obj["type"]
    if kind == "exponential":
        _reject_unknown(obj, {"type", "mean", "sign"}, "exponential jump law")
        return ExponentialJumps(mean_size=float(obj.get("mean", 1.0)), sign=int(obj.get("sign", 1)))
    if kind == "uniform":
        _reject_unknown(obj, {"type", "lo", "hi"}, "uniform jump law")
        return UniformJumps(float(obj["lo"]), float(obj["hi"]))
    if kind == "discrete":
        _reject_unknown(obj, {"type", "locations", "weights"}, "discrete jump law")
        return DiscreteJumps(np.asarray(obj["locations"], dtype=float), np.asarray(obj["weights"], dtype=float))
    if kind == "point":
        _reject_unknown(obj, {"type", "at"}, "point jump law")
        return point_mass(float(obj["at"]))
    raise ValueError(f"unknown jump law type {kind!r}")


def _parse_kernel(obj: dict) -> JumpKernel:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValueError("kernel must be an object with a 'family' tag")
    family = obj["family"]
    if family == "compound-poisson":
        _reject_unknown(obj, {"family", "rate", "rates", "breakpoints", "jumps"}, "compound-poisson kernel")
        if "jumps" not in obj:
            raise ValueError("compound-poisson kernel needs a 'jumps' law")
        dist = _parse_jump_law(obj["jumps"])
        if "rates" in obj:
            return CompoundPoissonKernel(
                np.asarray(obj["rates"], dtype=float), dist, np.asarray(obj.get("breakpoints", [0.0]), dtype=float)
            )
        return CompoundPoissonKernel([float(obj.get("rate", 1.0))], dist)
    if family == "cgmy":
        _reject_unknown(obj, {"family", "c", "g", "m", "y", "breakpoints"}, "cgmy kernel")
        bks = np.asarray(obj.get("breakpoints", [0.0]), dtype=float)
        return CGMYKernel(obj["c"], obj["g"], obj["m"], obj["y"], bks)
    if family == "tabulated":
        _reject_unknown(obj, {"family", "cells", "breakpoints"}, "tabulated kernel")
        bks = np.asarray(obj.get("breakpoints", [0.0]), dtype=float)
        cells = []
        for cell in obj["cells"]:
            _reject_unknown(cell, {"x_pos", "tail_pos", "x_neg", "ltail_neg"}, "tabulated cell")
            cells.append(
                TabulatedKernel.from_data(
                    cell.get("x_pos", []), cell.get("tail_pos", []),
                    cell.get("x_neg", []), cell.get("ltail_neg", []),
                ).cells[0]
            )
        return TabulatedKernel(cells, bks)
    if family == "superposed":
        _reject_unknown(obj, {"family", "components"}, "superposed kernel")
        return SuperposedKernel([_parse_kernel(c) for c in obj["components"]])
    raise ValueError(f"unknown kernel family {family!r}")


def parse_process_spec(obj: dict) -> PIICharacteristics:
    """Build characteristics from a plain dict; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise ValueError("process specification must be an object")
    _reject_unknown(
        obj, {"drift", "gaussian", "kernel", "time_measure", "fixed_jumps", "threshold"}, "process spec"
    )
    drift = PiecewiseLinear.from_points(obj["drift"]) if "drift" in obj else PiecewiseLinear.zero()
    gaussian = PiecewiseLinear.from_points(obj["gaussian"]) if "gaussian" in obj else PiecewiseLinear.zero()
    kernel = _parse_kernel(obj["kernel"]) if "kernel" in obj else zero_kernel()
    if "time_measure" in obj:
        tm = obj["time_measure"]
        _reject_unknown(tm, {"breakpoints", "slopes"}, "time_measure")
        clock = TimeMeasure(np.asarray(tm["breakpoints"], dtype=float), np.asarray(tm["slopes"], dtype=float))
    else:
        clock = TimeMeasure.lebesgue()
    entries = []
    for e in obj.get("fixed_jumps", []):
        _reject_unknown(e, {"time", "p", "jumps"}, "fixed jump entry")
        entries.append(FixedJumpEntry(float(e["time"]), float(e.get("p", 1.0)), _parse_jump_law(e["jumps"])))
    trunc = TruncationFunction(float(obj.get("threshold", DEFAULT_THRESHOLD)))
    return PIICharacteristics(
        drift=drift,
        gaussian=gaussian,
        kernel=kernel,
        time_measure=clock,
        fixed_jumps=FixedJumpSchedule(tuple(entries)),
        truncation=trunc,
    )


def load_process_spec(path) -> PIICharacteristics:
    with open(Path(path)) as fh:
        return parse_process_spec(json.load(fh))
