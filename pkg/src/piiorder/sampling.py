"""Path simulation infrastructure shared by the coupling constructions.

Direct (uncoupled) simulation of a single PII, vectorized increment
sampling for Monte-Carlo estimators, jump-time drawing against a clock,
and the CoupledPathSet container with CSV output.

Conventions: a path is assembled as
``drift - truncated-jump compensator + Wiener part + jump sums``
with jumps below ``epsilon_jump`` dropped and their neglected compensator
reported as a bias bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .characteristics import PIICharacteristics, decompose, h_compensator
from .kernels import CompoundPoissonKernel, JumpKernel, SuperposedKernel
from .piecewise import PiecewiseLinear, TimeMeasure
from .rng import substream

__all__ = [
    "PathSet",
    "CoupledPathSet",
    "cumulative_mass",
    "draw_jumps",
    "compensator_curve",
    "simulate_direct",
    "sample_increments",
]

JUMP_COLUMNS = ("path", "tau", "size")


def _jump_array(rows) -> np.ndarray:
    dtype = [("path", np.int64), ("tau", np.float64), ("size", np.float64)]
    arr = np.array(rows, dtype=dtype) if rows else np.empty(0, dtype=dtype)
    return arr


@dataclass
class PathSet:
    """Simulated paths of a single process on a fixed grid."""

    time_grid: np.ndarray
    paths: np.ndarray
    jumps: np.ndarray
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]


@dataclass
class CoupledPathSet:
    """Jointly simulated (X, Y) paths plus per-event coupling records."""

    time_grid: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    jumps_x: np.ndarray
    jumps_y: np.ndarray
    seed: int
    metadata: dict = field(default_factory=dict)
    reference_log: np.ndarray | None = None
    paired_log: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]

    def violations(self, tolerance: float = 1e-9) -> int:
        """Number of (path, grid time) points with X above Y."""
        return int(np.sum(self.X > self.Y + tolerance))

    def max_violation(self) -> float:
        return float(np.max(self.X - self.Y))

    def _comment_header(self, no_timestamp: bool) -> list[str]:
        lines = [f"# seed: {self.seed}"]
        for key in sorted(self.metadata):
            lines.append(f"# {key}: {self.metadata[key]}")
        if not no_timestamp:
            lines.append(f"# generated: {datetime.now(timezone.utc).isoformat()}")
        return lines

    def write_paths_csv(self, path, no_timestamp: bool = False):
        with open(Path(path), "w", newline="") as fh:
            for line in self._comment_header(no_timestamp):
                fh.write(line + "\n")
            writer = csv.writer(fh)
            writer.writerow(["path", "t", "X", "Y"])
            for p in range(self.n_paths):
                for j, t in enumerate(self.time_grid):
                    writer.writerow([p, f"{t:.12g}", f"{self.X[p, j]:.12g}", f"{self.Y[p, j]:.12g}"])

    def write_jumps_csv(self, path, no_timestamp: bool = False):
        """Sidecar with per-event records; falls back to plain jump lists."""
        with open(Path(path), "w", newline="") as fh:
            for line in self._comment_header(no_timestamp):
                fh.write(line + "\n")
            writer = csv.writer(fh)
            if self.reference_log is not None:
                writer.writerow(["path", "tau", "mark", "rhoX", "rhoY"])
                for row in self.reference_log:
                    writer.writerow([int(row["path"])] + [f"{row[k]:.12g}" for k in ("tau", "mark", "rhoX", "rhoY")])
            elif self.paired_log is not None:
                writer.writerow(["path", "tau", "y", "x", "u", "accepted"])
                for row in self.paired_log:
                    writer.writerow(
                        [int(row["path"])]
                        + [f"{row[k]:.12g}" for k in ("tau", "y", "x", "u")]
                        + [int(row["accepted"])]
                    )
            else:
                writer.writerow(["process", "path", "tau", "size"])
                for name, arr in (("X", self.jumps_x), ("Y", self.jumps_y)):
                    for row in arr:
                        writer.writerow([name, int(row["path"]), f"{row['tau']:.12g}", f"{row['size']:.12g}"])


# -- jump-time machinery ------------------------------------------------------------


def cumulative_mass(kernel: JumpKernel, A: TimeMeasure, eps: float = 0.0) -> TimeMeasure:
    """Clock of total jump intensity: slope = K(t, {|y| >= eps}) * dA/dt."""
    bks = np.union1d(A.breakpoints, kernel.time_breakpoints())
    slopes = np.array([kernel.mass_outside(b, eps) * A.slope_at(b) for b in bks])
    if np.any(~np.isfinite(slopes)):
        raise ValueError("infinite jump intensity: supply a positive epsilon_jump")
    return TimeMeasure(bks, slopes)


def draw_jumps(
    kernel: JumpKernel, A: TimeMeasure, T: float, rng: np.random.Generator, eps: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """One Poisson draw of jump (times, sizes) on (0, T], sizes >= eps only."""
    intensity = cumulative_mass(kernel, A, eps)
    total = intensity(T)
    n = int(rng.poisson(total)) if total > 0 else 0
    if n == 0:
        return np.empty(0), np.empty(0)
    times = np.sort(intensity.inverse(rng.uniform(0.0, total, size=n)))
    sizes = np.empty(n)
    cell_of = np.searchsorted(kernel.time_breakpoints(), times, side="right") - 1
    for c in np.unique(cell_of):
        mask = cell_of == c
        t_cell = kernel.time_breakpoints()[c]
        sizes[mask] = kernel.sample_sizes(t_cell, int(mask.sum()), rng, eps=eps)
    return times, sizes


def compensator_curve(char: PIICharacteristics, T: float, eps: float = 0.0) -> PiecewiseLinear:
    """Truncated-jump compensator as an explicit piecewise-linear function."""
    knots = char.cell_grid(T)
    if knots[0] > 0.0:
        knots = np.insert(knots, 0, 0.0)
    values = [h_compensator(char, t, eps)[0] for t in knots]
    return PiecewiseLinear.from_points(list(zip(knots, values)))


def small_jump_bias(char: PIICharacteristics, T: float, eps: float) -> float:
    """int_0^T int_{|y|<eps} |y| K dA: compensator mass neglected below eps."""
    if eps == 0.0:
        return 0.0
    total = 0.0
    grid = char.cell_grid(T)
    for lo, hi in zip(grid[:-1], grid[1:]):
        da = char.time_measure.increment(lo, hi)
        if da:
            total += char.kernel.small_jump_abs_moment(lo, eps) * da
    return total


def _jump_sums_on_grid(grid, times, sizes) -> np.ndarray:
    """Cumulative jump sums evaluated at each grid time (jumps at tau <= t)."""
    if len(times) == 0:
        return np.zeros(len(grid))
    csum = np.concatenate([[0.0], np.cumsum(sizes)])
    return csum[np.searchsorted(times, grid, side="right")]


def _wiener_on_grid(gaussian: PiecewiseLinear, grid, rng) -> np.ndarray:
    edges = np.concatenate([[0.0], grid])
    var = np.maximum(np.diff(gaussian(edges)), 0.0)
    return np.cumsum(rng.normal(0.0, np.sqrt(var)))


def simulate_direct(
    char: PIICharacteristics,
    T: float,
    grid,
    n_paths: int,
    seed: int,
    epsilon_jump: float | None = None,
    stream: tuple[int, ...] = (),
) -> PathSet:
    """Independent paths of one process; jumps below epsilon_jump dropped with
    their compensator, recorded as metadata['bias_bound'].

    ``stream`` prefixes the per-path derivation keys so that several
    process simulations under one master seed stay independent.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > T:
        raise ValueError("grid must be increasing within [0, T]")
    eps = 0.0 if epsilon_jump is None else float(epsilon_jump)
    if eps == 0.0 and not char.kernel.is_finite_activity():
        raise ValueError("infinite-activity kernel requires epsilon_jump")
    qlc, schedule = decompose(char)
    base = qlc.drift(grid) - (compensator_curve(qlc, T, eps))(grid)
    bias = small_jump_bias(char, T, eps)
    paths = np.empty((n_paths, grid.size))
    jump_rows = []
    for p in range(n_paths):
        rng = substream(seed, *stream, p)
        times, sizes = draw_jumps(qlc.kernel, qlc.time_measure, T, rng, eps)
        w = _wiener_on_grid(qlc.gaussian, grid, rng)
        fixed_t, fixed_s = [], []
        for entry in schedule:
            if entry.time <= T:
                fixed_t.append(entry.time)
                fixed_s.append(float(entry.sample(1, rng)[0]))
        if fixed_t:
            order = np.argsort(np.concatenate([times, fixed_t]), kind="stable")
            times = np.concatenate([times, fixed_t])[order]
            sizes = np.concatenate([sizes, fixed_s])[order]
        paths[p] = base + w + _jump_sums_on_grid(grid, times, sizes)
        jump_rows.extend((p, t, s) for t, s in zip(times, sizes) if s != 0.0)
    return PathSet(
        time_grid=grid,
        paths=paths,
        jumps=_jump_array(jump_rows),
        seed=seed,
        metadata={"epsilon_jump": eps, "bias_bound": bias, "T": T},
    )


# -- vectorized increment sampling ---------------------------------------------------


def _cell_edges(char: PIICharacteristics, s: float, t: float) -> np.ndarray:
    grid = char.cell_grid(t)
    grid = grid[(grid > s) & (grid < t)]
    return np.concatenate([[s], grid, [t]])


def _kernel_sums(kernel: JumpKernel, t_cell: float, lam: float, n: int, rng, eps: float) -> np.ndarray:
    """n iid sums of a Poisson(lam) number of kernel-distributed sizes."""
    if lam == 0.0:
        return np.zeros(n)
    counts = rng.poisson(lam, size=n)
    if isinstance(kernel, CompoundPoissonKernel) and eps == 0.0:
        return kernel.dist.sample_sums(counts, rng)
    if isinstance(kernel, SuperposedKernel) and eps == 0.0:
        out = np.zeros(n)
        masses = np.array([max(c.mass(t_cell), 0.0) for c in kernel.components])
        total = masses.sum()
        if total == 0:
            return out
        for comp, m in zip(kernel.components, masses):
            if m > 0:
                out += _kernel_sums(comp, t_cell, lam * m / total, n, rng, eps)
        return out
    total = int(counts.sum())
    if total == 0:
        return np.zeros(n)
    draws = kernel.sample_sizes(t_cell, total, rng, eps=eps)
    out = np.zeros(n)
    np.add.at(out, np.repeat(np.arange(n), counts), draws)
    return out


def sample_increments(
    char: PIICharacteristics,
    s: float,
    t: float,
    n: int,
    rng: np.random.Generator,
    epsilon_jump: float | None = None,
) -> np.ndarray:
    """n iid draws of the increment X_t - X_s (vectorized, no path grid)."""
    if t < s:
        raise ValueError("need s <= t")
    eps = 0.0 if epsilon_jump is None else float(epsilon_jump)
    if eps == 0.0 and not char.kernel.is_finite_activity():
        raise ValueError("infinite-activity kernel requires epsilon_jump")
    qlc, schedule = decompose(char)
    comp = compensator_curve(qlc, t, eps)
    out = np.full(n, float(qlc.drift(t) - qlc.drift(s)) - (comp(t) - comp(s)))
    var = max(float(qlc.gaussian(t) - qlc.gaussian(s)), 0.0)
    if var > 0:
        out += rng.normal(0.0, math.sqrt(var), size=n)
    edges = _cell_edges(qlc, s, t)
    for lo, hi in zip(edges[:-1], edges[1:]):
        lam = qlc.kernel.mass_outside(lo, eps) * qlc.time_measure.increment(lo, hi)
        if not math.isfinite(lam):
            raise ValueError("infinite jump intensity: supply a positive epsilon_jump")
        out += _kernel_sums(qlc.kernel, lo, lam, n, rng, eps)
    for entry in schedule:
        if s < entry.time <= t:
            out += entry.sample(n, rng)
    return out
