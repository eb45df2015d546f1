"""Shared-randomness coupling through generalized tail inverses.

One Poisson cloud of reference points with intensity dA_t dx/x^2 (marks
truncated at deltas) drives both processes: each point (tau, x) maps to a
jump of size rho(tau, x), where rho is the generalized inverse of the
kernel tail at level 1/|x|.  Tail dominance makes rho^X <= rho^Y pointwise,
so with a shared Wiener part and the drift inequality the two paths are
ordered at every time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .characteristics import PIICharacteristics, align_pair
from .kernels import JumpKernel
from .order_conditions import TruncationLadder, check_drift, check_st_tails
from .piecewise import TimeMeasure
from .rng import substream
from .sampling import CoupledPathSet, _jump_array, _wiener_on_grid, compensator_curve

__all__ = [
    "Window",
    "ReferencePoints",
    "ItoMap",
    "ito_map",
    "sample_reference",
    "truncation_for",
    "simulate_coupled",
    "pushforward_check",
]


class Window(NamedTuple):
    """Simulation horizon and reference-mark truncations."""

    T: float
    delta_plus: float
    delta_minus: float


@dataclass(frozen=True)
class ReferencePoints:
    """One realization of the reference Poisson cloud, sorted by time."""

    times: np.ndarray
    marks: np.ndarray
    window: Window

    def __post_init__(self):
        if np.any(self.marks == 0.0):
            raise ValueError("reference marks live on R without 0")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("reference points must be time-sorted")

    def __len__(self) -> int:
        return len(self.times)


class ItoMap:
    """rho(t, x): the jump size a reference mark x produces under a kernel.

    For x > 0: sup{y >= 0 : K(t, [y, inf)) >= 1/x} (sup of the empty set
    is 0); mirrored through the lower tail for x < 0; rho(t, 0) = 0.
    """

    def __init__(self, kernel: JumpKernel, tol: float = 1e-10):
        self.kernel = kernel
        self.tol = tol

    def at_cell(self, t: float, x) -> np.ndarray:
        """Vectorized map at a fixed time (single kernel cell)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        pos = x > 0
        if np.any(pos):
            out[pos] = self.kernel.inverse_upper_tail(t, 1.0 / x[pos], tol=self.tol)
        neg = x < 0
        if np.any(neg):
            out[neg] = -np.asarray(self.kernel.inverse_lower_tail(t, -1.0 / x[neg], tol=self.tol))
        return out

    def __call__(self, times, marks) -> np.ndarray:
        """Map event marks, grouping by the kernel's time cells."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        marks = np.atleast_1d(np.asarray(marks, dtype=float))
        out = np.zeros_like(marks)
        bks = self.kernel.time_breakpoints()
        cells = np.searchsorted(bks, times, side="right") - 1
        for c in np.unique(cells):
            mask = cells == c
            out[mask] = self.at_cell(float(bks[c]), marks[mask])
        return out


def ito_map(kernel: JumpKernel, t: float, x: float) -> float:
    """Scalar generalized tail inverse; x = 0 maps to 0."""
    if x == 0.0:
        return 0.0
    return float(ItoMap(kernel).at_cell(t, [x])[0])


def sample_reference(A: TimeMeasure, window: Window, rng_seed) -> ReferencePoints:
    """Poisson cloud with mean A_T (1/delta+ + 1/delta-); times through the
    inverse clock, mark magnitudes delta/U (truncated 1-stable tails)."""
    window = Window(*window)
    if window.delta_plus <= 0 or window.delta_minus <= 0:
        raise ValueError("mark truncations must be positive")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else substream(int(rng_seed))
    a_total = A(window.T)
    rate_pos = 1.0 / window.delta_plus   # may be 0 when delta is inf
    rate_neg = 1.0 / window.delta_minus
    lam = a_total * (rate_pos + rate_neg)
    n = int(rng.poisson(lam)) if lam > 0 else 0
    if n == 0:
        return ReferencePoints(np.empty(0), np.empty(0), window)
    times = A.inverse(rng.uniform(0.0, a_total, size=n))
    signs = np.where(rng.uniform(size=n) * (rate_pos + rate_neg) < rate_pos, 1.0, -1.0)
    deltas = np.where(signs > 0, window.delta_plus, window.delta_minus)
    marks = signs * deltas / rng.uniform(size=n)
    order = np.argsort(times, kind="stable")
    return ReferencePoints(times[order], marks[order], window)


def truncation_for(
    kernel: JumpKernel,
    epsilon_jump: float,
    T: float,
    A: TimeMeasure | None = None,
) -> tuple[float, float, float]:
    """Mark truncations capturing every jump of size >= epsilon_jump.

    delta+ = 1 / sup_{t<=T} K(t, [eps, inf)): reference marks below delta+
    can never map to a jump >= eps.  bias_bound is the compensator mass of
    the neglected small jumps, integrated against the clock (Lebesgue when
    A is omitted); inf when small jumps are non-summable.
    """
    if epsilon_jump <= 0:
        raise ValueError("epsilon_jump must be positive")
    if A is None:
        A = TimeMeasure.lebesgue()
    bks = kernel.time_breakpoints()
    cells = np.append(bks[bks < T], T)
    sup_pos = max(float(kernel.upper_tail(t, epsilon_jump)) for t in cells[:-1])
    sup_neg = max(float(kernel.lower_tail(t, -epsilon_jump)) for t in cells[:-1])
    delta_plus = 1.0 / sup_pos if sup_pos > 0 else math.inf
    delta_minus = 1.0 / sup_neg if sup_neg > 0 else math.inf
    bias = 0.0
    grid = np.union1d(cells, A.breakpoints[A.breakpoints < T])
    grid = np.append(grid[grid < T], T)
    for lo, hi in zip(grid[:-1], grid[1:]):
        da = A.increment(lo, hi)
        if da:
            bias += kernel.small_jump_abs_moment(lo, epsilon_jump) * da
    return delta_plus, delta_minus, bias


def _resolve_grid(grid, T: float) -> np.ndarray:
    if np.ndim(grid) == 0:
        return np.linspace(0.0, T, int(grid) + 1)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > T:
        raise ValueError("grid must be increasing within [0, T]")
    return grid


def _mark_eps(kernel: JumpKernel, T: float, epsilon_jump: float | None):
    """Per-process jump floor: 0 for finite activity, epsilon otherwise."""
    if kernel.is_finite_activity():
        return 0.0
    if epsilon_jump is None:
        raise ValueError("infinite-activity kernel requires epsilon_jump")
    return float(epsilon_jump)


def simulate_coupled(
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    T: float,
    grid,
    n_paths: int,
    epsilon_jump: float | None = None,
    seed: int = 0,
    force: bool = False,
) -> CoupledPathSet:
    """Pathwise-ordered simulation of the pair through one reference cloud.

    Requires a shared Gaussian variance and no fixed-time jumps; checks
    tail dominance and the drift inequality first unless ``force``.
    """
    if not charX.gaussian.equal(charY.gaussian):
        raise ValueError("coupled simulation requires a shared Gaussian variance")
    if len(charX.fixed_jumps) or len(charY.fixed_jumps):
        raise ValueError("fixed-time jumps are not supported by this coupling")
    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    grid = _resolve_grid(grid, T)
    eps_x = _mark_eps(charX.kernel, T, epsilon_jump)
    eps_y = _mark_eps(charY.kernel, T, epsilon_jump)
    if not force:
        tails = check_st_tails(charX.kernel, charY.kernel, A)
        ladder_eps = max(eps_x, eps_y)
        ladder = TruncationLadder((ladder_eps,)) if ladder_eps > 0 else None
        drift = check_drift(charX, charY, ladder=ladder, times=grid)
        failed = [r.theorem for r in (tails, drift) if r.verdict != "satisfied"]
        if failed:
            raise ValueError(f"order preconditions not satisfied: {', '.join(failed)}; pass force=True to simulate anyway")
    # mark truncations must capture every jump either process keeps
    dxp, dxm, bias_x = _deltas(charX.kernel, eps_x, T, A)
    dyp, dym, bias_y = _deltas(charY.kernel, eps_y, T, A)
    window = Window(T, min(dxp, dyp), min(dxm, dym))
    map_x, map_y = ItoMap(charX.kernel), ItoMap(charY.kernel)
    comp_x = compensator_curve(charX, T, eps_x)
    comp_y = compensator_curve(charY, T, eps_y)
    base_x = charX.drift(grid) - comp_x(grid)
    base_y = charY.drift(grid) - comp_y(grid)
    X = np.empty((n_paths, grid.size))
    Y = np.empty((n_paths, grid.size))
    jrows_x, jrows_y, ref_rows = [], [], []
    for p in range(n_paths):
        rng = substream(seed, p)
        ref = sample_reference(A, window, rng)
        rho_x = map_x(ref.times, ref.marks) if len(ref) else np.empty(0)
        rho_y = map_y(ref.times, ref.marks) if len(ref) else np.empty(0)
        keep_x = np.abs(rho_x) >= max(eps_x, 1e-300)
        keep_y = np.abs(rho_y) >= max(eps_y, 1e-300)
        w = _wiener_on_grid(charX.gaussian, grid, rng)
        X[p] = base_x + w + _sums(grid, ref.times, rho_x * keep_x)
        Y[p] = base_y + w + _sums(grid, ref.times, rho_y * keep_y)
        jrows_x.extend((p, t, s) for t, s in zip(ref.times[keep_x], rho_x[keep_x]))
        jrows_y.extend((p, t, s) for t, s in zip(ref.times[keep_y], rho_y[keep_y]))
        ref_rows.extend(zip([p] * len(ref), ref.times, ref.marks, rho_x, rho_y))
    ref_dtype = [("path", np.int64), ("tau", np.float64), ("mark", np.float64), ("rhoX", np.float64), ("rhoY", np.float64)]
    return CoupledPathSet(
        time_grid=grid,
        X=X,
        Y=Y,
        jumps_x=_jump_array(jrows_x),
        jumps_y=_jump_array(jrows_y),
        seed=seed,
        metadata={
            "coupling": "tail-inverse",
            "epsilon_jump": epsilon_jump if epsilon_jump is not None else 0.0,
            "delta_plus": window.delta_plus,
            "delta_minus": window.delta_minus,
            "bias_bound_x": bias_x,
            "bias_bound_y": bias_y,
            "T": T,
        },
        reference_log=np.array(ref_rows, dtype=ref_dtype) if ref_rows else np.empty(0, dtype=ref_dtype),
    )


def _deltas(kernel: JumpKernel, eps: float, T: float, A: TimeMeasure):
    """(delta+, delta-, bias): exact full-mass truncations when eps = 0."""
    if eps > 0:
        return truncation_for(kernel, eps, T, A)
    bks = kernel.time_breakpoints()
    cells = np.append(bks[bks < T], T)
    sup_pos = max(float(kernel.positive_mass(t)) for t in cells[:-1])
    sup_neg = max(float(kernel.negative_mass(t)) for t in cells[:-1])
    dp = 1.0 / sup_pos if sup_pos > 0 else math.inf
    dm = 1.0 / sup_neg if sup_neg > 0 else math.inf
    return dp, dm, 0.0


def _sums(grid, times, sizes):
    if len(times) == 0:
        return np.zeros(len(grid))
    csum = np.concatenate([[0.0], np.cumsum(sizes)])
    return csum[np.searchsorted(times, grid, side="right")]


def pushforward_check(
    mapping: ItoMap,
    A: TimeMeasure,
    window: Window,
    G: tuple[float, float],
    n_samples: int,
    seed: int,
) -> tuple[float, float, float]:
    """Monte-Carlo check that mapped reference points hit G at kernel rate.

    Returns (empirical, exact, z) where both rates are per unit of clock
    time, averaged over [0, T].
    """
    window = Window(*window)
    a, b = float(G[0]), float(G[1])
    if a > b:
        raise ValueError("interval endpoints out of order")
    if a <= 0 <= b:
        raise ValueError("interval must be bounded away from 0")
    a_total = A(window.T)
    if a_total <= 0:
        raise ValueError("clock has no mass on the window")
    lam = 1.0 / window.delta_plus + 1.0 / window.delta_minus
    rng = substream(int(seed))
    times = A.inverse(rng.uniform(0.0, a_total, size=n_samples))
    rate_pos = 1.0 / window.delta_plus
    signs = np.where(rng.uniform(size=n_samples) * lam < rate_pos, 1.0, -1.0)
    deltas = np.where(signs > 0, window.delta_plus, window.delta_minus)
    marks = signs * deltas / rng.uniform(size=n_samples)
    mapped = mapping(times, marks)
    hits = (mapped >= a) & (mapped <= b)
    p_hat = float(np.mean(hits))
    empirical = p_hat * lam
    se = lam * math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / n_samples)
    kernel = mapping.kernel
    bks = np.union1d(kernel.time_breakpoints(), A.breakpoints)
    edges = np.append(bks[bks < window.T], window.T)
    exact = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        exact += kernel.interval_mass(lo, a, b, include_left=True, include_right=True) * A.increment(lo, hi)
    exact /= a_total
    z = (empirical - exact) / se if se > 0 else math.inf * np.sign(empirical - exact) if empirical != exact else 0.0
    return empirical, exact, z
