"""Pathwise coupling from a single-crossing of the jump kernels.

When the kernels cross once at a cut point k, each process decomposes into
a part the two share, surplus jumps that are harmless to the order (X-only
jumps below 0, or Y-only jumps above 0), and a dangerous surplus on the
small side of k that must be paired: every dangerous jump fires only
together with a surplus jump of the other process beyond k, realized by
thinning the latter's events at rate r(t) = D(t)/E(t) <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import PIICharacteristics, align_pair
from .jumps import DiscreteJumps
from .kernels import (
    CompoundPoissonKernel,
    JumpKernel,
    SuperposedKernel,
    TabulatedKernel,
    _TabCell,
    zero_kernel,
)
from .order_conditions import CutPoint
from .piecewise import TimeMeasure
from .rng import substream
from .sampling import CoupledPathSet, _jump_array, _wiener_on_grid, compensator_curve, draw_jumps
from .ito_coupling import _resolve_grid

__all__ = [
    "PairedJumpEvent",
    "CutCouplingPlan",
    "build_plan",
    "simulate_cut_coupled",
    "empirical_compensator",
]

_SPLIT_TOL = 1e-9
_TAB_POINTS = 256
_TAB_FLOOR = 1e-12


@dataclass(frozen=True)
class PairedJumpEvent:
    """One thinning decision: driver jump, companion jump (0 if rejected)."""

    path: int
    tau: float
    y: float
    x: float
    u: float
    accepted: bool


@dataclass(frozen=True)
class CutCouplingPlan:
    """Kernel split at a cut point with per-cell compensation rates.

    ``driver`` carries the surplus beyond the cut (Y's for k > 0, X's for
    k < 0); ``companion`` the dangerous surplus on the small side of the
    cut, fired only alongside an accepted driver event.  ``safe_x`` and
    ``safe_y`` are surpluses that preserve the order on their own.
    """

    cut: CutPoint
    clock: TimeMeasure
    breakpoints: np.ndarray
    common: JumpKernel
    driver: JumpKernel
    companion: JumpKernel
    safe_x: JumpKernel
    safe_y: JumpKernel
    D: np.ndarray
    E: np.ndarray
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for t, d, e in zip(self.breakpoints, self.D, self.E):
            if self.clock.slope_at(float(t)) > 0 and d > e + _SPLIT_TOL:
                raise ValueError(f"compensation inequality fails at t={t:g}: D={d:g} > E={e:g}")

    def r(self, t) -> np.ndarray:
        """Thinning rate D/E per cell; 1 where there is nothing to thin."""
        idx = np.searchsorted(self.breakpoints, np.asarray(t, dtype=float), side="right") - 1
        d, e = self.D[idx], self.E[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(e > 0, np.minimum(d / np.where(e > 0, e, 1.0), 1.0), 1.0)
        return out

    @property
    def driver_is_y(self) -> bool:
        return self.cut.k > 0


# -- atomic split -------------------------------------------------------------


def _atomic_split(mx: dict, my: dict, cut: CutPoint, t: float):
    """Per-atom split into role -> {location: intensity} maps."""
    k = cut.k
    parts: dict[str, dict] = {n: {} for n in ("common", "driver", "companion", "safe_x", "safe_y")}
    for loc in sorted(set(mx) | set(my)):
        wx, wy = mx.get(loc, 0.0), my.get(loc, 0.0)
        c = min(wx, wy)
        if c > 0:
            parts["common"][loc] = c
        diff = wx - wy
        if abs(diff) <= _SPLIT_TOL * max(1.0, wx, wy):
            continue
        if cut.in_upper(loc):
            if diff > 0:
                raise ValueError(f"kernels are not single-crossing at t={t:g}: X exceeds Y at x={loc:g}")
            if k > 0:
                parts["driver"][loc] = -diff
            else:
                # Y's small down-jumps are dangerous alone; up-jumps are safe
                parts["companion" if loc < 0 else "safe_y"][loc] = -diff
        else:
            if diff < 0:
                raise ValueError(f"kernels are not single-crossing at t={t:g}: Y exceeds X at x={loc:g}")
            if k > 0:
                parts["companion" if loc > 0 else "safe_x"][loc] = diff
            else:
                parts["driver"][loc] = diff
    return parts


# -- continuous split ---------------------------------------------------------


def _pos_table(tail, a: float, b: float | None, t: float, what: str):
    """(xs, tails) for a positive-side part with upper-tail function ``tail``.

    ``b`` = None grows the grid until the tail is negligible; the raw tail
    must be nonincreasing up to _SPLIT_TOL or the kernels do not actually
    cross once.
    """
    top = float(tail(np.asarray(a)))
    if not math.isfinite(top):
        raise ValueError(f"{what} mass is not finite at t={t:g}")
    if top <= _TAB_FLOOR:
        return None
    if b is None:
        b = max(2.0 * a, 1.0)
        for _ in range(200):
            if float(tail(np.asarray(b))) <= _TAB_FLOOR * top:
                break
            b *= 2.0
    xs = np.geomspace(a, b, _TAB_POINTS)
    vals = np.asarray(tail(xs), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{what} mass is not finite at t={t:g}")
    if np.any(np.diff(vals) > _SPLIT_TOL):
        raise ValueError(f"kernels are not single-crossing at t={t:g} in the {what} region")
    return xs, np.minimum.accumulate(np.maximum(vals, 0.0))


def _neg_table(ltail, a: float | None, b: float, t: float, what: str):
    """(xs, ltails) for a negative-side part with lower-tail function ``ltail``."""
    bot = float(ltail(np.asarray(b)))
    if not math.isfinite(bot):
        raise ValueError(f"{what} mass is not finite at t={t:g}")
    if bot <= _TAB_FLOOR:
        return None
    if a is None:
        a = min(2.0 * b, -1.0)
        for _ in range(200):
            if float(ltail(np.asarray(a))) <= _TAB_FLOOR * bot:
                break
            a *= 2.0
    xs = -np.geomspace(-b, -a, _TAB_POINTS)[::-1]
    vals = np.asarray(ltail(xs), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{what} mass is not finite at t={t:g}")
    if np.any(np.diff(vals) < -_SPLIT_TOL):
        raise ValueError(f"kernels are not single-crossing at t={t:g} in the {what} region")
    return xs, np.maximum.accumulate(np.maximum(vals, 0.0))


def _continuous_split(KX: JumpKernel, KY: JumpKernel, cut: CutPoint, t: float):
    """Role -> (pos_table, neg_table) from tail differences at time t."""
    k = cut.k
    TX = lambda x: np.asarray(KX.upper_tail(t, x), dtype=float)
    TY = lambda x: np.asarray(KY.upper_tail(t, x), dtype=float)
    LX = lambda x: np.asarray(KX.lower_tail(t, x), dtype=float)
    LY = lambda x: np.asarray(KY.lower_tail(t, x), dtype=float)
    floor = _TAB_FLOOR
    parts: dict[str, tuple] = {}
    if k > 0:
        tyk, txk = float(TY(np.asarray(k))), float(TX(np.asarray(k)))
        parts["common"] = (
            _pos_table(lambda x: np.where(x >= k, TX(x), TY(x) - tyk + txk), floor, None, t, "common"),
            _neg_table(LY, None, -floor, t, "common"),
        )
        parts["driver"] = (_pos_table(lambda x: TY(x) - TX(x), k, None, t, "driver"), None)
        parts["companion"] = (
            _pos_table(lambda x: (TX(x) - TY(x)) - (txk - tyk), min(floor, k * 1e-6), k, t, "companion"),
            None,
        )
        parts["safe_x"] = (None, _neg_table(lambda x: LX(x) - LY(x), None, -floor, t, "extra"))
        parts["safe_y"] = (None, None)
    else:
        lyk, lxk = float(LY(np.asarray(k))), float(LX(np.asarray(k)))
        parts["common"] = (
            _pos_table(TX, floor, None, t, "common"),
            _neg_table(lambda x: np.where(x <= k, LY(x), LX(x) - lxk + lyk), None, -floor, t, "common"),
        )
        parts["driver"] = (None, _neg_table(lambda x: LX(x) - LY(x), None, k, t, "driver"))
        parts["companion"] = (
            None,
            _neg_table(lambda x: (LY(x) - LX(x)) - (lyk - lxk), k, -min(floor, -k * 1e-6), t, "companion"),
        )
        parts["safe_x"] = (None, None)
        parts["safe_y"] = (_pos_table(lambda x: TY(x) - TX(x), floor, None, t, "extra"), None)
    return parts


# -- assembly -----------------------------------------------------------------


def _cell_gated(rate: float, dist, cell: int, breakpoints: np.ndarray) -> JumpKernel:
    rates = np.zeros(len(breakpoints))
    rates[cell] = rate
    return CompoundPoissonKernel(rates, dist, breakpoints)


def _assemble(parts_per_cell: list[dict], bks: np.ndarray, atomic: bool) -> dict[str, JumpKernel]:
    out = {}
    for name in ("common", "driver", "companion", "safe_x", "safe_y"):
        if atomic:
            pieces = []
            for c, parts in enumerate(parts_per_cell):
                atoms = parts[name]
                rate = sum(atoms.values())
                if rate <= 0:
                    continue
                locs = np.array(sorted(atoms))
                w = np.array([atoms[l] for l in locs]) / rate
                pieces.append(_cell_gated(rate, DiscreteJumps(locs, w), c, bks))
            out[name] = pieces[0] if len(pieces) == 1 else SuperposedKernel(pieces) if pieces else zero_kernel()
        else:
            cells, any_mass = [], False
            for parts in parts_per_cell:
                pos, neg = parts[name]
                cells.append(_TabCell(
                    pos[0] if pos else (), pos[1] if pos else (),
                    neg[0] if neg else (), neg[1] if neg else (),
                ))
                any_mass = any_mass or pos is not None or neg is not None
            out[name] = TabulatedKernel(cells, bks) if any_mass else zero_kernel()
    return out


def build_plan(charX: PIICharacteristics, charY: PIICharacteristics, cut: CutPoint) -> CutCouplingPlan:
    """Split the two kernels at the cut and precompute thinning rates.

    Works cell by cell on the merged time breakpoints: exact atom
    differences for purely atomic kernels, tabulated tail differences for
    continuous ones.  Mixing the two is not supported, a cut at 0 needs no
    pairing, and D > E on a clock-active cell fails loudly.
    """
    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    if len(charX.fixed_jumps) or len(charY.fixed_jumps):
        raise ValueError("fixed-time jumps are not supported by this coupling")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    KX, KY = charX.kernel, charY.kernel
    k, inc_k = cut.k, cut.upper_includes_k
    if k == 0:
        raise ValueError("a cut at 0 needs no pairing; use the tail-inverse coupling")
    bks = np.union1d(np.union1d(KX.time_breakpoints(), KY.time_breakpoints()), A.breakpoints)
    parts_per_cell, D, E = [], [], []
    atomic = None
    for t in bks:
        t = float(t)
        ax, ay = KX.atoms(t), KY.atoms(t)
        this_atomic = ax is not None and ay is not None
        if not this_atomic and not (ax is None and ay is None):
            raise ValueError("kernels do not expose comparable densities or atoms")
        if atomic is None:
            atomic = this_atomic
        elif atomic != this_atomic:
            raise ValueError("kernels do not expose comparable densities or atoms")
        if this_atomic:
            parts_per_cell.append(_atomic_split(dict(ax), dict(ay), cut, t))
        else:
            if KX.density(t, np.array([1.0])) is None or KY.density(t, np.array([1.0])) is None:
                raise ValueError("kernels do not expose comparable densities or atoms")
            parts_per_cell.append(_continuous_split(KX, KY, cut, t))
        # exact extra masses straight from the original kernels
        if k > 0:
            d = KX.interval_mass(t, 0.0, k, include_left=False, include_right=not inc_k) - \
                KY.interval_mass(t, 0.0, k, include_left=False, include_right=not inc_k)
            e = KY.interval_mass(t, k, math.inf, include_left=inc_k) - \
                KX.interval_mass(t, k, math.inf, include_left=inc_k)
        else:
            d = KY.interval_mass(t, k, 0.0, include_left=not inc_k, include_right=False) - \
                KX.interval_mass(t, k, 0.0, include_left=not inc_k, include_right=False)
            e = KX.interval_mass(t, -math.inf, k, include_right=not inc_k) - \
                KY.interval_mass(t, -math.inf, k, include_right=not inc_k)
        if not (math.isfinite(d) and math.isfinite(e)):
            raise ValueError(f"extra masses are not finite at t={t:g}")
        D.append(max(d, 0.0))
        E.append(max(e, 0.0))
    kernels = _assemble(parts_per_cell, bks, bool(atomic))
    return CutCouplingPlan(
        cut=cut,
        clock=A,
        breakpoints=bks,
        D=np.asarray(D),
        E=np.asarray(E),
        details={"atomic": bool(atomic)},
        **kernels,
    )


# -- simulation ---------------------------------------------------------------


def _part_compensator(kernel: JumpKernel, char: PIICharacteristics, T: float, eps: float = 0.0):
    """h-compensator curve of a split part against the shared clock."""
    shell = PIICharacteristics(
        kernel=kernel,
        time_measure=char.time_measure,
        truncation=char.truncation,
    )
    return compensator_curve(shell, T, eps)


def simulate_cut_coupled(
    plan: CutCouplingPlan,
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    T: float,
    grid,
    n_paths: int,
    seed: int = 0,
    epsilon_jump: float | None = None,
) -> CoupledPathSet:
    """Pathwise-ordered simulation along the plan's split.

    Common jumps and the Wiener part are shared; driver events carry an
    accepted companion jump for the other process with probability r(t).
    ``epsilon_jump`` floors the common part when it has infinite activity;
    the extras are finite by compensation and always kept in full.
    """
    if not charX.gaussian.equal(charY.gaussian):
        raise ValueError("coupled simulation requires a shared Gaussian variance")
    if len(charX.fixed_jumps) or len(charY.fixed_jumps):
        raise ValueError("fixed-time jumps are not supported by this coupling")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    grid = _resolve_grid(grid, T)
    eps_common = 0.0
    if not plan.common.is_finite_activity():
        if epsilon_jump is None:
            raise ValueError("infinite-activity common part requires epsilon_jump")
        eps_common = float(epsilon_jump)
    # compensators of what is actually simulated, per process; accepted
    # companions fire at rate E * r = D, the companion kernel's own mass
    comp_common = _part_compensator(plan.common, charX, T, eps_common)
    if plan.driver_is_y:
        comp_x = comp_common + _part_compensator(plan.companion, charX, T) + _part_compensator(plan.safe_x, charX, T)
        comp_y = comp_common + _part_compensator(plan.driver, charY, T) + _part_compensator(plan.safe_y, charY, T)
    else:
        comp_x = comp_common + _part_compensator(plan.driver, charX, T) + _part_compensator(plan.safe_x, charX, T)
        comp_y = comp_common + _part_compensator(plan.companion, charY, T) + _part_compensator(plan.safe_y, charY, T)
    base_x = charX.drift(grid) - comp_x(grid)
    base_y = charY.drift(grid) - comp_y(grid)
    X = np.empty((n_paths, grid.size))
    Y = np.empty((n_paths, grid.size))
    jrows_x, jrows_y, pair_rows = [], [], []
    for p in range(n_paths):
        rng = substream(seed, p)
        ct, cs = draw_jumps(plan.common, A, T, rng, eps_common)
        dt_, ds = draw_jumps(plan.driver, A, T, rng, 0.0)
        us = rng.uniform(size=len(dt_))
        acc = us <= plan.r(dt_)
        comp_sizes = np.zeros(len(dt_))
        for i in np.where(acc)[0]:
            comp_sizes[i] = plan.companion.sample_sizes(float(dt_[i]), 1, rng)[0]
        sx_t, sx_s = draw_jumps(plan.safe_x, A, T, rng, 0.0)
        sy_t, sy_s = draw_jumps(plan.safe_y, A, T, rng, 0.0)
        if plan.driver_is_y:
            x_t = np.concatenate([ct, dt_[acc], sx_t])
            x_s = np.concatenate([cs, comp_sizes[acc], sx_s])
            y_t = np.concatenate([ct, dt_, sy_t])
            y_s = np.concatenate([cs, ds, sy_s])
            pair_rows.extend(zip([p] * len(dt_), dt_, ds, comp_sizes, us, acc))
        else:
            x_t = np.concatenate([ct, dt_, sx_t])
            x_s = np.concatenate([cs, ds, sx_s])
            y_t = np.concatenate([ct, dt_[acc], sy_t])
            y_s = np.concatenate([cs, comp_sizes[acc], sy_s])
            pair_rows.extend(zip([p] * len(dt_), dt_, comp_sizes, ds, us, acc))
        w = _wiener_on_grid(charX.gaussian, grid, rng)
        X[p] = base_x + w + _event_sums(grid, x_t, x_s)
        Y[p] = base_y + w + _event_sums(grid, y_t, y_s)
        jrows_x.extend((p, t, s) for t, s in zip(x_t, x_s) if s != 0.0)
        jrows_y.extend((p, t, s) for t, s in zip(y_t, y_s) if s != 0.0)
    pair_dtype = [
        ("path", np.int64), ("tau", np.float64), ("y", np.float64),
        ("x", np.float64), ("u", np.float64), ("accepted", np.bool_),
    ]
    return CoupledPathSet(
        time_grid=grid,
        X=X,
        Y=Y,
        jumps_x=_jump_array(jrows_x),
        jumps_y=_jump_array(jrows_y),
        seed=seed,
        metadata={
            "coupling": "single-cut",
            "cut": plan.cut.k,
            "side": plan.cut.side,
            "epsilon_jump": eps_common,
            "T": T,
        },
        paired_log=np.array(pair_rows, dtype=pair_dtype) if pair_rows else np.empty(0, dtype=pair_dtype),
    )


def _event_sums(grid, times, sizes):
    if len(times) == 0:
        return np.zeros(len(grid))
    order = np.argsort(times, kind="stable")
    csum = np.concatenate([[0.0], np.cumsum(np.asarray(sizes)[order])])
    return csum[np.searchsorted(np.asarray(times)[order], grid, side="right")]


def empirical_compensator(
    paths: CoupledPathSet,
    char: PIICharacteristics,
    box: tuple[tuple[float, float], tuple[float, float]],
    process: str = "X",
) -> tuple[float, float, float]:
    """Mean jump count in a time-size box against its exact compensator.

    Returns (empirical mean count per path, exact integral, z-score).  The
    size interval must be bounded away from 0: jumps of vanishing size are
    not events of the path.
    """
    (t0, t1), (a, b) = box
    if not (t0 < t1):
        raise ValueError("time window must have positive length")
    if a > b or a <= 0 <= b:
        raise ValueError("size interval must be bounded away from 0")
    jumps = paths.jumps_x if process.upper() == "X" else paths.jumps_y
    counts = np.zeros(paths.n_paths)
    sel = (jumps["tau"] > t0) & (jumps["tau"] <= t1) & (jumps["size"] >= a) & (jumps["size"] <= b)
    for pth, n in zip(*np.unique(jumps["path"][sel], return_counts=True)):
        counts[int(pth)] = n
    A = char.time_measure
    K = char.kernel
    edges = np.union1d(K.time_breakpoints(), A.breakpoints)
    edges = np.union1d(edges, [t0, t1])
    edges = edges[(edges >= t0) & (edges <= t1)]
    exact = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        exact += K.interval_mass(float(lo), a, b, include_left=True, include_right=True) * A.increment(lo, hi)
    se = counts.std(ddof=1) / math.sqrt(len(counts)) if len(counts) > 1 else 0.0
    mean = float(counts.mean())
    z = (mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf * np.sign(mean - exact))
    return mean, exact, float(z)
