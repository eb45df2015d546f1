"""Deterministic checkers for stochastic-order conditions between PIIs.

Each checker evaluates a sufficient condition on explicit time/space grids
and returns an :class:`OrderReport` with witnesses for every violation.
Verdicts are deterministic functions of the inputs and grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .characteristics import PIICharacteristics, h_compensator
from .kernels import JumpKernel
from .piecewise import TimeMeasure

__all__ = [
    "OrderReport",
    "TruncationLadder",
    "CutPoint",
    "Grid",
    "build_grid",
    "check_st_tails",
    "check_drift",
    "check_icx",
    "check_cx",
    "check_cut",
    "check_convex_majorization",
    "kernel_order_defn_check",
]

DEFAULT_TOLERANCE = 1e-9


@dataclass
class OrderReport:
    """Outcome of one order-condition check.

    ``witnesses`` lists (t, x, lhs, rhs) for every grid point where the
    checked inequality lhs <= rhs fails beyond tolerance; the meaning of
    the x slot per checker is recorded in ``details``.
    """

    verdict: str
    theorem: str
    witnesses: list = field(default_factory=list)
    grids_used: str = ""
    tolerance: float = DEFAULT_TOLERANCE
    warnings: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("satisfied", "violated", "inconclusive"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "violated" and not self.witnesses:
            raise ValueError("violated verdicts require witnesses")

    @property
    def satisfied(self) -> bool:
        return self.verdict == "satisfied"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "theorem": self.theorem,
            "witnesses": [list(map(float, w)) for w in self.witnesses],
            "grids_used": self.grids_used,
            "tolerance": self.tolerance,
            "warnings": list(self.warnings),
            "details": _jsonable(self.details),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


@dataclass(frozen=True)
class TruncationLadder:
    """Decreasing jump-size cutoffs; level eps restricts to {|y| >= eps}."""

    epsilons: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps or min(eps) <= 0:
            raise ValueError("ladder levels must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("ladder levels must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def geometric(cls, floor: float, top: float = 1.0, levels: int = 4) -> "TruncationLadder":
        return cls(tuple(np.geomspace(top, floor, levels)))

    def __iter__(self):
        return iter(self.epsilons)


@dataclass(frozen=True)
class CutPoint:
    """Split point k for single-crossing criteria.

    ``side`` fixes which region owns the boundary atom at k:
    right-closed puts k in the upper region [k, inf), left-closed in the
    lower region (-inf, k].
    """

    k: float
    side: str = "right-closed"

    def __post_init__(self):
        if self.side not in ("right-closed", "left-closed"):
            raise ValueError("side must be 'right-closed' or 'left-closed'")
        if not math.isfinite(self.k):
            raise ValueError("cut point must be finite")

    def in_upper(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x >= self.k if self.side == "right-closed" else x > self.k

    @property
    def upper_includes_k(self) -> bool:
        return self.side == "right-closed"


# -- grids ---------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Evaluation grid: times with positive clock slope plus signed x levels."""

    times: np.ndarray
    x: np.ndarray
    description: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.times.size == 0 or self.x.size == 0:
            raise ValueError("degenerate grid")
        if np.any(self.x == 0.0):
            raise ValueError("x grid must exclude 0")

    @property
    def x_pos(self) -> np.ndarray:
        return self.x[self.x > 0]

    @property
    def x_neg(self) -> np.ndarray:
        return self.x[self.x < 0]


def _tail_reach(kernels, times, side: str, cut: float) -> float:
    """Doubling search for the level where every kernel tail drops below cut."""
    hi = 1.0
    for _ in range(120):
        worst = 0.0
        for kern in kernels:
            for t in times:
                tl = kern.upper_tail(t, hi) if side == "pos" else kern.lower_tail(t, -hi)
                worst = max(worst, tl)
        if worst <= cut:
            return hi
        hi *= 2.0
    return hi


def default_horizon(*objs) -> float:
    """1.25x the largest finite breakpoint across kernels/clocks, at least 1."""
    top = 0.0
    for obj in objs:
        bks = obj.breakpoints if isinstance(obj, TimeMeasure) else obj.time_breakpoints()
        finite = [b for b in np.atleast_1d(bks) if math.isfinite(b)]
        if finite:
            top = max(top, max(finite))
    return max(1.0, 1.25 * top)


def build_grid(
    kernels,
    A: TimeMeasure,
    t_max: float | None = None,
    n_x: int = 64,
    n_times: int = 100,
    x_floor: float = 1e-6,
    tail_cut: float = 1e-12,
) -> Grid:
    """Default grid: >= n_times clock-active times on [0, t_max] including all
    breakpoints, and a geometric x-ladder per sign reaching tail <= tail_cut."""
    kernels = list(kernels)
    if t_max is None:
        t_max = default_horizon(A, *kernels)
    bks = np.concatenate([A.breakpoints] + [k.time_breakpoints() for k in kernels])
    bks = bks[(bks >= 0) & (bks <= t_max)]
    times = np.union1d(np.linspace(0.0, t_max, n_times + 1), bks)
    active = np.array([A.slope_at(min(t, t_max - 1e-12)) > 0 for t in times])
    if np.any(active):
        times = times[active]
    probe = np.unique(np.concatenate([bks, [0.0, t_max]]))
    x_hi_pos = _tail_reach(kernels, probe, "pos", tail_cut)
    x_hi_neg = _tail_reach(kernels, probe, "neg", tail_cut)
    xs = np.concatenate(
        [np.geomspace(x_floor, max(x_hi_pos, 2 * x_floor), n_x),
         -np.geomspace(x_floor, max(x_hi_neg, 2 * x_floor), n_x)]
    )
    return Grid(times, np.sort(xs), description=f"default geometric {n_x}/sign, {len(times)} times on [0,{t_max:g}]")


def _margin_verdict(margins: list, witnesses: list, warnings: list, tol: float):
    """satisfied / satisfied-with-warning / violated from signed margins."""
    if witnesses:
        return "violated"
    worst = min(margins) if margins else 0.0
    if worst < 0:
        warnings.append(
            f"minimum margin {worst:.3e} within tolerance of violation; treated as satisfied"
        )
    return "satisfied"


def _cap_witnesses(witnesses: list, cap: int = 50) -> list:
    """Keep the worst-margin witnesses (most negative rhs - lhs) first."""
    return sorted(witnesses, key=lambda w: w[3] - w[2])[:cap]


# -- tail dominance (st) ---------------------------------------------------------


def check_st_tails(
    KX: JumpKernel,
    KY: JumpKernel,
    A: TimeMeasure,
    grid: Grid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Upper tails of KX below KY for x > 0 and lower tails of KY below KX
    for x < 0, at every clock-active grid time."""
    if grid is None:
        grid = build_grid([KX, KY], A)
    witnesses, margins, warnings = [], [], []
    for t in grid.times:
        rows = [(x, float(KX.upper_tail(t, x)), float(KY.upper_tail(t, x))) for x in grid.x_pos]
        rows += [(x, float(KY.lower_tail(t, x)), float(KX.lower_tail(t, x))) for x in grid.x_neg]
        for x, lhs, rhs in rows:
            m = rhs - lhs
            if m < -tolerance:
                witnesses.append((t, x, lhs, rhs))
            else:
                margins.append(m)
    verdict = _margin_verdict(margins, witnesses, warnings, tolerance)
    return OrderReport(
        verdict=verdict,
        theorem="tail-dominance",
        witnesses=_cap_witnesses(witnesses),
        grids_used=grid.description,
        tolerance=tolerance,
        warnings=warnings,
        details={"n_checked": len(margins) + len(witnesses), "n_violations": len(witnesses)},
    )


# -- drift condition --------------------------------------------------------------


def _full_h_compensator(char: PIICharacteristics, t: float, eps: float) -> float:
    """Truncated-jump compensator including fixed-time contributions."""
    val, _ = h_compensator(char, t, eps)
    for entry in char.fixed_jumps:
        if entry.time <= t:
            val += entry.h_mean(char.threshold, eps)
    return val


def check_drift(
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    ladder: TruncationLadder | None = None,
    times=None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Compensator-drift inequality: the difference of truncated-jump
    compensators must stay below the drift difference at every time, for
    each ladder level (level eps restricts jumps to {|y| >= eps})."""
    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    if times is None:
        T = default_horizon(charX.time_measure, charY.time_measure, charX.kernel, charY.kernel)
        extra = np.concatenate([charX.cell_grid(T), charY.cell_grid(T), charX.fixed_jumps.times(), charY.fixed_jumps.times()])
        times = np.union1d(np.linspace(0.0, T, 101), extra[extra <= T])
    times = np.asarray(times, dtype=float)
    levels = list(ladder) if ladder is not None else [0.0]
    witnesses, margins, warnings = [], [], []
    for eps in levels:
        try:
            for t in times:
                lhs = _full_h_compensator(charY, t, eps) - _full_h_compensator(charX, t, eps)
                rhs = float(charY.drift(t) - charX.drift(t))
                m = rhs - lhs
                if m < -tolerance:
                    witnesses.append((t, eps, lhs, rhs))
                else:
                    margins.append(m)
        except ValueError as exc:
            return OrderReport(
                verdict="inconclusive",
                theorem="drift-compensator-inequality",
                grids_used=f"{len(times)} times, levels {levels}",
                tolerance=tolerance,
                warnings=[f"compensator not computable at level {eps:g}: {exc}"],
            )
    verdict = _margin_verdict(margins, witnesses, warnings, tolerance)
    return OrderReport(
        verdict=verdict,
        theorem="drift-compensator-inequality",
        witnesses=_cap_witnesses(witnesses),
        grids_used=f"{len(times)} times, levels {levels}",
        tolerance=tolerance,
        warnings=warnings,
        details={"x_slot": "truncation level", "levels": levels},
    )


# -- stop-loss (icx / cx) ----------------------------------------------------------


def check_icx(
    KX: JumpKernel,
    KY: JumpKernel,
    A: TimeMeasure,
    grid: Grid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Kernel stop-loss dominance: int (y-x)+ KX(t,dy) <= same for KY,
    for every grid level x and clock-active time."""
    if grid is None:
        grid = build_grid([KX, KY], A)
    witnesses, margins, warnings = [], [], []
    n_inconclusive = 0
    for t in grid.times:
        for x in grid.x:
            lhs, rhs = float(KX.stop_loss(t, x)), float(KY.stop_loss(t, x))
            if x < 0:
                # hinge tests normalized to vanish at 0: int [(y-x)+ + x] K(dy)
                lhs += x * KX.mass(t)
                rhs += x * KY.mass(t)
            if not (math.isfinite(lhs) and math.isfinite(rhs)):
                n_inconclusive += 1
                continue
            m = rhs - lhs
            if m < -tolerance:
                witnesses.append((t, x, lhs, rhs))
            else:
                margins.append(m)
    if n_inconclusive:
        warnings.append(f"{n_inconclusive} grid points with non-finite stop-loss skipped")
    if witnesses:
        verdict = "violated"
    elif n_inconclusive:
        verdict = "inconclusive"
    else:
        verdict = _margin_verdict(margins, witnesses, warnings, tolerance)
    return OrderReport(
        verdict=verdict,
        theorem="stop-loss-dominance",
        witnesses=_cap_witnesses(witnesses),
        grids_used=grid.description,
        tolerance=tolerance,
        warnings=warnings,
        details={"n_checked": len(margins) + len(witnesses), "n_skipped": n_inconclusive},
    )


def check_cx(
    KX: JumpKernel,
    KY: JumpKernel,
    A: TimeMeasure,
    grid: Grid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Stop-loss dominance plus equal kernel means at every grid time."""
    if grid is None:
        grid = build_grid([KX, KY], A)
    base = check_icx(KX, KY, A, grid, tolerance)
    witnesses = list(base.witnesses)
    warnings = list(base.warnings)
    mean_ok = True
    for t in grid.times:
        mx, my = KX.mean(t), KY.mean(t)
        if not (math.isfinite(mx) and math.isfinite(my)):
            warnings.append(f"non-finite kernel mean at t={t:g}")
            mean_ok = False
            continue
        if abs(mx - my) > tolerance:
            witnesses.append((t, math.nan, mx, my))
    if any(math.isnan(w[1]) for w in witnesses):
        verdict = "violated"
    elif base.verdict == "violated":
        verdict = "violated"
    elif base.verdict == "inconclusive" or not mean_ok:
        verdict = "inconclusive"
    else:
        verdict = "satisfied"
    return OrderReport(
        verdict=verdict,
        theorem="stop-loss-dominance-and-equal-means",
        witnesses=_cap_witnesses(witnesses),
        grids_used=grid.description,
        tolerance=tolerance,
        warnings=warnings,
        details={"x_slot": "NaN rows are mean comparisons", "stop_loss": base.verdict},
    )


# -- cut criterion ------------------------------------------------------------------


def _crossing_points(KX, KY, cut: CutPoint, xs: np.ndarray, t: float, tol: float):
    """Single-crossing audit at time t; returns (witnesses, usable)."""
    ax, ay = KX.atoms(t), KY.atoms(t)
    wit = []
    if ax is not None and ay is not None:
        locs = sorted({loc for loc, _ in ax} | {loc for loc, _ in ay})
        mx = dict(ax)
        my = dict(ay)
        for loc in locs:
            fx, fy = mx.get(loc, 0.0), my.get(loc, 0.0)
            if cut.in_upper(loc):
                if fx > fy + tol:
                    wit.append((t, loc, fy, fx))
            else:
                if fy > fx + tol:
                    wit.append((t, loc, fx, fy))
        return wit, True
    dx, dy = KX.density(t, xs), KY.density(t, xs)
    if dx is None or dy is None:
        return [], False
    dx, dy = np.asarray(dx), np.asarray(dy)
    upper = cut.in_upper(xs)
    bad_hi = upper & (dx > dy + tol)
    bad_lo = (~upper) & (dy > dx + tol)
    for i in np.where(bad_hi)[0]:
        wit.append((t, xs[i], float(dy[i]), float(dx[i])))
    for i in np.where(bad_lo)[0]:
        wit.append((t, xs[i], float(dx[i]), float(dy[i])))
    return wit, True


def _region_h_abs(kern: JumpKernel, t: float, lo: float, hi: float, threshold: float) -> float:
    """int_{[lo,hi]} |h(y)| K(t,dy) with region endpoints as quad breaks."""

    def f(y):
        y = np.asarray(y, dtype=float)
        inside = (y >= lo) & (y <= hi) & (np.abs(y) <= threshold)
        return np.where(inside, np.abs(y), 0.0)

    breaks = tuple(b for b in sorted({lo, hi, -threshold, threshold, 0.0}) if math.isfinite(b))
    return kern.integral(t, f, breaks=breaks)


def check_cut(
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    cut: CutPoint,
    times=None,
    grid: Grid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Single-crossing criterion at a cut point k: densities ordered on each
    side of k, extra mass on the small side compensated by extra mass beyond
    k, integrable truncated difference, and the drift inequality."""
    from .characteristics import align_pair

    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    KX, KY = charX.kernel, charY.kernel
    if grid is None:
        grid = build_grid([KX, KY], A, t_max=None if times is None else float(np.max(times)))
    times = grid.times if times is None else np.asarray(times, dtype=float)
    warnings, witnesses = [], []
    if len(charX.fixed_jumps) or len(charY.fixed_jumps):
        warnings.append("fixed-time jumps ignored by the cut criterion; compared quasi-left-continuous parts")
    k = cut.k
    mixed = False
    cell_times = [t for t in grid.times if A.slope_at(t) > 0]
    # 1) density / atom single crossing
    for t in cell_times:
        wit, usable = _crossing_points(KX, KY, cut, grid.x, t, tolerance)
        witnesses.extend(wit)
        if not usable:
            mixed = True
            break
    details: dict = {"cut": {"k": k, "side": cut.side}}
    if mixed:
        return OrderReport(
            verdict="inconclusive",
            theorem="single-cut-criterion",
            grids_used=grid.description,
            tolerance=tolerance,
            warnings=warnings + ["kernels do not expose comparable densities or atoms"],
            details=details,
        )
    # 2) mass compensation for k != 0
    comp_rows = []
    inc_k = cut.upper_includes_k
    for t in cell_times:
        if k > 0:
            d = KX.interval_mass(t, 0.0, k, include_left=False, include_right=not inc_k) - \
                KY.interval_mass(t, 0.0, k, include_left=False, include_right=not inc_k)
            e = KY.interval_mass(t, k, math.inf, include_left=inc_k) - \
                KX.interval_mass(t, k, math.inf, include_left=inc_k)
        elif k < 0:
            d = KY.interval_mass(t, k, 0.0, include_left=not inc_k, include_right=False) - \
                KX.interval_mass(t, k, 0.0, include_left=not inc_k, include_right=False)
            e = KX.interval_mass(t, -math.inf, k, include_right=not inc_k) - \
                KY.interval_mass(t, -math.inf, k, include_right=not inc_k)
        else:
            break
        if not (math.isfinite(d) and math.isfinite(e)):
            warnings.append(f"non-finite extra masses at t={t:g}")
            continue
        comp_rows.append((t, d, e))
        if d > e + tolerance:
            witnesses.append((t, k, d, e))
    if comp_rows:
        details["compensation"] = {"rows_checked": len(comp_rows)}
    # 3) integrability of |h| against the kernel difference
    integ_ok = True
    try:
        t0 = cell_times[0] if cell_times else 0.0
        up_x = _region_h_abs(KX, t0, k, math.inf, charX.threshold)
        up_y = _region_h_abs(KY, t0, k, math.inf, charY.threshold)
        lo_x = _region_h_abs(KX, t0, -math.inf, k, charX.threshold)
        lo_y = _region_h_abs(KY, t0, -math.inf, k, charY.threshold)
        if not all(map(math.isfinite, (up_x, up_y, lo_x, lo_y))):
            integ_ok = False
    except (ValueError, OverflowError):
        integ_ok = False
    if not integ_ok:
        warnings.append("truncated-difference integrability not verifiable (non-finite pieces)")
    # 4) drift inequality: drift difference must dominate the h-difference
    drift_rows = 0
    try:
        for t in times:
            hdiff = _full_h_compensator(charY, t, 0.0) - _full_h_compensator(charX, t, 0.0)
            gap = float(charY.drift(t) - charX.drift(t)) - hdiff
            drift_rows += 1
            if gap < -tolerance:
                witnesses.append((t, math.nan, hdiff, float(charY.drift(t) - charX.drift(t))))
    except ValueError as exc:
        warnings.append(f"drift inequality not computable: {exc}")
        integ_ok = False
    details["drift_rows"] = drift_rows
    if witnesses:
        verdict = "violated"
    elif not integ_ok:
        verdict = "inconclusive"
    else:
        verdict = "satisfied"
    return OrderReport(
        verdict=verdict,
        theorem="single-cut-criterion",
        witnesses=_cap_witnesses(witnesses),
        grids_used=grid.description,
        tolerance=tolerance,
        warnings=warnings,
        details=details,
    )


# -- convex majorization --------------------------------------------------------------


def check_convex_majorization(
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    times=None,
    grid: Grid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Gaussian-variance dominance, nonnegative kernel difference on grid
    cells, integrable large-jump parts, and the mean inequality
    B + (y - h(y)) compensator ordered; equality upgrades icx to cx."""
    from .characteristics import align_pair

    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    KX, KY = charX.kernel, charY.kernel
    if grid is None:
        grid = build_grid([KX, KY], A, t_max=None if times is None else float(np.max(times)))
    times = grid.times if times is None else np.asarray(times, dtype=float)
    witnesses, warnings = [], []
    details: dict = {"x_slot": "NaN = Gaussian/mean rows; cell left edge otherwise"}
    # Gaussian variance dominance, pointwise in t
    cdiff = charY.gaussian - charX.gaussian
    for t in times:
        if cdiff(t) < -tolerance:
            witnesses.append((t, math.nan, float(charX.gaussian(t)), float(charY.gaussian(t))))
    if not cdiff.is_nondecreasing(tolerance):
        warnings.append("Gaussian variance difference is not nondecreasing; add-on construction unavailable")
    # kernel difference nonnegative, audited on grid cells and outer tails
    cell_times = [t for t in grid.times if A.slope_at(t) > 0]
    xs_pos = np.sort(grid.x_pos)
    xs_neg = np.sort(grid.x_neg)
    for t in cell_times:
        cells = []
        if xs_pos.size:
            cells.extend((a, b, True, False) for a, b in zip(xs_pos[:-1], xs_pos[1:]))
            cells.append((xs_pos[-1], math.inf, True, False))
            cells.append((0.0, xs_pos[0], False, False))
        if xs_neg.size:
            cells.extend((a, b, True, False) for a, b in zip(xs_neg[:-1], xs_neg[1:]))
            cells.append((-math.inf, xs_neg[0], False, False))
            cells.append((xs_neg[-1], 0.0, True, False))
        for a, b, il, ir in cells:
            mx = KX.interval_mass(t, a, b, include_left=il, include_right=ir)
            my = KY.interval_mass(t, a, b, include_left=il, include_right=ir)
            if not (math.isfinite(mx) and math.isfinite(my)):
                continue
            if my < mx - tolerance:
                witnesses.append((t, a, mx, my))
    # integrability of the untruncated large-jump part
    inconclusive = False
    for name, kern, char in (("X", KX, charX), ("Y", KY, charY)):
        big = kern.abs_big_jump_integral(0.0, char.threshold)
        if not math.isfinite(big):
            warnings.append(f"process {name} has non-integrable large jumps")
            inconclusive = True
    # mean inequality and the cx equality flag
    equality = True
    if not inconclusive:
        def mean_side(char: PIICharacteristics, t: float) -> float:
            total = float(char.drift(t))
            gridc = char.cell_grid(t)
            for lo, hi in zip(gridc[:-1], gridc[1:]):
                da = char.time_measure.increment(lo, hi)
                if da:
                    total += char.kernel.big_jump_integral(lo, char.threshold) * da
            for e in char.fixed_jumps:
                if e.time <= t:
                    total += e.mean() - e.h_mean(char.threshold)
            return total

        for t in times:
            lhs, rhs = mean_side(charX, t), mean_side(charY, t)
            if lhs > rhs + tolerance:
                witnesses.append((t, math.nan, lhs, rhs))
                equality = False
            elif abs(lhs - rhs) > tolerance:
                equality = False
    details["equality"] = bool(equality and not witnesses and not inconclusive)
    details["order"] = "cx" if details["equality"] else "icx"
    if witnesses:
        verdict = "violated"
    elif inconclusive:
        verdict = "inconclusive"
    else:
        verdict = "satisfied"
    return OrderReport(
        verdict=verdict,
        theorem="convex-majorization",
        witnesses=_cap_witnesses(witnesses),
        grids_used=grid.description,
        tolerance=tolerance,
        warnings=warnings,
        details=details,
    )


# -- defining kernel order ---------------------------------------------------------------


def kernel_order_defn_check(
    KX: JumpKernel,
    KY: JumpKernel,
    A: TimeMeasure,
    family,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OrderReport:
    """Defining inequality int f dKX <= int f dKY for every test function in
    the family, at one time per clock-active kernel cell."""
    functions = list(family)
    if not functions:
        raise ValueError("degenerate test-function family")
    bks = np.union1d(A.breakpoints, np.union1d(KX.time_breakpoints(), KY.time_breakpoints()))
    t_max = default_horizon(A, KX, KY)
    edges = np.append(bks[bks < t_max], t_max)
    cell_times = [0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:]) if A.increment(a, b) > 0]
    witnesses, margins, warnings = [], [], []
    inconclusive = False
    for idx, f in enumerate(functions):
        breaks = tuple(getattr(f, "knots", ()))
        for t in cell_times:
            lhs = KX.integral(t, f, breaks=breaks)
            rhs = KY.integral(t, f, breaks=breaks)
            if not (math.isfinite(lhs) and math.isfinite(rhs)):
                inconclusive = True
                continue
            m = rhs - lhs
            if m < -tolerance:
                witnesses.append((t, float(idx), lhs, rhs))
            else:
                margins.append(m)
    if inconclusive:
        warnings.append("non-finite test integrals skipped")
    if witnesses:
        verdict = "violated"
    elif inconclusive:
        verdict = "inconclusive"
    else:
        verdict = _margin_verdict(margins, witnesses, warnings, tolerance)
    return OrderReport(
        verdict=verdict,
        theorem="kernel-order-definition",
        witnesses=_cap_witnesses(witnesses),
        grids_used=f"{len(cell_times)} cell times, {len(functions)} test functions",
        tolerance=tolerance,
        warnings=warnings,
        details={"x_slot": "test function index"},
    )
