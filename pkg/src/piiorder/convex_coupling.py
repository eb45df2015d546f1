"""Additive coupling for convex-order comparisons.

When the Gaussian variance gap is nondecreasing and the kernel difference
is itself a kernel, the larger process decomposes in law as Y = X + Z with
Z independent of X.  Convexity then transfers through conditioning:
E f(Y) = E E[f(X + Z) | X] >= E f(X + E Z), so a zero-mean add-on gives
the convex order and a nonnegative-mean one the increasing-convex order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characteristics import FixedJumpEntry, FixedJumpSchedule, PIICharacteristics, align_pair
from .jumps import DiscreteJumps, point_mass
from .kernels import CompoundPoissonKernel, JumpKernel, SuperposedKernel, TabulatedKernel, _TabCell, zero_kernel
from .piecewise import PiecewiseLinear
from .rng import substream
from .sampling import CoupledPathSet, PathSet, simulate_direct
from .ito_coupling import _resolve_grid

__all__ = [
    "AddOnCharacteristics",
    "build_addon",
    "simulate_convex_coupled",
    "couple_fixed_jumps",
]

_TOL = 1e-9
_TAB_POINTS = 256
_TAB_FLOOR = 1e-12


@dataclass(frozen=True)
class AddOnCharacteristics:
    """Triplet of the independent add-on Z with Y = X + Z in law.

    ``order`` records what the construction certifies: "cx" when the
    add-on mean vanishes identically, else "icx".
    """

    characteristics: PIICharacteristics
    order: str
    mean_curve: PiecewiseLinear


def _diff_gaussian(charX: PIICharacteristics, charY: PIICharacteristics) -> PiecewiseLinear:
    dc = charY.gaussian - charX.gaussian
    if not dc.is_nondecreasing(_TOL):
        bad = dc.knots[np.where(dc.slopes < -_TOL)[0]]
        t = float(bad[0]) if bad.size else float(dc.knots[0])
        raise ValueError(f"Gaussian variance difference decreases at t={t:g}")
    return dc


def _diff_kernel_atomic(KX: JumpKernel, KY: JumpKernel, bks: np.ndarray) -> JumpKernel:
    pieces = []
    for c, t in enumerate(bks):
        mx, my = dict(KX.atoms(float(t))), dict(KY.atoms(float(t)))
        diff = {}
        for loc in sorted(set(mx) | set(my)):
            d = my.get(loc, 0.0) - mx.get(loc, 0.0)
            if d < -_TOL:
                raise ValueError(f"kernel difference is negative at t={t:g}, x={loc:g}")
            if d > _TOL:
                diff[loc] = d
        rate = sum(diff.values())
        if rate <= 0:
            continue
        rates = np.zeros(len(bks))
        rates[c] = rate
        locs = np.array(sorted(diff))
        w = np.array([diff[l] for l in locs]) / rate
        pieces.append(CompoundPoissonKernel(rates, DiscreteJumps(locs, w), bks))
    if not pieces:
        return zero_kernel()
    return pieces[0] if len(pieces) == 1 else SuperposedKernel(pieces)


def _diff_tail_table(tail_diff, sign: int, t: float):
    """Tabulate a one-sided tail difference; raises with a witness where
    the difference fails to be a (nonnegative) tail."""
    floor = _TAB_FLOOR
    probe = float(tail_diff(np.asarray(floor if sign > 0 else -floor)))
    if not math.isfinite(probe):
        raise ValueError(f"kernel difference has non-finite mass at t={t:g}")
    if probe <= _TAB_FLOOR:
        return None
    hi = 1.0
    for _ in range(200):
        if float(tail_diff(np.asarray(sign * hi))) <= _TAB_FLOOR * probe:
            break
        hi *= 2.0
    xs = sign * np.geomspace(floor, hi, _TAB_POINTS)
    xs = np.sort(xs)
    vals = np.asarray(tail_diff(xs), dtype=float)
    bad = np.where(np.diff(vals) > _TOL)[0] if sign > 0 else np.where(np.diff(vals) < -_TOL)[0]
    if bad.size:
        x_bad = float(xs[bad[0] + 1])
        raise ValueError(f"kernel difference is negative at t={t:g} near x={x_bad:g}")
    if np.any(vals < -_TOL):
        x_bad = float(xs[int(np.argmin(vals))])
        raise ValueError(f"kernel difference is negative at t={t:g} near x={x_bad:g}")
    vals = np.maximum(vals, 0.0)
    vals = np.minimum.accumulate(vals) if sign > 0 else np.maximum.accumulate(vals)
    return xs, vals


def _diff_kernel_tabulated(KX: JumpKernel, KY: JumpKernel, bks: np.ndarray) -> JumpKernel:
    cells, any_mass = [], False
    for t in bks:
        t = float(t)
        pos = _diff_tail_table(
            lambda x: np.asarray(KY.upper_tail(t, x)) - np.asarray(KX.upper_tail(t, x)), +1, t
        )
        neg = _diff_tail_table(
            lambda x: np.asarray(KY.lower_tail(t, x)) - np.asarray(KX.lower_tail(t, x)), -1, t
        )
        any_mass = any_mass or pos is not None or neg is not None
        cells.append(_TabCell(
            pos[0] if pos else (), pos[1] if pos else (),
            neg[0] if neg else (), neg[1] if neg else (),
        ))
    return TabulatedKernel(cells, bks) if any_mass else zero_kernel()


def build_addon(charX: PIICharacteristics, charY: PIICharacteristics) -> AddOnCharacteristics:
    """Characteristics of Z = Y - X as an independent process.

    Fails with a witness when the kernel difference is signed, the
    Gaussian variance gap decreases, or the add-on mean goes negative.
    """
    if charX.threshold != charY.threshold:
        raise ValueError("processes must share a truncation threshold")
    if len(charX.fixed_jumps) or len(charY.fixed_jumps):
        raise ValueError("fixed-time jumps are not supported by the additive add-on")
    charX, charY = align_pair(charX, charY)
    A = charX.time_measure
    KX, KY = charX.kernel, charY.kernel
    dc = _diff_gaussian(charX, charY)
    db = charY.drift - charX.drift
    bks = np.union1d(KX.time_breakpoints(), KY.time_breakpoints())
    atomic = KX.atoms(0.0) is not None and KY.atoms(0.0) is not None
    if not atomic and not (KX.atoms(0.0) is None and KY.atoms(0.0) is None):
        raise ValueError("kernels do not expose comparable densities or atoms")
    dk = _diff_kernel_atomic(KX, KY, bks) if atomic else _diff_kernel_tabulated(KX, KY, bks)
    addon = PIICharacteristics(
        drift=db,
        gaussian=dc,
        kernel=dk,
        time_measure=A,
        truncation=charX.truncation,
    )
    # E Z(t) = dB(t) + int (y - h(y)) dK dA, piecewise linear in t
    horizon = float(max(np.max(bks), np.max(A.breakpoints), np.max(db.knots), np.max(dc.knots), 1.0))
    edges = addon.cell_grid(horizon)
    edges = np.concatenate([[0.0], edges[edges > 0]])
    vals = [0.0]
    for lo, hi in zip(edges[:-1], edges[1:]):
        resid = dk.big_jump_integral(float(lo), charX.threshold)
        if not math.isfinite(resid):
            raise ValueError("add-on mean is not defined: non-summable large jumps")
        vals.append(vals[-1] + resid * A.increment(lo, hi))
    resid_curve = PiecewiseLinear.from_points(np.column_stack([edges, vals]))
    mean_curve = db + resid_curve
    probe = np.unique(np.concatenate([edges, mean_curve.knots, [horizon]]))
    mvals = mean_curve(probe)
    if np.any(mvals < -_TOL):
        t_bad = float(probe[int(np.argmin(mvals))])
        raise ValueError(f"add-on mean is negative at t={t_bad:g}")
    order = "cx" if float(np.max(np.abs(mvals))) <= _TOL else "icx"
    return AddOnCharacteristics(characteristics=addon, order=order, mean_curve=mean_curve)


def simulate_convex_coupled(
    charX: PIICharacteristics,
    addon: AddOnCharacteristics,
    T: float,
    grid,
    n_paths: int,
    seed: int = 0,
    epsilon_jump: float | None = None,
) -> CoupledPathSet:
    """Simulate X and the independent add-on, and return Y = X + Z.

    The coupling matches marginal laws, not pathwise order: convex-order
    statements are checked in distribution, so ``violations()`` on the
    result is meaningless here.
    """
    grid = _resolve_grid(grid, T)
    px = simulate_direct(charX, T, grid, n_paths, seed, epsilon_jump)
    pz = simulate_direct(addon.characteristics, T, grid, n_paths, seed, epsilon_jump, stream=(1,))
    jy = np.concatenate([px.jumps, pz.jumps])
    jy = jy[np.argsort(jy, order=("path", "tau"), kind="stable")]
    return CoupledPathSet(
        time_grid=grid,
        X=px.paths,
        Y=px.paths + pz.paths,
        jumps_x=px.jumps,
        jumps_y=jy,
        seed=seed,
        metadata={
            "coupling": "additive",
            "order": addon.order,
            "epsilon_jump": 0.0 if epsilon_jump is None else float(epsilon_jump),
            "bias_bound_x": px.metadata["bias_bound"],
            "bias_bound_y": px.metadata["bias_bound"] + pz.metadata["bias_bound"],
            "T": T,
        },
    )


def _entry_or_null(sched: FixedJumpSchedule, t: float) -> FixedJumpEntry:
    for e in sched:
        if e.time == t:
            return e
    return FixedJumpEntry(time=t, probability=0.0, law=point_mass(1.0))


def couple_fixed_jumps(
    schedX: FixedJumpSchedule,
    schedY: FixedJumpSchedule,
    n_paths: int,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Comonotone draws of two fixed-jump schedules from shared uniforms.

    At each fixed time both jumps are the quantile of one uniform, which
    is pointwise ordered exactly when the distribution functions do not
    cross; a crossing is rejected with a witness.
    """
    times = sorted(set(schedX.times()) | set(schedY.times()))
    u_probe = np.linspace(1e-6, 1.0 - 1e-6, 2001)
    pairs = []
    for t in times:
        ex, ey = _entry_or_null(schedX, t), _entry_or_null(schedY, t)
        qx = np.asarray(ex.mixture_quantile(u_probe))
        qy = np.asarray(ey.mixture_quantile(u_probe))
        bad = np.where(qx > qy + _TOL)[0]
        if bad.size:
            raise ValueError(
                f"distribution functions cross at t={t:g} (quantile at level u={u_probe[bad[0]]:.4f})"
            )
        pairs.append((ex, ey))
    times_arr = np.asarray(times, dtype=float)
    JX = np.zeros((n_paths, len(times)))
    JY = np.zeros((n_paths, len(times)))
    for p in range(n_paths):
        rng = substream(seed, p)
        u = rng.uniform(size=len(times))
        for j, (ex, ey) in enumerate(pairs):
            JX[p, j] = float(np.asarray(ex.mixture_quantile(u[j])))
            JY[p, j] = float(np.asarray(ey.mixture_quantile(u[j])))
    return times_arr, JX, JY
