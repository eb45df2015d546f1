"""Distribution-level verification by Monte Carlo and exact oracles.

The simulators produce marginals; this module checks order statements on
them: families of monotone or convex piecewise-linear test functions,
Lipschitz envelopes via infimal convolution, paired and independent
expectation estimates, a kernel-interpolation identity for expectation
gaps, small-time rate extrapolation, and an exact dictionary oracle for
purely atomic compound-Poisson marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import PIICharacteristics, h_compensator
from .kernels import JumpKernel, SuperposedKernel
from .piecewise import TimeMeasure
from .rng import substream
from .sampling import CoupledPathSet, compensator_curve, sample_increments

__all__ = [
    "PiecewiseLinearTestFunction",
    "IndicatorStep",
    "TestFunctionFamily",
    "MCResult",
    "OrderTestReport",
    "InterpolationResult",
    "hinge",
    "neg_hinge",
    "ramp",
    "estimate",
    "mc_order_test",
    "inf_convolution",
    "interpolation_check",
    "small_time_rate",
    "brute_force_oracle",
    "exact_marginal_expectation",
]

_Z_FLOOR = -3.0


@dataclass(frozen=True)
class PiecewiseLinearTestFunction:
    """Piecewise-linear f anchored at a point (default f(0) = 0).

    ``slopes`` has one more entry than ``knots``: slopes[i] applies between
    knots[i-1] and knots[i], with the first and last extending to infinity.
    """

    knots: np.ndarray
    slopes: np.ndarray
    name: str = "pl"
    anchor: tuple[float, float] = (0.0, 0.0)
    _kv: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if slopes.size != knots.size + 1:
            raise ValueError("need len(slopes) == len(knots) + 1")
        if knots.size and np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)
        if knots.size:
            raw = np.concatenate([[0.0], np.cumsum(slopes[1:-1] * np.diff(knots))])
        else:
            raw = np.zeros(1)
        object.__setattr__(self, "_kv", raw)
        x0, v0 = self.anchor
        shift = v0 - self._eval(np.asarray([x0]))[0]
        object.__setattr__(self, "_kv", raw + shift)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        if self.knots.size == 0:
            return self._kv[0] + self.slopes[0] * x
        idx = np.searchsorted(self.knots, x, side="right")
        ref = np.clip(idx - 1, 0, self.knots.size - 1)
        return self._kv[ref] + self.slopes[idx] * (x - self.knots[ref])

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = self._eval(np.atleast_1d(np.asarray(x, dtype=float)))
        return float(out[0]) if scalar else out

    @property
    def is_convex(self) -> bool:
        return bool(np.all(np.diff(self.slopes) >= -1e-12))

    @property
    def is_nondecreasing(self) -> bool:
        return bool(np.all(self.slopes >= -1e-12))

    @property
    def max_abs_slope(self) -> float:
        return float(np.max(np.abs(self.slopes)))


@dataclass(frozen=True)
class IndicatorStep:
    """f(y) = -1 for y <= x0, 0 beyond: the canonical st test function."""

    x0: float
    name: str = "step"

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = np.where(np.atleast_1d(np.asarray(x, dtype=float)) <= self.x0, -1.0, 0.0)
        return float(out[0]) if scalar else out


def hinge(a: float) -> PiecewiseLinearTestFunction:
    return PiecewiseLinearTestFunction(np.array([a]), np.array([0.0, 1.0]), name=f"hinge@{a:g}")


def neg_hinge(a: float) -> PiecewiseLinearTestFunction:
    """(a - x)+ up to the f(0) = 0 normalization; convex, nonincreasing."""
    return PiecewiseLinearTestFunction(np.array([a]), np.array([-1.0, 0.0]), name=f"neg-hinge@{a:g}")


def ramp(a: float, width: float) -> PiecewiseLinearTestFunction:
    """Bounded nondecreasing ramp from 0 to 1 over [a, a + width]."""
    return PiecewiseLinearTestFunction(
        np.array([a, a + width]), np.array([0.0, 1.0 / width, 0.0]), name=f"ramp@{a:g}+{width:g}"
    )


class TestFunctionFamily:
    """Seeded family of order-adapted test functions with f(0) = 0.

    st: 8 ramps with random knots, 8 hinges, 4 random nondecreasing
    piecewise-linear functions; icx: hinges plus random nondecreasing
    convex ones; cx: hinges both ways, the two linear functions, and
    random convex ones.  ``smoothing`` maps every member through
    ``inf_convolution`` with that Lipschitz index.
    """

    __test__ = False  # not a pytest class despite the name

    def __init__(self, order: str, seed: int = 0, span: float = 3.0, smoothing: float | None = None):
        if order not in ("st", "icx", "cx"):
            raise ValueError(f"unknown order '{order}'")
        self.order = order
        self.span = span
        rng = substream(int(seed), 104729)
        fns: list[PiecewiseLinearTestFunction] = []
        offsets = np.linspace(-span, span, 8)
        if order == "st":
            for i in range(8):
                a = rng.uniform(-span, span)
                fns.append(ramp(a, rng.uniform(span / 8, span / 2)))
            fns += [hinge(a) for a in offsets]
            for i in range(4):
                fns.append(self._random_pl(rng, convex=False, name=f"rand-mono-{i}"))
        elif order == "icx":
            fns += [hinge(a) for a in offsets]
            fns += [hinge(a) for a in np.linspace(-span / 2, span / 2, 8)]
            for i in range(4):
                fns.append(self._random_pl(rng, convex=True, monotone=True, name=f"rand-icx-{i}"))
        else:
            fns += [hinge(a) for a in offsets]
            fns += [neg_hinge(a) for a in offsets]
            fns.append(PiecewiseLinearTestFunction(np.array([]), np.array([1.0]), name="identity"))
            fns.append(PiecewiseLinearTestFunction(np.array([]), np.array([-1.0]), name="neg-identity"))
            for i in range(4):
                fns.append(self._random_pl(rng, convex=True, monotone=False, name=f"rand-cx-{i}"))
        if smoothing is not None:
            smoothed = []
            for f in fns:
                try:
                    smoothed.append(inf_convolution(f, smoothing))
                except ValueError:
                    continue  # envelope unbounded below at this index
            fns = smoothed
        self.functions = fns

    def _random_pl(self, rng, convex: bool, monotone: bool = True, name: str = "rand"):
        n_knots = int(rng.integers(2, 5))
        knots = np.unique(np.sort(rng.uniform(-self.span, self.span, size=n_knots)))
        raw = rng.normal(size=knots.size + 1)
        if convex:
            slopes = np.sort(np.abs(raw)) if monotone else np.sort(raw)
        else:
            slopes = np.abs(raw)
        return PiecewiseLinearTestFunction(knots, slopes, name=name)

    def __iter__(self):
        return iter(self.functions)

    def __len__(self):
        return len(self.functions)


@dataclass(frozen=True)
class MCResult:
    """Monte-Carlo estimate with its standard error and provenance."""

    estimate: float
    standard_error: float
    n_samples: int
    design: str = "independent"
    seed: int | None = None
    n_excluded: int = 0


@dataclass(frozen=True)
class OrderTestReport:
    """Outcome of a Monte-Carlo order test over a test-function family."""

    order: str
    times: tuple
    n: int
    design: str
    verdict: str
    worst_z: float
    rows: list = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return self.verdict == "violation detected"


def _marginal_draws(char: PIICharacteristics, times: np.ndarray, n: int, rng, epsilon_jump):
    """(n, m) matrix of X at the given times, built from increments."""
    cols = []
    prev = 0.0
    acc = np.zeros(n)
    for t in times:
        acc = acc + sample_increments(char, prev, float(t), n, rng, epsilon_jump)
        cols.append(acc.copy())
        prev = float(t)
    return np.column_stack(cols)


def estimate(
    char: PIICharacteristics,
    f,
    times,
    n: int,
    seed,
    epsilon_jump: float | None = None,
) -> MCResult:
    """Monte-Carlo E f(X_{t_1}, ..., X_{t_m}) from iid sampled marginals.

    Scalar ``times`` passes a 1-d sample vector to f; a sequence passes an
    (n, m) matrix.  Non-finite evaluations are dropped and counted.
    """
    rng = seed if isinstance(seed, np.random.Generator) else substream(int(seed))
    seed_val = None if isinstance(seed, np.random.Generator) else int(seed)
    scalar_t = np.ndim(times) == 0
    tarr = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(tarr) < 0) or np.any(tarr < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    draws = _marginal_draws(char, tarr, n, rng, epsilon_jump)
    vals = np.asarray(f(draws[:, 0] if scalar_t else draws), dtype=float)
    ok = np.isfinite(vals)
    used = vals[ok]
    if used.size == 0:
        return MCResult(math.nan, math.nan, 0, "independent", seed_val, int(n))
    se = used.std(ddof=1) / math.sqrt(used.size) if used.size > 1 else math.inf
    return MCResult(float(used.mean()), float(se), int(used.size), "independent", seed_val, int(n - used.size))


def _paired_rows(paths: CoupledPathSet, functions, times: np.ndarray) -> list[dict]:
    grid = np.asarray(paths.time_grid, dtype=float)
    idx = []
    for t in times:
        j = np.searchsorted(grid, t)
        if j >= grid.size or abs(grid[j] - t) > 1e-12:
            raise ValueError(f"time {t:g} is not on the coupled path grid")
        idx.append(j)
    rows = []
    for f in functions:
        for t, j in zip(times, idx):
            diff = np.asarray(f(paths.Y[:, j]), dtype=float) - np.asarray(
                f(paths.X[:, j]), dtype=float
            )
            ok = np.isfinite(diff)
            used = diff[ok]
            mean = float(used.mean()) if used.size else math.nan
            se = float(used.std(ddof=1) / math.sqrt(used.size)) if used.size > 1 else 0.0
            if se > 0:
                z = mean / se
            else:
                z = 0.0 if abs(mean) <= 1e-15 else math.copysign(math.inf, mean)
            rows.append({
                "function": getattr(f, "name", repr(f)),
                "t": float(t),
                "diff_mean": mean,
                "se": se,
                "z": z,
                "excluded": int(diff.size - used.size),
            })
    return rows


def mc_order_test(
    pair_sampler,
    family,
    times,
    n: int = 20_000,
    seed: int = 0,
    epsilon_jump: float | None = None,
    threads: int = 1,
) -> OrderTestReport:
    """One-sided family test of E f(X) <= E f(Y).

    ``pair_sampler`` is either a (charX, charY) tuple (independent design)
    or a CoupledPathSet (paired design; requested times must lie on its
    grid).  ``family`` is a TestFunctionFamily or an order name.  A
    function flags a violation when its one-sided z falls below -3; the
    verdict is "no violation detected" iff every z >= -3.  This cannot
    prove the order, only fail to refute it.  Per-function substreams keep
    results independent of the thread count.
    """
    if isinstance(family, str):
        family = TestFunctionFamily(family, seed=seed)
    functions = list(family)
    if not functions:
        raise ValueError("degenerate test-function family")
    order = getattr(family, "order", "st")
    tarr = np.atleast_1d(np.asarray(times, dtype=float))

    if isinstance(pair_sampler, CoupledPathSet):
        rows = _paired_rows(pair_sampler, functions, tarr)
        design = "paired-coupled"
        n = pair_sampler.n_paths
    else:
        charX, charY = pair_sampler

        def one(i: int, f) -> list[dict]:
            out = []
            for j, t in enumerate(tarr):
                ex = estimate(charX, f, float(t), n, substream(seed, 7, i, j, 0), epsilon_jump)
                ey = estimate(charY, f, float(t), n, substream(seed, 7, i, j, 1), epsilon_jump)
                se = math.hypot(ex.standard_error, ey.standard_error)
                if not (math.isfinite(ex.estimate) and math.isfinite(ey.estimate)) or se == 0.0:
                    z = math.nan
                else:
                    z = (ey.estimate - ex.estimate) / se
                out.append({
                    "function": getattr(f, "name", repr(f)),
                    "t": float(t),
                    "lhs": ex.estimate, "rhs": ey.estimate,
                    "diff_mean": ey.estimate - ex.estimate,
                    "se": se, "z": z,
                    "excluded": ex.n_excluded + ey.n_excluded,
                })
            return out

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(one, range(len(functions)), functions))
        else:
            chunks = [one(i, f) for i, f in enumerate(functions)]
        rows = [row for chunk in chunks for row in chunk]
        design = "independent"

    worst = math.inf
    excluded_any = False
    for row in rows:
        excluded_any = excluded_any or row["excluded"]
        if not math.isnan(row["z"]):
            worst = min(worst, row["z"])
    if worst < _Z_FLOOR:
        verdict = "violation detected"
    elif excluded_any and not math.isfinite(worst):
        verdict = "inconclusive"
    else:
        verdict = "no violation detected"
    return OrderTestReport(
        order=order, times=tuple(float(t) for t in tarr), n=n,
        design=design, verdict=verdict, worst_z=worst, rows=rows,
    )


def inf_convolution(f, n: float):
    """Largest n-Lipschitz function below f (infimal convolution with n|.|).

    Exact for convex piecewise-linear f (slopes clipped to [-n, n]) and for
    the indicator step; rejected when the envelope is unbounded below.
    """
    if n <= 0:
        raise ValueError("Lipschitz constant must be positive")
    if isinstance(f, IndicatorStep):
        return PiecewiseLinearTestFunction(
            np.array([f.x0, f.x0 + 1.0 / n]),
            np.array([0.0, n, 0.0]),
            name=f"{f.name}|lip{n:g}",
            anchor=(f.x0, -1.0),
        )
    if not isinstance(f, PiecewiseLinearTestFunction):
        raise TypeError("inf_convolution supports piecewise-linear and step functions")
    if not f.is_convex:
        raise ValueError("inf_convolution needs a convex function")
    slopes = f.slopes
    if slopes[0] > n or slopes[-1] < -n:
        raise ValueError("infimal convolution is unbounded below")
    if f.knots.size == 0:
        return f  # |slope| <= n by the checks above
    clipped = np.clip(slopes, -n, n)
    m = int(np.argmax(slopes >= -n))  # first segment not fully clipped from below
    a_idx = max(m - 1, 0)
    x0 = float(f.knots[a_idx])
    return PiecewiseLinearTestFunction(
        f.knots, clipped, name=f"{f.name}|lip{n:g}", anchor=(x0, float(f(x0)))
    )


def _jump_only_char(kernel: JumpKernel, A: TimeMeasure, horizon: float) -> PIICharacteristics:
    """Uncompensated jump sums: drift equal to the truncated-jump compensator."""
    shell = PIICharacteristics(kernel=kernel, time_measure=A)
    return PIICharacteristics(
        drift=compensator_curve(shell, horizon, 0.0),
        kernel=kernel,
        time_measure=A,
    )


@dataclass(frozen=True)
class InterpolationResult:
    """lhs/rhs of the interpolation identity; discrepancy in combined SEs."""

    lhs: float
    rhs: float
    discrepancy: float
    lhs_se: float
    rhs_se: float

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.discrepancy))


def interpolation_check(
    KX: JumpKernel,
    KY: JumpKernel,
    A: TimeMeasure,
    f,
    s: float = 0.0,
    t: float = 1.0,
    alpha_grid: int = 16,
    n: int = 20_000,
    seed: int = 0,
) -> InterpolationResult:
    """Expectation gap of jump sums against the kernel-interpolation identity.

    lhs = E f(Y_t - Y_s) - E f(X_t - X_s) for the uncompensated jump sums;
    rhs integrates int E[f(Z_a + y) - f(Z_a)] (KY - KX)(dy) dA over (s, t]
    and over a in [0, 1] by Gauss-Legendre, where Z_a is the jump sum with
    kernel a KY + (1 - a) KX.  Finite-activity kernels only.
    """
    if not (KX.is_finite_activity() and KY.is_finite_activity()):
        raise ValueError("interpolation identity needs finite-activity kernels")
    if not 0.0 <= s < t:
        raise ValueError("need 0 <= s < t")
    charX = _jump_only_char(KX, A, t)
    charY = _jump_only_char(KY, A, t)

    def window_estimate(char, key):
        rng = substream(seed, 11, key)
        draws = sample_increments(char, s, t, n, rng)
        vals = np.asarray(f(draws), dtype=float)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))

    ex, ex_se = window_estimate(charX, 0)
    ey, ey_se = window_estimate(charY, 1)
    lhs, lhs_se = ey - ex, math.hypot(ex_se, ey_se)

    nodes, weights = np.polynomial.legendre.leggauss(alpha_grid)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    edges = np.union1d(
        np.union1d(KX.time_breakpoints(), KY.time_breakpoints()), A.breakpoints
    )
    edges = np.union1d(edges[(edges > s) & (edges < t)], [s, t])
    rhs = 0.0
    rhs_var = 0.0
    for i, (a, w) in enumerate(zip(nodes, weights)):
        kern_a = SuperposedKernel([KX.scaled(1.0 - a), KY.scaled(a)])
        char_a = _jump_only_char(kern_a, A, t)
        draws = sample_increments(char_a, s, t, n, substream(seed, 13, i))
        acc = np.zeros(n)
        for lo, hi in zip(edges[:-1], edges[1:]):
            da = A.increment(lo, hi)
            if da == 0.0:
                continue
            tc = float(lo)
            diff = np.asarray(KY.shifted_integral(tc, f, draws)) - np.asarray(
                KX.shifted_integral(tc, f, draws)
            )
            acc += da * diff
        rhs += w * float(acc.mean())
        rhs_var += (w * float(acc.std(ddof=1)) / math.sqrt(n)) ** 2
    rhs_se = math.sqrt(rhs_var)
    se = math.hypot(lhs_se, rhs_se)
    disc = (lhs - rhs) / se if se > 0 else 0.0
    return InterpolationResult(lhs, float(rhs), float(disc), lhs_se, rhs_se)


def small_time_rate(
    char: PIICharacteristics,
    f,
    t_ladder=0.25,
    n: int = 50_000,
    seed: int = 0,
) -> dict:
    """Richardson extrapolation of E f(X_t) / t toward t = 0.

    ``t_ladder`` is the top of a ratio-2 ladder (4 levels) or an explicit
    decreasing ratio-2 sequence.  Standard errors propagate through the
    extrapolation table.  The reported target A'(0) int f dK and its z
    assume the drift equals the truncated-jump compensator (uncompensated
    jump sums).  Requires a time-homogeneous, finite-activity kernel on
    the ladder range.
    """
    if np.ndim(t_ladder) == 0:
        t0 = float(t_ladder)
        ts = [t0 / 2**j for j in range(4)]
    else:
        ts = [float(v) for v in np.asarray(t_ladder, dtype=float)]
        if len(ts) < 2:
            raise ValueError("ladder needs at least two levels")
        for a, b in zip(ts, ts[1:]):
            if not math.isclose(a, 2.0 * b, rel_tol=1e-9):
                raise ValueError("ladder must decrease by the ratio 2")
        t0 = ts[0]
    if t0 <= 0:
        raise ValueError("ladder times must be positive")
    if not char.kernel.is_finite_activity():
        raise ValueError("small-time analysis needs a finite-activity kernel")
    bks = char.kernel.time_breakpoints()
    if np.any((bks > 0) & (bks <= t0)):
        raise ValueError("small-time analysis needs a time-homogeneous kernel on the ladder")
    abks = char.time_measure.breakpoints
    if np.any((abks > 0) & (abks <= t0)):
        raise ValueError("small-time analysis needs a homogeneous clock on the ladder")
    if any(e.time <= t0 for e in char.fixed_jumps):
        raise ValueError("fixed-time jumps inside the small-time window")
    levels = len(ts)
    means, variances = [], []
    for j, tj in enumerate(ts):
        r = estimate(char, f, tj, n, substream(seed, 17, j))
        means.append(r.estimate / tj)
        variances.append((r.standard_error / tj) ** 2)
    table = [list(means)]
    vtable = [list(variances)]
    for k in range(1, levels):
        coef = 2.0**k
        prev, vprev = table[-1], vtable[-1]
        table.append([(coef * prev[j + 1] - prev[j]) / (coef - 1.0) for j in range(len(prev) - 1)])
        vtable.append(
            [(coef**2 * vprev[j + 1] + vprev[j]) / (coef - 1.0) ** 2 for j in range(len(prev) - 1)]
        )
    est = table[-1][0]
    se = math.sqrt(vtable[-1][0])
    breaks = tuple(getattr(f, "knots", ()))
    target = char.time_measure.slope_at(0.0) * char.kernel.integral(0.0, f, breaks=breaks)
    return {
        "estimate": est,
        "se": se,
        "target": float(target),
        "z": (est - target) / se if se > 0 else 0.0,
        "levels": ts,
        "table": table,
    }


def exact_marginal_expectation(
    char: PIICharacteristics,
    f,
    t: float,
    k_max: int = 80,
    tail_tol: float = 1e-10,
) -> float:
    """Exact E f(X_t) for purely atomic finite-activity characteristics.

    Convolves truncated Poisson laws per atom location (plus discrete
    fixed-time jumps) and applies f to the resulting dictionary; errors
    out when the truncated Poisson tails exceed ``tail_tol``.
    """
    if char.gaussian(t) != 0.0:
        raise ValueError("oracle supports jump-plus-drift characteristics only")
    A = char.time_measure
    edges = char.cell_grid(t)
    edges = np.concatenate([[0.0], edges[edges > 0]])
    lam: dict[float, float] = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        atoms = char.kernel.atoms(float(lo))
        if atoms is None:
            raise ValueError("oracle needs purely atomic kernels")
        da = A.increment(lo, hi)
        if da == 0.0:
            continue
        for loc, wt in atoms:
            if wt:
                lam[loc] = lam.get(loc, 0.0) + wt * da
    dist = {0.0: 1.0}
    for loc, lm in sorted(lam.items()):
        if lm == 0.0:
            continue
        pmf = np.empty(k_max + 1)
        pmf[0] = math.exp(-lm)
        for j in range(1, k_max + 1):
            pmf[j] = pmf[j - 1] * lm / j
        tail = 1.0 - pmf.sum()
        if tail > tail_tol:
            raise ValueError(f"Poisson truncation error {tail:.2e} above {tail_tol:g}; increase k_max")
        new: dict[float, float] = {}
        for v, p in dist.items():
            for j in range(k_max + 1):
                if pmf[j] == 0.0:
                    continue
                key = v + loc * j
                new[key] = new.get(key, 0.0) + p * pmf[j]
        dist = new
    for entry in char.fixed_jumps.before(t):
        atoms = entry.law.atoms()
        if atoms is None:
            raise ValueError("oracle needs discrete fixed-jump laws")
        mix = [(0.0, 1.0 - entry.probability)] + [(loc, entry.probability * w) for loc, w in atoms]
        new = {}
        for v, p in dist.items():
            for loc, w in mix:
                if w == 0.0:
                    continue
                key = v + loc
                new[key] = new.get(key, 0.0) + p * w
        dist = new
    shift = float(char.drift(t)) - h_compensator(char, t)[0]
    for entry in char.fixed_jumps.before(t):
        shift -= entry.h_mean(char.threshold)
    vals = np.array(list(dist.keys()))
    probs = np.array(list(dist.values()))
    return float(np.sum(probs * np.asarray(f(vals + shift))))


def brute_force_oracle(
    charX: PIICharacteristics,
    charY: PIICharacteristics,
    f,
    t: float,
    k_max: int = 80,
) -> tuple[float, float]:
    """(E f(X_t), E f(Y_t)) computed exactly; atomic CP kernels only."""
    return (
        exact_marginal_expectation(charX, f, t, k_max),
        exact_marginal_expectation(charY, f, t, k_max),
    )
