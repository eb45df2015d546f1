"""Deterministic order-condition checkers and their report plumbing."""

import json
import math

import numpy as np
import pytest

from piiorder import (
    CGMYKernel,
    CompoundPoissonKernel,
    CutPoint,
    DiscreteJumps,
    ExponentialJumps,
    Grid,
    OrderReport,
    PIICharacteristics,
    PiecewiseLinear,
    SuperposedKernel,
    TestFunctionFamily,
    TimeMeasure,
    TruncationLadder,
    build_grid,
    check_convex_majorization,
    check_cut,
    check_cx,
    check_drift,
    check_icx,
    check_st_tails,
    default_horizon,
    kernel_order_defn_check,
    point_mass,
)

from conftest import EXP1, cp_char, h_slope

LEB = TimeMeasure.lebesgue()
KX1 = CompoundPoissonKernel(1.0, EXP1)
KY2 = CompoundPoissonKernel(2.0, EXP1)
# small grid keeps the quadrature-heavy stop-loss checks fast
SMALL = Grid(
    np.linspace(0.1, 1.0, 4),
    np.array([-2.0, -0.5, 0.25, 0.5, 1.0, 2.0, 4.0]),
    description="compact",
)


def test_report_guards_and_serialization():
    """Reports reject unknown verdicts, require witnesses for violations,
    and serialize to JSON."""
    with pytest.raises(ValueError, match="verdict"):
        OrderReport(verdict="maybe", theorem="t")
    with pytest.raises(ValueError, match="witnesses"):
        OrderReport(verdict="violated", theorem="t")
    rep = check_st_tails(KX1, KY2, LEB)
    json.dumps(rep.to_dict())


def test_truncation_ladder_validation():
    """Levels must be positive and strictly decreasing."""
    with pytest.raises(ValueError):
        TruncationLadder(())
    with pytest.raises(ValueError):
        TruncationLadder((0.5, 0.5))
    with pytest.raises(ValueError):
        TruncationLadder((-1.0,))
    lad = TruncationLadder.geometric(0.1, top=1.0, levels=4)
    eps = list(lad)
    assert eps[0] == pytest.approx(1.0)
    assert eps[-1] == pytest.approx(0.1)
    assert all(b < a for a, b in zip(eps, eps[1:]))


def test_cut_point_sides():
    """side picks which region owns the boundary atom at k."""
    right = CutPoint(1.0)
    assert right.upper_includes_k
    assert bool(right.in_upper(1.0))
    left = CutPoint(1.0, side="left-closed")
    assert not left.upper_includes_k
    assert not bool(left.in_upper(1.0))
    assert bool(left.in_upper(1.0 + 1e-9))
    with pytest.raises(ValueError):
        CutPoint(1.0, side="middle")
    with pytest.raises(ValueError):
        CutPoint(math.inf)


def test_grid_excludes_zero():
    """x = 0 is never a valid tail/stop-loss probe level."""
    with pytest.raises(ValueError, match="exclude 0"):
        Grid(np.array([0.5]), np.array([-1.0, 0.0, 1.0]))
    g = Grid(np.array([0.5]), np.array([-1.0, 2.0]))
    assert list(g.x_pos) == [2.0]
    assert list(g.x_neg) == [-1.0]


def test_build_grid_skips_dead_clock_cells():
    """Times where the clock has zero slope are dropped from the grid."""
    A = TimeMeasure([0.0, 1.0], [1.0, 0.0])
    g = build_grid([KX1], A, t_max=3.0)
    assert np.all(g.times <= 1.0 + 1e-12)
    assert np.any(g.x > 0) and np.any(g.x < 0)


def test_default_horizon():
    """1.25x the largest breakpoint, floored at 1."""
    assert default_horizon(LEB, KX1) == pytest.approx(1.0)
    staged = CompoundPoissonKernel([1.0, 2.0], EXP1, breakpoints=[0.0, 2.0])
    assert default_horizon(LEB, staged) == pytest.approx(2.5)


def test_tail_dominance_rate_bump():
    """Doubling a compound-Poisson rate dominates in the tail order."""
    rep = check_st_tails(KX1, KY2, LEB)
    assert rep.verdict == "satisfied"
    assert rep.details["n_violations"] == 0
    assert rep.theorem == "tail-dominance"


def test_tail_dominance_violated_with_witnesses():
    """Reversing the pair produces witnesses sorted worst-first."""
    rep = check_st_tails(KY2, KX1, LEB)
    assert rep.verdict == "violated"
    t, x, lhs, rhs = rep.witnesses[0]
    assert x > 0 and lhs > rhs
    # worst margin first: upper tail gap is largest near x = 0+
    gaps = [w[3] - w[2] for w in rep.witnesses]
    assert gaps == sorted(gaps)


def test_drift_condition_oracle():
    """With drift equal to the truncated-jump compensator the inequality
    binds exactly; with zero drifts the compensator gap is the witness."""
    good = check_drift(cp_char(1.0, EXP1), cp_char(2.0, EXP1), times=[0.5, 1.0])
    assert good.verdict == "satisfied"
    bad = check_drift(
        cp_char(1.0, EXP1, drift_slope=0.0),
        cp_char(2.0, EXP1, drift_slope=0.0),
        times=[1.0],
    )
    assert bad.verdict == "violated"
    t, eps, lhs, rhs = bad.witnesses[0]
    # compensator gap at t=1 equals the extra rate times E h(J)
    assert lhs == pytest.approx(0.2642411176571154, rel=1e-12)
    assert rhs == 0.0 and eps == 0.0


def test_drift_ladder_only_shrinks_positive_jump_compensators():
    """For positive jumps, restricting to {|y| >= eps} lowers the truncated
    compensator, so a satisfied eps=0 inequality stays satisfied."""
    lad = TruncationLadder((0.5, 0.25))
    rep = check_drift(cp_char(1.0, EXP1), cp_char(2.0, EXP1), ladder=lad, times=[1.0])
    assert rep.verdict == "satisfied"
    assert rep.details["levels"] == [0.5, 0.25]


def test_drift_infinite_variation_needs_ladder():
    """At eps = 0 an infinite-variation kernel has no truncated compensator:
    the check is inconclusive until a positive ladder is supplied."""
    rough = PIICharacteristics(
        drift=PiecewiseLinear.zero(),
        gaussian=PiecewiseLinear.zero(),
        kernel=CGMYKernel(1.0, 1.0, 1.0, 1.2),
        time_measure=LEB,
    )
    base = cp_char(1.0, EXP1)
    rep0 = check_drift(base, rough, times=[1.0])
    assert rep0.verdict == "inconclusive"
    assert any("not computable" in w for w in rep0.warnings)
    repl = check_drift(base, rough, ladder=TruncationLadder.geometric(0.25, levels=3), times=[1.0])
    assert repl.verdict == "violated"  # positive compensator vs negative drift gap


def test_stop_loss_dominance_icx():
    """Kernel stop-loss functions ordered for the rate bump, reversed fails."""
    assert check_icx(KX1, KY2, LEB, grid=SMALL).verdict == "satisfied"
    rep = check_icx(KY2, KX1, LEB, grid=SMALL)
    assert rep.verdict == "violated"
    t, x, lhs, rhs = rep.witnesses[0]
    assert lhs > rhs


def test_cx_requires_equal_means():
    """A mean-preserving spread passes; a rate bump fails the mean rows."""
    spread_x = CompoundPoissonKernel(2.0, point_mass(0.5))
    spread_y = CompoundPoissonKernel(1.0, point_mass(1.0))
    rep = check_cx(spread_x, spread_y, LEB, grid=SMALL)
    assert rep.verdict == "satisfied"
    assert rep.details["stop_loss"] == "satisfied"
    bump = check_cx(KX1, KY2, LEB, grid=SMALL)
    assert bump.verdict == "violated"
    assert any(math.isnan(w[1]) for w in bump.witnesses)  # NaN x marks mean rows


def test_cut_criterion_atomic():
    """Atoms on opposite sides of the cut with D <= E pass the criterion."""
    X = cp_char(0.3, point_mass(0.5))
    Y = cp_char(0.5, point_mass(2.0))
    rep = check_cut(X, Y, CutPoint(1.0))
    assert rep.verdict == "satisfied"
    assert rep.details["cut"] == {"k": 1.0, "side": "right-closed"}


def test_cut_criterion_violated_when_compensation_fails():
    """Extra lower mass D beyond the upper surplus E is witnessed."""
    X = cp_char(0.7, point_mass(0.5))
    Y = cp_char(0.5, point_mass(2.0))
    rep = check_cut(X, Y, CutPoint(1.0))
    assert rep.verdict == "violated"
    rows = [w for w in rep.witnesses if not math.isnan(w[1])]
    t, k, d, e = rows[0]
    assert k == 1.0
    assert d == pytest.approx(0.7, abs=1e-12)
    assert e == pytest.approx(0.5, abs=1e-12)


def test_cut_criterion_continuous_densities():
    """Exponential densities crossing once at k = 2 ln 1.2 pass."""
    X = cp_char(0.3, EXP1)
    Y = cp_char(0.5, ExponentialJumps(mean_size=2.0))
    rep = check_cut(X, Y, CutPoint(2.0 * math.log(1.2)))
    assert rep.verdict == "satisfied"


def test_cut_criterion_rejects_mixed_kernels():
    """Atomic vs continuous kernels expose no comparable densities."""
    X = cp_char(0.3, point_mass(0.5))
    Y = cp_char(0.5, ExponentialJumps(mean_size=2.0))
    rep = check_cut(X, Y, CutPoint(1.0))
    assert rep.verdict == "inconclusive"
    assert any("comparable" in w for w in rep.warnings)


def test_cut_criterion_drift_row_witnessed():
    """A drift difference below the compensator difference is a violation."""
    X = cp_char(0.3, point_mass(0.5))
    Y = cp_char(0.5, point_mass(2.0), drift_slope=-1.0)
    rep = check_cut(X, Y, CutPoint(1.0), times=[1.0])
    assert rep.verdict == "violated"
    assert any(math.isnan(w[1]) for w in rep.witnesses)


def test_convex_majorization_icx_addon():
    """Adding a positive-mean atom on top of X yields icx, not cx."""
    slope = h_slope(1.0, EXP1)
    X = cp_char(1.0, EXP1, drift_slope=slope)
    KY = SuperposedKernel([KX1, CompoundPoissonKernel(0.5, point_mass(2.0))])
    Y = PIICharacteristics(
        drift=PiecewiseLinear.constant_slope(slope),  # atom at 2 is beyond the threshold
        gaussian=PiecewiseLinear.zero(),
        kernel=KY,
        time_measure=LEB,
    )
    rep = check_convex_majorization(X, Y, times=[0.5, 1.0])
    assert rep.verdict == "satisfied"
    assert rep.details["order"] == "icx"
    assert rep.details["equality"] is False


def test_convex_majorization_cx_addon():
    """A symmetric add-on atom pair keeps means equal: order cx."""
    slope = h_slope(1.0, EXP1)
    X = cp_char(1.0, EXP1, drift_slope=slope)
    sym = CompoundPoissonKernel(1.0, DiscreteJumps([-1.0, 1.0], [0.5, 0.5]))
    Y = PIICharacteristics(
        drift=PiecewiseLinear.constant_slope(slope),  # symmetric atoms have zero h-mean
        gaussian=PiecewiseLinear.zero(),
        kernel=SuperposedKernel([KX1, sym]),
        time_measure=LEB,
    )
    rep = check_convex_majorization(X, Y, times=[0.5, 1.0])
    assert rep.verdict == "satisfied"
    assert rep.details["order"] == "cx"


def test_convex_majorization_signed_difference_violated():
    """KY - KX must be a nonnegative measure cell by cell."""
    X = cp_char(1.0, EXP1)
    Y = cp_char(0.5, EXP1)
    rep = check_convex_majorization(X, Y)
    assert rep.verdict == "violated"


def test_kernel_order_definition_check():
    """Defining inequality over a test-function family; doubling the rate
    of a nonnegative-jump kernel doubles every nonnegative integral."""
    fam = TestFunctionFamily("st", seed=0)
    assert kernel_order_defn_check(KX1, KY2, LEB, fam).verdict == "satisfied"
    rep = kernel_order_defn_check(KY2, KX1, LEB, fam)
    assert rep.verdict == "violated"
    with pytest.raises(ValueError, match="degenerate"):
        kernel_order_defn_check(KX1, KY2, LEB, [])
