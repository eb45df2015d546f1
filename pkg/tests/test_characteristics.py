"""Characteristic triplets: compensators, fixed jumps, alignment, parsing."""

import math

import numpy as np
import pytest

from piiorder import (
    CompoundPoissonKernel,
    DiscreteJumps,
    ExponentialJumps,
    FixedJumpEntry,
    FixedJumpSchedule,
    PIICharacteristics,
    PiecewiseLinear,
    TimeMeasure,
    TruncationFunction,
    align_pair,
    combine,
    decompose,
    h_compensator,
    parse_process_spec,
    point_mass,
    stop_loss,
    tail,
)
from conftest import EXP1, cp_char


def test_h_compensator_oracle():
    """CP(1, Exp(1)) truncated compensator at t = 1 equals 1 - 2/e."""
    char = cp_char(1.0, EXP1, drift_slope=0.0)
    val, err = h_compensator(char, 1.0)
    assert val == pytest.approx(1.0 - 2.0 * math.exp(-1.0), abs=1e-10)
    assert err >= 0.0


def test_h_compensator_scales_with_clock():
    """Doubling the clock slope doubles the compensator."""
    fast = TimeMeasure([0.0], [2.0])
    char = cp_char(1.0, EXP1, drift_slope=0.0, time_measure=fast)
    val, _ = h_compensator(char, 1.0)
    assert val == pytest.approx(2.0 * (1.0 - 2.0 * math.exp(-1.0)), abs=1e-9)


def test_truncation_function_split():
    """h and its residual partition the identity."""
    h = TruncationFunction(1.0)
    ys = np.array([-2.0, -0.5, 0.5, 1.0, 3.0])
    np.testing.assert_allclose(h(ys) + h.residual(ys), ys)
    np.testing.assert_array_equal(h(ys), [0.0, -0.5, 0.5, 1.0, 0.0])


def test_tail_and_stop_loss_wrappers():
    """Signed-tail convention and kernel stop-loss pass-through."""
    K = CompoundPoissonKernel(2.0, EXP1)
    assert tail(K, 0.0, 1.0) == pytest.approx(2.0 * math.exp(-1.0))
    assert stop_loss(K, 0.0, 2.0) == pytest.approx(2.0 * math.exp(-2.0))
    with pytest.raises(ValueError):
        tail(K, 0.0, 0.0)


def test_fixed_entry_h_mean_includes_probability():
    """h-mean of a fixed jump is p * E h(J)."""
    entry = FixedJumpEntry(0.5, 0.25, point_mass(0.8))
    assert entry.h_mean(1.0) == pytest.approx(0.25 * 0.8)
    big = FixedJumpEntry(0.5, 0.25, point_mass(2.0))
    assert big.h_mean(1.0) == 0.0  # beyond the threshold h vanishes


def test_fixed_entry_mixture_quantile():
    """The mixture's generalized inverse puts mass 1 - p at 0."""
    entry = FixedJumpEntry(1.0, 0.5, point_mass(2.0))
    assert entry.mixture_quantile(0.25) == 0.0
    assert entry.mixture_quantile(0.75) == 2.0


def test_schedule_orders_and_rejects_duplicates():
    """Entries sort by time; a time may carry only one entry."""
    e1 = FixedJumpEntry(2.0, 1.0, point_mass(1.0))
    e2 = FixedJumpEntry(1.0, 1.0, point_mass(1.0))
    sched = FixedJumpSchedule((e1, e2))
    assert [e.time for e in sched] == [1.0, 2.0]
    assert len(sched.before(1.5)) == 1
    with pytest.raises(ValueError):
        FixedJumpSchedule((e1, e1))


def test_decompose_shifts_drift_by_fixed_h_mean():
    """Removing a fixed jump moves its h-compensator into the drift."""
    entry = FixedJumpEntry(0.5, 1.0, point_mass(0.4))
    char = cp_char(1.0, EXP1, drift_slope=0.0, fixed_jumps=FixedJumpSchedule((entry,)))
    qlc, sched = decompose(char)
    assert len(qlc.fixed_jumps) == 0
    assert len(sched) == 1
    assert qlc.drift(0.49) == 0.0
    assert qlc.drift(0.5) == pytest.approx(-0.4)
    assert qlc.drift.left_limit(0.5) == 0.0


def test_gaussian_variance_must_be_nondecreasing():
    """A decreasing variance curve is rejected on construction."""
    bad = PiecewiseLinear.from_points([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    with pytest.raises(ValueError):
        PIICharacteristics(gaussian=bad)


def test_align_pair_preserves_jump_measure():
    """Rescaling to the joint clock keeps K dA invariant."""
    A_slow = TimeMeasure([0.0], [0.5])
    x = cp_char(2.0, EXP1, drift_slope=0.0, time_measure=A_slow)
    y = cp_char(1.0, EXP1, drift_slope=0.0)
    ax, ay = align_pair(x, y)
    assert ax.time_measure.equal(ay.time_measure)
    # compensators are invariants of K dA
    for char, ref in ((ax, x), (ay, y)):
        v_new, _ = h_compensator(char, 2.0)
        v_old, _ = h_compensator(ref, 2.0)
        assert v_new == pytest.approx(v_old, rel=1e-9)


def test_combine_requires_shared_clock():
    """Summands must be aligned first."""
    x = cp_char(1.0, EXP1, drift_slope=0.0)
    y = cp_char(1.0, EXP1, drift_slope=0.0, time_measure=TimeMeasure([0.0], [2.0]))
    with pytest.raises(ValueError):
        combine(x, y)


def test_combine_adds_triplets():
    """Sum of independent processes adds drifts, variances, and kernels."""
    x = cp_char(1.0, EXP1, drift_slope=0.5)
    y = cp_char(2.0, EXP1, drift_slope=-0.25)
    z = combine(x, y)
    assert z.drift(1.0) == pytest.approx(0.25)
    assert z.kernel.mass(0.0) == pytest.approx(3.0)


def test_parse_process_spec_full_roundtrip():
    """A spec with every section builds the expected triplet."""
    spec = {
        "drift": [[0.0, 0.0], [1.0, 0.3]],
        "gaussian": [[0.0, 0.0], [2.0, 1.0]],
        "kernel": {
            "family": "compound-poisson",
            "rates": [1.0, 2.0],
            "breakpoints": [0.0, 1.0],
            "jumps": {"type": "exponential", "mean": 2.0},
        },
        "time_measure": {"breakpoints": [0.0, 1.0], "slopes": [1.0, 0.5]},
        "fixed_jumps": [{"time": 0.5, "p": 0.5, "jumps": {"type": "point", "at": 1.5}}],
        "threshold": 2.0,
    }
    char = parse_process_spec(spec)
    assert char.drift(1.0) == pytest.approx(0.3)
    assert char.gaussian(2.0) == pytest.approx(1.0)
    assert char.kernel.upper_tail(1.5, 2.0) == pytest.approx(2.0 * math.exp(-1.0))
    assert char.time_measure(2.0) == pytest.approx(1.5)
    assert char.threshold == 2.0
    assert len(char.fixed_jumps) == 1


def test_parse_process_spec_rejects_unknown_keys():
    """Misspelled sections name the offending key."""
    with pytest.raises(ValueError, match="drfit"):
        parse_process_spec({"drfit": [[0.0, 0.0]]})
    with pytest.raises(ValueError, match="rate_"):
        parse_process_spec({"kernel": {"family": "compound-poisson", "rate_": 1.0, "jumps": {"type": "point", "at": 1.0}}})


def test_parse_jump_laws():
    """All four jump-law tags parse to the right families."""
    disc = parse_process_spec({"kernel": {"family": "compound-poisson", "rate": 1.0, "jumps": {"type": "discrete", "locations": [1.0, 2.0], "weights": [0.5, 0.5]}}})
    assert isinstance(disc.kernel.dist, DiscreteJumps)
    uni = parse_process_spec({"kernel": {"family": "compound-poisson", "rate": 1.0, "jumps": {"type": "uniform", "lo": 0.0, "hi": 1.0}}})
    assert uni.kernel.dist.hi == 1.0
    neg = parse_process_spec({"kernel": {"family": "compound-poisson", "rate": 1.0, "jumps": {"type": "exponential", "mean": 1.0, "sign": -1}}})
    assert isinstance(neg.kernel.dist, ExponentialJumps) and neg.kernel.dist.sign == -1


def test_cell_grid_merges_breakpoints():
    """cell_grid unions kernel and clock breakpoints below the horizon."""
    K = CompoundPoissonKernel([1.0, 2.0], EXP1, breakpoints=[0.0, 0.7])
    A = TimeMeasure([0.0, 1.3], [1.0, 2.0])
    char = PIICharacteristics(kernel=K, time_measure=A)
    np.testing.assert_allclose(char.cell_grid(2.0), [0.0, 0.7, 1.3, 2.0])
