"""Cadlag piecewise-linear curves and piecewise-linear clocks."""

import numpy as np
import pytest

from piiorder import PiecewiseLinear, TimeMeasure
from piiorder.rng import substream


def test_constant_slope_is_a_line():
    """constant_slope evaluates as slope * t with no jumps."""
    f = PiecewiseLinear.constant_slope(0.75)
    assert f(0.0) == 0.0
    assert f(2.0) == pytest.approx(1.5)
    assert f.jump_times() == []


def test_from_points_interpolates_and_extends_last_slope():
    """from_points hits each node and continues the final segment."""
    f = PiecewiseLinear.from_points([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    assert f(0.5) == pytest.approx(1.0)
    assert f(1.0) == pytest.approx(2.0)
    assert f(2.0) == pytest.approx(1.5)
    assert f(4.0) == pytest.approx(0.5)  # slope -0.5 extended


def test_steps_make_the_curve_cadlag():
    """with_steps adds right-continuous jumps visible to left_limit."""
    f = PiecewiseLinear.constant_slope(1.0).with_steps([(1.0, -0.25)])
    assert f(1.0) == pytest.approx(0.75)
    assert f.left_limit(1.0) == pytest.approx(1.0)
    assert f.jump_times() == [(1.0, pytest.approx(-0.25))]
    assert not f.is_nondecreasing()


def test_first_knot_must_be_zero():
    """Curves are anchored at t = 0."""
    with pytest.raises(ValueError):
        PiecewiseLinear([1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        TimeMeasure([0.5], [1.0])


def test_algebra_matches_pointwise_arithmetic():
    """Sum, difference, and scaling agree with pointwise evaluation."""
    f = PiecewiseLinear.from_points([[0.0, 0.0], [1.0, 1.0], [2.0, 3.0]])
    g = PiecewiseLinear.constant_slope(-0.5).with_steps([(1.5, 2.0)])
    ts = np.linspace(0.0, 3.0, 61)
    np.testing.assert_allclose((f + g)(ts), f(ts) + g(ts), atol=1e-12)
    np.testing.assert_allclose((f - g)(ts), f(ts) - g(ts), atol=1e-12)
    np.testing.assert_allclose(f.scaled(-2.0)(ts), -2.0 * f(ts), atol=1e-12)


def test_equal_ignores_knot_placement():
    """equal compares functions, not representations."""
    a = PiecewiseLinear.constant_slope(1.0)
    b = PiecewiseLinear.from_points([[0.0, 0.0], [0.5, 0.5], [2.0, 2.0]])
    assert a.equal(b)
    assert not a.equal(b.scaled(1.0 + 1e-6))


def test_clock_rejects_negative_slopes():
    """Clocks are nondecreasing by construction."""
    with pytest.raises(ValueError):
        TimeMeasure([0.0, 1.0], [1.0, -0.5])


def test_clock_increment_and_flat_spells():
    """A flat spell contributes no clock mass."""
    A = TimeMeasure([0.0, 1.0, 2.0], [1.0, 0.0, 2.0])
    assert A(1.0) == pytest.approx(1.0)
    assert A.increment(1.0, 2.0) == 0.0
    assert A.increment(2.0, 3.0) == pytest.approx(2.0)
    assert A.slope_at(1.5) == 0.0


def test_clock_inverse_is_generalized():
    """inverse returns the first hitting time, flats collapse to their start."""
    A = TimeMeasure([0.0, 1.0, 2.0], [1.0, 0.0, 2.0])
    assert A.inverse(0.5) == pytest.approx(0.5)
    assert A.inverse(1.0) == pytest.approx(1.0)  # start of the flat spell
    assert A.inverse(1.5) == pytest.approx(2.25)
    assert A.inverse(0.0) == 0.0


def test_clock_inverse_unreachable_level_is_inf():
    """Levels beyond a terminally flat clock are never hit."""
    A = TimeMeasure([0.0, 1.0], [1.0, 0.0])
    assert A.inverse(2.0) == np.inf


@pytest.mark.parametrize("seed", list(range(8)))
def test_clock_inverse_roundtrip(seed):
    """A(inverse(a)) == a for levels inside the range of a random clock."""
    rng = substream(seed, 1)
    n = int(rng.integers(1, 5))
    bps = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 3.0, size=n))])
    slopes = rng.uniform(0.1, 2.0, size=n + 1)
    A = TimeMeasure(bps, slopes)
    levels = rng.uniform(0.0, float(A(3.5)), size=32)
    np.testing.assert_allclose(A(A.inverse(levels)), levels, atol=1e-10)


@pytest.mark.parametrize("seed", list(range(8)))
def test_resample_preserves_values(seed):
    """Adding knots through addition with zero never changes a curve."""
    rng = substream(seed, 2)
    pts = np.column_stack([
        np.concatenate([[0.0], np.sort(rng.uniform(0.1, 4.0, size=3))]),
        rng.normal(size=4),
    ])
    pts[0, 1] = 0.0
    f = PiecewiseLinear.from_points(pts)
    t_extra = float(rng.uniform(0.1, 4.0))
    zero_with_knot = PiecewiseLinear([0.0, t_extra], [0.0, 0.0], [0.0, 0.0])
    assert f.equal(f + zero_with_knot)


def test_clock_sum_adds_mass():
    """Clock addition is pointwise."""
    A = TimeMeasure.lebesgue()
    B = TimeMeasure([0.0, 1.0], [0.0, 3.0])
    C = A + B
    assert C(0.5) == pytest.approx(0.5)
    assert C(2.0) == pytest.approx(2.0 + 3.0)
