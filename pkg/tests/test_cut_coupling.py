"""Single-crossing kernel splits and the thinned pairing simulation."""

import math

import numpy as np
import pytest

from piiorder import (
    CutPoint,
    ExponentialJumps,
    build_plan,
    empirical_compensator,
    point_mass,
    simulate_cut_coupled,
)

from conftest import EXP1, cp_char

ATOM_X = cp_char(0.3, point_mass(0.5))
ATOM_Y = cp_char(0.5, point_mass(2.0))


def test_atomic_plan_frozen_rates():
    """Atoms on opposite sides of k = 1: lower surplus D = 0.3 is thinned
    out of the upper surplus E = 0.5 at rate 0.6."""
    plan = build_plan(ATOM_X, ATOM_Y, CutPoint(1.0))
    assert plan.details["atomic"] is True
    assert plan.driver_is_y
    assert plan.D[0] == pytest.approx(0.3, abs=1e-12)
    assert plan.E[0] == pytest.approx(0.5, abs=1e-12)
    assert float(plan.r(0.25)) == pytest.approx(0.6, abs=1e-12)
    # no shared atoms and no order-safe surpluses in this pair
    assert plan.common.mass(0.0) == 0.0
    assert plan.driver.mass(0.0) == pytest.approx(0.5)
    assert plan.companion.mass(0.0) == pytest.approx(0.3)
    assert plan.safe_x.mass(0.0) == 0.0
    assert plan.safe_y.mass(0.0) == 0.0


def test_continuous_plan_frozen_rates():
    """Exponential densities crossing at k = 2 ln 1.2: extra masses are
    D = 1/120 below and E = 5/24 above, straight from the closed forms."""
    X = cp_char(0.3, EXP1)
    Y = cp_char(0.5, ExponentialJumps(mean_size=2.0))
    plan = build_plan(X, Y, CutPoint(2.0 * math.log(1.2)))
    assert plan.details["atomic"] is False
    assert plan.D[0] == pytest.approx(1.0 / 120.0, abs=1e-12)
    assert plan.E[0] == pytest.approx(5.0 / 24.0, abs=1e-12)
    assert float(plan.r(0.5)) == pytest.approx(0.04, abs=1e-12)


def test_plan_validation():
    """Cut at 0, mixed kernel types, and failed compensation all refuse."""
    with pytest.raises(ValueError, match="cut at 0"):
        build_plan(ATOM_X, ATOM_Y, CutPoint(0.0))
    with pytest.raises(ValueError, match="comparable"):
        build_plan(ATOM_X, cp_char(0.5, ExponentialJumps(mean_size=2.0)), CutPoint(1.0))
    with pytest.raises(ValueError, match="compensation inequality"):
        build_plan(cp_char(0.7, point_mass(0.5)), ATOM_Y, CutPoint(1.0))


def test_plan_requires_single_crossing():
    """X mass exceeding Y above the cut is not a single crossing."""
    with pytest.raises(ValueError, match="single-crossing"):
        build_plan(cp_char(0.5, point_mass(2.0)), cp_char(0.3, point_mass(2.0)), CutPoint(1.0))


def test_cut_simulation_atomic_order_and_rates():
    """Every path ordered; companion jumps fire at rate E r = D; the
    accepted fraction of driver events matches the thinning rate."""
    plan = build_plan(ATOM_X, ATOM_Y, CutPoint(1.0))
    cp = simulate_cut_coupled(plan, ATOM_X, ATOM_Y, 10.0, 40, 200, seed=0)
    assert cp.violations() == 0
    assert cp.metadata["coupling"] == "single-cut"
    mean, exact, z = empirical_compensator(cp, ATOM_X, ((0.0, 10.0), (0.25, 0.75)), process="X")
    assert exact == pytest.approx(3.0)  # 0.3 per unit time
    assert abs(z) < 5.0
    log = cp.paired_log
    frac = log["accepted"].mean()
    assert abs(frac - 0.6) < 5 * math.sqrt(0.6 * 0.4 / len(log))
    # accepted events carry the X atom, every driver event the Y atom
    assert set(np.unique(log["x"][log["accepted"]])) == {0.5}
    assert set(np.unique(log["y"])) == {2.0}
    assert np.all(log["x"][~log["accepted"]] == 0.0)


def test_cut_simulation_continuous_order_and_rates():
    """Tabulated split parts still reproduce the per-process jump rates."""
    X = cp_char(0.3, EXP1)
    Y = cp_char(0.5, ExponentialJumps(mean_size=2.0))
    plan = build_plan(X, Y, CutPoint(2.0 * math.log(1.2)))
    cp = simulate_cut_coupled(plan, X, Y, 10.0, 40, 150, seed=2)
    assert cp.violations() == 0
    for char, name in ((X, "X"), (Y, "Y")):
        mean, exact, z = empirical_compensator(cp, char, ((0.0, 10.0), (0.1, 5.0)), process=name)
        assert abs(z) < 5.0


def test_cut_simulation_reproducible():
    """Same seed replays identical coupled paths and event logs."""
    plan = build_plan(ATOM_X, ATOM_Y, CutPoint(1.0))
    a = simulate_cut_coupled(plan, ATOM_X, ATOM_Y, 2.0, 10, 6, seed=5)
    b = simulate_cut_coupled(plan, ATOM_X, ATOM_Y, 2.0, 10, 6, seed=5)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    assert np.array_equal(a.paired_log, b.paired_log)


def test_empirical_compensator_box_conventions():
    """Boxes need positive time length and sizes bounded away from 0."""
    plan = build_plan(ATOM_X, ATOM_Y, CutPoint(1.0))
    cp = simulate_cut_coupled(plan, ATOM_X, ATOM_Y, 2.0, 10, 20, seed=1)
    with pytest.raises(ValueError, match="positive length"):
        empirical_compensator(cp, ATOM_X, ((1.0, 1.0), (0.25, 0.75)))
    with pytest.raises(ValueError, match="away from 0"):
        empirical_compensator(cp, ATOM_X, ((0.0, 1.0), (-0.5, 0.75)))
    mean, exact, z = empirical_compensator(cp, ATOM_Y, ((0.0, 2.0), (1.5, 2.5)), process="Y")
    assert exact == pytest.approx(1.0)  # 0.5 per unit time over two units
