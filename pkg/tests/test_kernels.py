"""Jump kernels: tails, integrals, inverse tails, tabulation, superposition."""

import math

import numpy as np
import pytest

from piiorder import (
    CGMYKernel,
    CompoundPoissonKernel,
    ExponentialJumps,
    SuperposedKernel,
    TabulatedKernel,
    UniformJumps,
    point_mass,
    zero_kernel,
)

EXP1 = ExponentialJumps(mean_size=1.0)


def test_cp_tail_oracle():
    """K(t, [1, inf)) = 2/e for rate 2, unit-exponential jumps."""
    K = CompoundPoissonKernel(2.0, EXP1)
    assert K.upper_tail(0.0, 1.0) == pytest.approx(2.0 * math.exp(-1.0), abs=1e-14)
    assert K.mass(0.0) == pytest.approx(2.0)
    assert K.is_finite_activity()


def test_cp_stop_loss_oracle():
    """int (y - 2)+ K(dy) = e^{-2} for rate 1, unit-exponential jumps."""
    K = CompoundPoissonKernel(1.0, EXP1)
    assert K.stop_loss(0.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)


def test_cp_h_integral_oracle():
    """int h dK = 1 - 2/e for rate 1, unit-exponential jumps, threshold 1."""
    K = CompoundPoissonKernel(1.0, EXP1)
    assert K.h_integral(0.0, 1.0) == pytest.approx(1.0 - 2.0 * math.exp(-1.0), abs=1e-12)


def test_cp_piecewise_rates_switch_cells():
    """Per-cell rates apply on [breakpoint, next breakpoint)."""
    K = CompoundPoissonKernel([1.0, 3.0], EXP1, breakpoints=[0.0, 2.0])
    assert K.rate(1.9) == 1.0
    assert K.rate(2.0) == 3.0
    assert K.upper_tail(5.0, 0.5) == pytest.approx(3.0 * math.exp(-0.5))


def test_zero_kernel_has_no_mass():
    """The jump-free kernel integrates everything to 0."""
    K = zero_kernel()
    assert K.mass(0.0) == 0.0
    assert K.integral(0.0, lambda y: np.abs(y)) == 0.0
    assert K.atoms(0.0) == [(1.0, 0.0)]


def test_cgmy_tail_oracle():
    """CGMY(1,1,1,0.5) upper tail at 1, frozen from the incomplete-gamma form."""
    K = CGMYKernel(1.0, 1.0, 1.0, 0.5)
    assert K.upper_tail(0.0, 1.0) == pytest.approx(0.17814771178155975, rel=1e-10)
    assert not K.is_finite_activity()


def test_cgmy_small_jumps_summable_iff_y_below_one():
    """h-integral diverges for Y >= 1 and is finite for Y < 1."""
    fin = CGMYKernel(1.0, 1.0, 1.0, 0.5)
    assert math.isfinite(fin.h_integral(0.0, 1.0))
    div = CGMYKernel(1.0, 1.0, 1.0, 1.2)
    assert math.isnan(div.h_integral(0.0, 1.0))


def test_cgmy_mass_outside_matches_tails():
    """mass_outside(eps) is the sum of the two tails at +-eps."""
    K = CGMYKernel(0.5, 2.0, 1.5, 0.8)
    eps = 0.2
    total = float(K.upper_tail(0.0, eps) + K.lower_tail(0.0, -eps))
    assert K.mass_outside(0.0, eps) == pytest.approx(total, rel=1e-12)


def test_inverse_upper_tail_is_generalized_inverse():
    """Tail inverse returns the largest level with tail mass above the target."""
    K = CompoundPoissonKernel(2.0, EXP1)
    # K [y, inf) = 2 e^{-y}; level 1/x with x = 2 gives y = ln 4
    y = float(K.inverse_upper_tail(0.0, 0.5))
    assert y == pytest.approx(math.log(4.0), abs=1e-9)
    assert float(K.inverse_upper_tail(0.0, 3.0)) == 0.0  # level above total mass


def test_atomic_inverse_upper_tail_steps():
    """Atomic kernels produce step inverse tails (bisection tolerance)."""
    K = CompoundPoissonKernel(1.0, point_mass(2.0))
    assert float(K.inverse_upper_tail(0.0, 0.5)) == pytest.approx(2.0, abs=1e-8)
    assert float(K.inverse_upper_tail(0.0, 1.0)) == pytest.approx(2.0, abs=1e-8)
    assert float(K.inverse_upper_tail(0.0, 1.5)) == 0.0


def test_tabulated_kernel_reproduces_tails():
    """Tabulating exponential tails reproduces them within interpolation error."""
    xs = np.linspace(0.01, 8.0, 400)
    tails = 2.0 * np.exp(-xs)
    K = TabulatedKernel.from_data(xs, tails, [], [])
    probe = np.linspace(0.05, 6.0, 50)
    np.testing.assert_allclose(K.upper_tail(0.0, probe), 2.0 * np.exp(-probe), rtol=5e-4)
    assert K.positive_mass(0.0) == pytest.approx(2.0 * math.exp(-0.01), rel=1e-12)


def test_tabulated_stop_loss_close_to_exact():
    """Stop-loss from tabulated tails integrates the interpolant exactly."""
    xs = np.linspace(0.01, 12.0, 600)
    K = TabulatedKernel.from_data(xs, np.exp(-xs), [], [])
    assert K.stop_loss(0.0, 2.0) == pytest.approx(math.exp(-2.0), rel=2e-3)


def test_superposed_kernel_adds_components():
    """Superposition adds tails, masses, and integrals."""
    K1 = CompoundPoissonKernel(1.0, EXP1)
    K2 = CompoundPoissonKernel(0.5, point_mass(-1.0))
    K = SuperposedKernel([K1, K2])
    assert K.mass(0.0) == pytest.approx(1.5)
    assert K.upper_tail(0.0, 0.5) == pytest.approx(math.exp(-0.5))
    assert K.lower_tail(0.0, -1.0) == pytest.approx(0.5)
    f = lambda y: np.abs(y)
    assert K.integral(0.0, f) == pytest.approx(K1.integral(0.0, f) + K2.integral(0.0, f))


def test_scaled_kernel_scales_everything():
    """scaled(c) multiplies all masses by c."""
    K = CompoundPoissonKernel(2.0, EXP1).scaled(0.25)
    assert K.mass(0.0) == pytest.approx(0.5)
    assert K.upper_tail(0.0, 1.0) == pytest.approx(0.5 * math.exp(-1.0))
    with pytest.raises(ValueError):
        CompoundPoissonKernel(2.0, EXP1).scaled(-1.0)


def test_shifted_integral_is_zero_for_zero_rate():
    """A dead cell contributes nothing to generator averages."""
    K = CompoundPoissonKernel([0.0, 1.0], EXP1, breakpoints=[0.0, 1.0])
    z = np.array([0.0, 0.3])
    np.testing.assert_array_equal(K.shifted_integral(0.5, lambda y: y, z), np.zeros(2))


def test_shifted_integral_matches_expectation():
    """int [f(z+y) - f(z)] K(dy) from the law's shifted expectation."""
    K = CompoundPoissonKernel(2.0, EXP1)
    f = lambda y: np.maximum(np.asarray(y) - 1.0, 0.0)
    z = np.array([0.0, 0.5])
    got = K.shifted_integral(0.0, f, z)
    want = 2.0 * (EXP1.expect_shifted(f, z) - f(z))
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_band_first_moment_tabulated_exponential():
    """int_{[a,b]} y K(dy) on tabulated exponential tails vs closed form."""
    xs = np.linspace(0.005, 15.0, 1500)
    K = TabulatedKernel.from_data(xs, np.exp(-xs), [], [])
    got = K.band_first_moment(0.0, 0.5, 1.5)
    exact = (0.5 + 1.0) * math.exp(-0.5) - (1.5 + 1.0) * math.exp(-1.5)
    assert got == pytest.approx(exact, rel=2e-3)


def test_banded_moment_via_integral_uniform():
    """int y 1{a <= y <= b} K(dy) for a uniform CP kernel in closed form."""
    K = CompoundPoissonKernel(2.0, UniformJumps(0.0, 2.0))

    def band(y):
        y = np.asarray(y, dtype=float)
        return np.where((y >= 0.5) & (y <= 1.5), y, 0.0)

    got = K.integral(0.0, band, breaks=(0.5, 1.5))
    assert got == pytest.approx(2.0 * (1.5**2 - 0.5**2) / 4.0, abs=1e-10)


def test_interval_mass_endpoint_conventions():
    """Closed and open endpoints differ exactly by the boundary atoms."""
    K = CompoundPoissonKernel(1.0, point_mass(1.0))
    assert K.interval_mass(0.0, 1.0, 2.0, include_left=True, include_right=True) == pytest.approx(1.0)
    assert K.interval_mass(0.0, 1.0, 2.0, include_left=False, include_right=True) == pytest.approx(0.0)
