"""Jump-size laws: tails, quantiles, moments, and sampling."""

import math

import numpy as np
import pytest

from piiorder import DiscreteJumps, ExponentialJumps, UniformJumps, point_mass
from piiorder.rng import substream

EXP1 = ExponentialJumps(mean_size=1.0)


def test_exponential_closed_forms():
    """Exponential tails, mean, and second moment in closed form."""
    d = ExponentialJumps(mean_size=2.0)
    assert d.upper_tail(1.0) == pytest.approx(math.exp(-0.5))
    assert d.cdf(1.0) == pytest.approx(1.0 - math.exp(-0.5))
    assert d.mean() == 2.0
    assert d.second_moment() == 8.0
    assert d.support() == (0.0, np.inf)


def test_exponential_truncated_mean_oracle():
    """E h(J) for Exp(mean 2), threshold 1, equals 2 - 3 e^{-1/2}."""
    d = ExponentialJumps(mean_size=2.0)

    def h(y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) <= 1.0, y, 0.0)

    assert d.expect(h, breaks=(1.0,)) == pytest.approx(2.0 - 3.0 * math.exp(-0.5), abs=1e-12)
    # residual E (J - h(J)) is the complementary piece
    assert d.expect(lambda y: y - h(y), breaks=(1.0,)) == pytest.approx(3.0 * math.exp(-0.5), abs=1e-12)


def test_exponential_residual_mean_unit():
    """E J 1{J > 1} = 2/e for the unit exponential."""

    def resid(y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) > 1.0, y, 0.0)

    assert EXP1.expect(resid, breaks=(1.0,)) == pytest.approx(2.0 * math.exp(-1.0), abs=1e-12)


def test_exponential_stop_loss():
    """E (J - x)+ = mean * exp(-x / mean)."""
    assert EXP1.stop_loss(2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)


def test_negative_exponential_mirrors():
    """sign=-1 mirrors the law across 0."""
    d = ExponentialJumps(mean_size=1.0, sign=-1)
    assert d.mean() == -1.0
    assert d.cdf(-1.0) == pytest.approx(math.exp(-1.0))
    assert d.upper_tail(-1.0) == pytest.approx(1.0 - math.exp(-1.0))
    assert d.support() == (-np.inf, 0.0)


def test_uniform_moments_and_tails():
    """Uniform law closed forms."""
    d = UniformJumps(0.5, 1.5)
    assert d.mean() == 1.0
    assert d.second_moment() == pytest.approx((1.5**3 - 0.5**3) / 3.0)
    assert d.cdf(1.0) == pytest.approx(0.5)
    assert d.upper_tail(1.25) == pytest.approx(0.25)
    assert d.stop_loss(1.0) == pytest.approx(0.125)


def test_discrete_tails_are_closed():
    """upper_tail includes the atom at the query point, strict excludes it."""
    d = DiscreteJumps([1.0, 2.0], [0.25, 0.75])
    assert d.upper_tail(2.0) == pytest.approx(0.75)
    assert d.strict_upper_tail(2.0) == 0.0
    assert d.cdf(1.0) == pytest.approx(0.25)
    assert d.atoms() == [(1.0, 0.25), (2.0, 0.75)]


def test_discrete_rejects_mass_at_zero():
    """A jump of size 0 is not a jump."""
    with pytest.raises(ValueError):
        DiscreteJumps([0.0, 1.0], [0.5, 0.5])


def test_point_mass_quantile_is_constant():
    """The degenerate law returns its location everywhere."""
    d = point_mass(2.0)
    assert d.quantile(0.01) == 2.0
    assert d.quantile(0.99) == 2.0
    assert d.mean() == 2.0


@pytest.mark.parametrize("seed", list(range(6)))
@pytest.mark.parametrize(
    "law",
    [
        ExponentialJumps(mean_size=1.3),
        ExponentialJumps(mean_size=0.7, sign=-1),
        UniformJumps(-0.5, 2.0),
        DiscreteJumps([-1.0, 0.5, 2.0], [0.2, 0.5, 0.3]),
    ],
    ids=["exp", "neg-exp", "uniform", "discrete"],
)
def test_sample_moments_match_law(law, seed):
    """Sample mean and second moment agree with the law within 5 sigma."""
    rng = substream(seed, 11)
    n = 40_000
    draws = law.sample(n, rng)
    se1 = math.sqrt(max(law.second_moment() - law.mean() ** 2, 1e-12) / n)
    assert abs(draws.mean() - law.mean()) < 5 * se1
    m2 = float(np.mean(draws**2))
    se2 = float(np.std(draws**2, ddof=1) / math.sqrt(n))
    assert abs(m2 - law.second_moment()) < 5 * se2


@pytest.mark.parametrize("seed", list(range(6)))
def test_sample_sums_matches_repeated_sampling(seed):
    """sample_sums over counts agrees with summing individual draws in law."""
    rng = substream(seed, 12)
    counts = rng.poisson(3.0, size=20_000)
    sums = EXP1.sample_sums(counts, substream(seed, 13))
    # E sum = E N * E J, Var = E N * E J^2 + Var N * (E J)^2 for Poisson N
    mean = counts.mean() * 1.0
    se = math.sqrt(np.var(sums, ddof=1) / len(sums))
    assert abs(sums.mean() - mean) < 5 * se
    assert np.all(sums[counts == 0] == 0.0)


@pytest.mark.parametrize("seed", list(range(4)))
def test_quantile_inverts_cdf(seed):
    """quantile is the generalized inverse: cdf(quantile(u)) >= u."""
    rng = substream(seed, 14)
    u = rng.uniform(1e-6, 1.0 - 1e-6, size=200)
    for law in (EXP1, UniformJumps(0.0, 2.0), DiscreteJumps([1.0, 3.0], [0.5, 0.5])):
        q = np.asarray(law.quantile(u))
        assert np.all(np.asarray(law.cdf(q)) >= u - 1e-12)


def test_expect_shifted_matches_direct_quadrature():
    """E f(z + J) columns agree with scalar expectations."""
    f = lambda y: np.maximum(np.asarray(y) - 1.0, 0.0)
    z = np.array([-0.5, 0.0, 1.5])
    vals = EXP1.expect_shifted(f, z)
    for zi, vi in zip(z, vals):
        direct = EXP1.expect(lambda y: f(y + zi), breaks=(1.0 - zi,))
        # fixed quadrature rule vs adaptive quad across a kink
        assert vi == pytest.approx(direct, abs=1e-4)
