import math

import numpy as np
import pytest
from scipy import stats

from conftest import mc_retry, mean_se, within
from gfcpp.jumps import (
    BernsteinType,
    CenteredTwoPoint,
    DiscreteUniform,
    Exponential,
    Logarithmic,
    MittagLeffler,
    TemperedMittagLeffler,
    TruncatedGeometric,
    jump_lt,
    jump_moments,
    sample_jump,
)
from gfcpp.specfun import InverseGaussian, TemperedStable
from gfcpp.subordinators import sample_stable_increment

N = 100_000

LAWS = [
    Exponential(2.0),
    MittagLeffler(0.9, 2.0),
    MittagLeffler(1.0, 2.0),
    TemperedMittagLeffler(0.7, 2.0, 1.0),
    BernsteinType(InverseGaussian(0.3, 1.0), 2.0),
    BernsteinType(TemperedStable(0.7, 2.0), 2.0),
    DiscreteUniform(5),
    TruncatedGeometric(0.5, 5),
    Logarithmic(0.5),
]


@mc_retry
@pytest.mark.parametrize("law", LAWS, ids=lambda l: repr(l))
def test_empirical_lt(law, rng):
    x = sample_jump(law, rng, N)
    for s in (0.5, 1.0, 2.0):
        m, se = mean_se(np.exp(-s * x))
        assert within(m, jump_lt(law, s), se)


@pytest.mark.parametrize("law", LAWS + [CenteredTwoPoint()], ids=lambda l: repr(l))
def test_lt_at_zero_and_shape(law):
    assert jump_lt(law, 0.0) == pytest.approx(1.0, abs=1e-15)
    s = np.linspace(0, 5, 51)
    v = jump_lt(law, s)
    if isinstance(law, CenteredTwoPoint):
        return
    assert np.all(np.diff(v) <= 1e-15)
    assert np.all(np.diff(v, 2) >= -1e-12)
    with pytest.raises(ValueError):
        jump_lt(law, -1.0)


def test_lt_examples():
    assert jump_lt(Exponential(2.0), 2.0) == 0.5
    s = np.array([0.1, 1.0, 3.0])
    assert np.allclose(jump_lt(MittagLeffler(1.0, 3.0), s), 3.0 / (3.0 + s))
    assert jump_lt(TruncatedGeometric(0.5, 2), 0.0) == pytest.approx(1.0, abs=1e-15)
    # finite-sum oracle from the pmf
    rho, k, s1 = 0.5, 2, 0.7
    direct = sum((1 - rho) * rho ** (j - 1) * math.exp(-s1 * j) / (1 - rho ** k) for j in range(1, k + 1))
    assert jump_lt(TruncatedGeometric(rho, k), s1) == pytest.approx(direct, rel=1e-14)
    # logarithmic: ln(1 - q e^-s) / ln(1 - q) against the pmf series
    q = 0.5
    series = sum(-q ** j / (j * math.log(1 - q)) * math.exp(-s1 * j) for j in range(1, 200))
    assert jump_lt(Logarithmic(q), s1) == pytest.approx(series, rel=1e-13)


@mc_retry
def test_exponential_mean(rng):
    m, se = mean_se(sample_jump(Exponential(2.0), rng, N))
    assert within(m, 0.5, se)


@mc_retry
def test_discrete_uniform_pmf(rng):
    x = sample_jump(DiscreteUniform(5), rng, N)
    assert set(np.unique(x)) == {1, 2, 3, 4, 5}
    for j in range(1, 6):
        p = np.mean(x == j)
        assert within(p, 0.2, math.sqrt(0.2 * 0.8 / N))


def test_truncated_geometric_single_atom(rng):
    assert np.all(sample_jump(TruncatedGeometric(0.7, 1), rng, 1000) == 1)
    assert sample_jump(TruncatedGeometric(0.7, 1), rng) == 1


@mc_retry
def test_logarithmic_first_atom(rng):
    x = sample_jump(Logarithmic(0.5), rng, N)
    p1 = 0.5 / math.log(2)
    assert p1 == pytest.approx(0.7213, abs=1e-4)
    assert within(np.mean(x == 1), p1, math.sqrt(p1 * (1 - p1) / N))


def test_moments_examples():
    assert tuple(jump_moments(Exponential(2.0))[:2]) == (0.5, 0.5)
    assert tuple(jump_moments(DiscreteUniform(5))[:2]) == (3.0, 11.0)
    m = jump_moments(Logarithmic(0.5))
    assert m.mean == pytest.approx(1 / math.log(2), rel=1e-14)
    ml = jump_moments(MittagLeffler(0.9, 2.0))
    assert not ml.mean_finite and not ml.second_finite
    assert jump_moments(MittagLeffler(1.0, 2.0)) == jump_moments(Exponential(2.0))


@pytest.mark.parametrize("law", [TemperedMittagLeffler(0.7, 2.0, 1.0), BernsteinType(InverseGaussian(0.3, 1.0), 2.0),
                                 BernsteinType(TemperedStable(0.6, 1.5), 3.0), TruncatedGeometric(0.4, 6),
                                 Logarithmic(0.3), DiscreteUniform(4)], ids=repr)
def test_moments_from_lt_derivatives(law):
    # one-sided differences of the LT at 0 give the first two moments
    h = 1e-4
    f = lambda s: float(law.laplace(s))
    m1 = -(-3 * f(0) + 4 * f(h) - f(2 * h)) / (2 * h)
    m2 = (2 * f(0) - 5 * f(h) + 4 * f(2 * h) - f(3 * h)) / h ** 2
    mom = jump_moments(law)
    assert m1 == pytest.approx(mom.mean, rel=1e-6)
    assert m2 == pytest.approx(mom.second_moment, rel=1e-3)


def test_truncated_geometric_geometric_limit():
    rho = 0.5
    law = TruncatedGeometric(rho, 50)
    for j in range(1, 11):
        assert law.pmf(j) == pytest.approx((1 - rho) * rho ** (j - 1), abs=1e-6)


def test_pmf_vectors_normalized():
    for law in (DiscreteUniform(5), TruncatedGeometric(0.5, 5), Logarithmic(0.5)):
        p = law.pmf_vector(law.support_max)
        assert p[0] == 0
        assert p.sum() == pytest.approx(1.0, abs=1e-12)


@mc_retry
def test_ml_construction_matches_independent_draws(rng):
    # E**(1/beta) * S_beta with E exponential, built from separate primitives
    beta, eta = 0.9, 2.0
    direct = sample_jump(MittagLeffler(beta, eta), rng, 10_000)
    e = rng.exponential(1 / eta, 10_000)
    s = sample_stable_increment(beta, 1.0, rng, size=10_000)
    assert stats.ks_2samp(direct, e ** (1 / beta) * s).pvalue > 0.01


@mc_retry
def test_sum_iid_matches_sequential(rng):
    counts = rng.poisson(3.0, size=(400, 5))
    for law in (Exponential(2.0), DiscreteUniform(5), CenteredTwoPoint(), Logarithmic(0.5)):
        sums = law.sum_iid(counts, rng)
        assert sums.shape == counts.shape
        assert np.all(sums[counts == 0] == 0)
        m, se = mean_se(sums.ravel())
        target = counts.mean() * law.moments().mean
        assert abs(m - target) <= 4 * se + 1e-12


def test_parameter_validation():
    for bad in (lambda: Exponential(0), lambda: MittagLeffler(0, 1), lambda: MittagLeffler(1.2, 1),
                lambda: TemperedMittagLeffler(0.5, 1, -1), lambda: DiscreteUniform(0),
                lambda: TruncatedGeometric(1.0, 3), lambda: TruncatedGeometric(0.5, 0),
                lambda: Logarithmic(0.0), lambda: Logarithmic(1.0)):
        with pytest.raises(ValueError):
            bad()
    with pytest.raises(TypeError):
        BernsteinType("stable", 1.0)


def test_supports(rng):
    for law in LAWS:
        x = sample_jump(law, rng, 2000)
        assert np.all(x > 0)
        if law.discrete:
            assert np.all(x == np.round(x)) and x.min() >= 1
