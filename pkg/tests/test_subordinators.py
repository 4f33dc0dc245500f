import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from conftest import mc_retry, mean_se, within
from gfcpp.rng import RngStream, as_generator
from gfcpp.specfun import InverseGaussian, Stable, TemperedStable, mean_inverse_subordinator
from gfcpp.subordinators import (
    operational_horizon,
    CoverageError,
    MonotonePath,
    inverse_path,
    sample_ig_increment,
    sample_increments,
    sample_inverse_at,
    sample_stable_increment,
    sample_tempered_stable_increment,
    subordinator_path,
)

N = 100_000


# ---------- RNG streams ----------

def test_stream_reproducible_and_distinct():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 3).generator().random(5)
    c = RngStream(7, 4).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("bad", [-1, 2 ** 64, 1.5])
def test_stream_validation(bad):
    with pytest.raises(ValueError):
        RngStream(bad)


def test_as_generator_rejects_bool_and_none():
    for bad in (None, True, "1"):
        with pytest.raises(TypeError):
            as_generator(bad)


# ---------- stable ----------

@mc_retry
def test_stable_laplace_transform(rng):
    x = sample_stable_increment(0.5, 1.0, rng, size=N)
    m, se = mean_se(np.exp(-x))
    assert within(m, math.exp(-1), se)


@mc_retry
def test_stable_median(rng):
    # Levy law: P(X <= x) = erfc(1 / (2 sqrt(x))), median where erfc = 1/2
    x = sample_stable_increment(0.5, 1.0, rng, size=N)
    target = 1.0 / (4 * special.erfcinv(0.5) ** 2)
    assert target == pytest.approx(1.099, abs=1e-3)
    # binomial SE on the empirical cdf at the target
    frac = np.mean(x <= target)
    assert within(frac, 0.5, math.sqrt(0.25 / N))


@mc_retry
def test_stable_self_similarity(rng):
    big = sample_stable_increment(0.5, 16.0, rng, size=20_000)
    small = sample_stable_increment(0.5, 1.0, rng, size=20_000)
    assert stats.ks_2samp(big / 256.0, small).pvalue > 0.01


@mc_retry
def test_stable_tiny_dt_is_finite(rng):
    x = sample_stable_increment(0.9, 1e-8, rng, size=1000)
    assert np.all(np.isfinite(x)) and np.all(x >= 0)


# ---------- tempered stable ----------

@mc_retry
def test_tempered_mu_zero_matches_stable(rng):
    a = sample_tempered_stable_increment(0.6, 0.0, 1.0, rng, size=10_000)
    b = sample_stable_increment(0.6, 1.0, rng, size=10_000)
    assert stats.ks_2samp(a, b).pvalue > 0.01


@mc_retry
def test_tempered_mean_and_lt(rng):
    a, mu = 0.7, 2.0
    x = sample_tempered_stable_increment(a, mu, 1.0, rng, size=N)
    m, se = mean_se(x)
    assert within(m, a * mu ** (a - 1), se)
    assert a * mu ** (a - 1) == pytest.approx(0.5686, abs=1e-3)
    m, se = mean_se(np.exp(-x))
    assert within(m, math.exp(-(3 ** a - 2 ** a)), se)


@mc_retry
def test_tempered_array_dt(rng):
    dt = np.array([0.0, 0.5, 2.0])
    x = sample_tempered_stable_increment(0.7, 2.0, dt, rng, size=(20_000, 3))
    assert x.shape == (20_000, 3)
    assert np.all(x[:, 0] == 0)
    for j in (1, 2):
        m, se = mean_se(x[:, j])
        assert within(m, dt[j] * 0.7 * 2 ** -0.3, se)


# ---------- inverse Gaussian ----------

@mc_retry
def test_ig_moments_and_lt(rng):
    d, g = 0.3, 1.0
    x = sample_ig_increment(d, g, 1.0, rng, size=N)
    m, se = mean_se(x)
    assert within(m, d / g, se)
    # SE of the sample variance from the fourth central moment
    c = x - x.mean()
    v = np.mean(c * c)
    v_se = math.sqrt((np.mean(c ** 4) - v * v) / N)
    assert within(v, d / g ** 3, v_se)
    m, se = mean_se(np.exp(-1.5 * x))
    assert within(m, math.exp(-0.3), se)


@mc_retry
def test_ig_against_scipy(rng):
    # scipy's invgauss(mu/lam, scale=lam) has mean mu and shape lam
    d, g, dt = 0.3, 1.0, 0.5
    mean, shape = d * dt / g, (d * dt) ** 2
    x = sample_ig_increment(d, g, dt, rng, size=20_000)
    ref = stats.invgauss(mean / shape, scale=shape)
    assert stats.kstest(x, ref.cdf).pvalue > 0.01


@mc_retry
def test_ig_small_dt_no_cancellation(rng):
    x = sample_ig_increment(0.3, 1.0, 1e-4, rng, size=N)
    assert np.all(x > 0)
    m, se = mean_se(x)
    assert within(m, 0.3e-4, se)


# ---------- paths ----------

@pytest.mark.parametrize("desc", [Stable(0.5), TemperedStable(0.7, 2.0), InverseGaussian(0.3, 1.0)])
@mc_retry
def test_subordinator_path_invariants(desc, rng):
    p = subordinator_path(desc, 2.0, 500, rng)
    assert isinstance(p, MonotonePath)
    assert p.times[0] == 0 and p.values[0] == 0
    assert np.all(np.diff(p.values) > 0)
    assert p.step == pytest.approx(2.0 / 500)


@mc_retry
def test_subordinator_path_single_step(rng):
    p = subordinator_path(Stable(0.5), 1.0, 1, rng)
    assert p.values.shape == (2,)


@mc_retry
def test_strictly_increasing_many_trials(rng):
    inc = sample_increments(Stable(0.8), 1e-3, rng, size=10_000)
    assert np.all(inc > 0)


def test_monotone_path_validation():
    with pytest.raises(ValueError):
        MonotonePath([0, 1, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        MonotonePath([0, 1, 2], [0, 2, 1])
    with pytest.raises(ValueError):
        MonotonePath([1, 2], [0, 1])


@mc_retry
def test_inverse_path_trivial(rng):
    p = subordinator_path(Stable(0.5), 5.0, 100, rng)
    assert inverse_path(p, [0.0]).values.tolist() == [0.0]


@given(st.integers(0, 2 ** 32), st.sampled_from([Stable(0.5), TemperedStable(0.7, 2.0), InverseGaussian(0.3, 1.0)]))
@settings(max_examples=40, deadline=None)
def test_first_passage_sandwich(seed, desc):
    # left-grid convention: D(E(t)) <= t < D(E(t) + dr)
    d = subordinator_path(desc, 5.0, 400, RngStream(seed))
    t = np.linspace(0.0, 0.999 * d.values[-1], 60)
    e = inverse_path(d, t)
    idx = np.rint(e.values / d.step).astype(int)
    assert np.all(d.values[idx] <= t)
    assert np.all(d.values[idx + 1] > t)
    assert np.all(np.diff(e.values) >= 0)


@mc_retry
def test_inverse_path_coverage_error(rng):
    d = subordinator_path(Stable(0.5), 1.0, 50, rng)
    with pytest.raises(CoverageError):
        inverse_path(d, [d.values[-1] + 1.0])


@pytest.mark.parametrize("desc", [Stable(0.5), TemperedStable(0.7, 2.0), InverseGaussian(0.3, 1.0)])
@mc_retry
def test_inverse_mean_matches_analytic(desc, rng):
    times = np.array([0.5, 1.0, 2.0])
    e = sample_inverse_at(desc, times, 10_000, rng, n_steps=2_000)
    target = mean_inverse_subordinator(desc, times)
    for j in range(3):
        m, se = mean_se(e[:, j])
        # the left-point convention biases downward by at most one step
        dr = operational_horizon(desc, 2.0) / 2_000
        assert -3 * se - dr <= m - target[j] <= 3 * se


@mc_retry
def test_inverse_mean_stable_example(rng):
    e = sample_inverse_at(Stable(0.5), [1.0], 10_000, rng)[:, 0]
    m, se = mean_se(e)
    assert within(m, 1 / math.gamma(1.5), se)


@mc_retry
def test_sample_inverse_extends_short_horizon(rng):
    # a deliberately tiny horizon forces the doubling extension
    e = sample_inverse_at(Stable(0.7), [1.0, 3.0], 200, rng, n_steps=100, horizon=0.05)
    assert np.all(e[:, 1] >= e[:, 0])
    m, se = mean_se(e[:, 1])
    assert within(m, 3 ** 0.7 / math.gamma(1.7), se + 0.05 / 100)


def test_sample_inverse_reproducible():
    a = sample_inverse_at(InverseGaussian(0.3, 1), [0.5, 1.0], 50, RngStream(1, 2), n_steps=500)
    b = sample_inverse_at(InverseGaussian(0.3, 1), [0.5, 1.0], 50, RngStream(1, 2), n_steps=500)
    assert np.array_equal(a, b)
