import json
import math

import numpy as np
import pytest
from scipy import integrate

from gfcpp.fde import (
    GridMismatchError,
    KernelQuadrature,
    MonteCarlo,
    SemiAnalytic,
    cd_derivative,
    dde_residual,
    rl_derivative,
    semi_analytic_pmf,
)
from gfcpp.jumps import Exponential, TruncatedGeometric
from gfcpp.processes import ProcessSpec
from gfcpp.rng import RngStream
from gfcpp.specfun import InverseGaussian, Stable, TemperedStable, levy_tail_eval, mittag_leffler

FAMILIES = [Stable(0.7), TemperedStable(0.7, 2.0), InverseGaussian(0.3, 1.0)]


def _kq(desc, h, t_max=2.0):
    return KernelQuadrature(desc, h, int(round(t_max / h)))


@pytest.mark.parametrize("desc", FAMILIES, ids=repr)
def test_constant_has_zero_derivative(desc):
    kq = _kq(desc, 1 / 64)
    assert np.max(np.abs(cd_derivative(np.full(kq.n + 1, 3.5), kq))) < 1e-12


def _identity_error(alpha, h):
    kq = _kq(Stable(alpha), h)
    t = kq.grid
    exact = t ** (1 - alpha) / math.gamma(2 - alpha)
    err = np.abs(cd_derivative(t, kq) - exact)
    return t, err


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
def test_richardson_ratio_on_identity(alpha):
    t1, e1 = _identity_error(alpha, 1 / 64)
    t2, e2 = _identity_error(alpha, 1 / 128)
    w1, w2 = t1 >= 0.25, t2 >= 0.25
    ratio = e1[w1].max() / e2[w2].max()
    assert 1.7 <= ratio <= 2.3


def _ml_residual(alpha, lam, h):
    kq = _kq(Stable(alpha), h)
    t = kq.grid
    u = np.array([mittag_leffler(alpha, 1.0, -lam * x ** alpha) for x in t])
    r = np.abs(cd_derivative(u, kq) + lam * u)
    return r[t >= 0.25].max()


@pytest.mark.parametrize("alpha", [0.5, 0.7, 0.9])
def test_mittag_leffler_eigenfunction(alpha):
    assert _ml_residual(alpha, 1.0, 1 / 64) / _ml_residual(alpha, 1.0, 1 / 128) >= 1.7


@pytest.mark.parametrize("desc", FAMILIES, ids=repr)
def test_rl_caputo_relation(desc):
    kq = _kq(desc, 1 / 32)
    t = kq.grid
    c = np.random.default_rng(3).normal(size=4)
    u = c[0] + c[1] * t + c[2] * t ** 2 + c[3] * t ** 3
    diff = rl_derivative(u, kq) - cd_derivative(u, kq)
    tail = kq.tail_on_grid()
    assert np.max(np.abs(diff[1:] - tail[1:] * u[0])) < 1e-12
    # vanishing start: the two derivatives coincide
    assert np.array_equal(rl_derivative(u - u[0], kq), cd_derivative(u - u[0], kq))
    # constant one: only the boundary term survives
    one = rl_derivative(np.ones(kq.n + 1), kq)
    assert np.allclose(one[1:], levy_tail_eval(desc, t[1:]), rtol=0, atol=1e-12)


def test_grid_mismatch():
    kq = _kq(Stable(0.5), 1 / 16)
    with pytest.raises(GridMismatchError):
        cd_derivative(np.zeros(kq.n), kq)


def test_batch_axes():
    kq = _kq(Stable(0.6), 1 / 16)
    t = kq.grid
    u = np.stack([t, t ** 2])
    out = cd_derivative(u, kq)
    assert np.allclose(out[0], cd_derivative(t, kq)) and np.allclose(out[1], cd_derivative(t ** 2, kq))


@pytest.mark.parametrize("desc", FAMILIES, ids=repr)
def test_kernel_weights(desc):
    h = 1 / 32
    kq = KernelQuadrature(desc, h, 64)
    w0, w1 = kq.weights
    assert np.all(w0 > 0) and np.all(np.diff(w0) < 0)
    assert np.all(w1 > 0) and np.all(w1 < h * w0)
    tail = lambda s: float(levy_tail_eval(desc, s))
    for m in (1, 5, 40):
        ref = integrate.quad(tail, m * h, (m + 1) * h, epsabs=0, epsrel=1e-12)[0]
        assert w0[m] == pytest.approx(ref, rel=1e-9)


def test_kernel_validation():
    with pytest.raises(TypeError):
        KernelQuadrature("stable", 0.1, 10)
    with pytest.raises(ValueError):
        KernelQuadrature(Stable(0.5), -0.1, 10)
    with pytest.raises(ValueError):
        KernelQuadrature(Stable(0.5), 0.1, 1)
    c = KernelQuadrature(Stable(0.5), 0.1, 10).coarsen()
    assert c.h == pytest.approx(0.2) and c.n == 5


# ---- pmfs and residuals

def test_semi_analytic_pmf_stable_zero_state():
    t = np.array([0.5, 1.0, 2.0])
    p = semi_analytic_pmf(ProcessSpec(1.0, TruncatedGeometric(0.5, 1), Stable(0.7)), 0, t)
    ref = [mittag_leffler(0.7, 1.0, -x ** 0.7) for x in t]
    assert np.allclose(np.ravel(p), ref, atol=1e-8)


@pytest.mark.parametrize("desc", FAMILIES, ids=repr)
def test_semi_analytic_zero_row_passes(desc):
    spec = ProcessSpec.order_k(1.0, 2, desc)
    t = np.arange(257) / 128
    rep = dde_residual(spec, 0, t, SemiAnalytic())
    assert rep.status == "pass"
    d = json.loads(rep.to_json())
    assert set(d["rows"][0]) == {"n", "t", "lhs", "rhs", "residual", "sigma", "budget", "status"}


def test_semi_analytic_wrong_rate_fails():
    spec = ProcessSpec.order_k(1.0, 2, Stable(0.7))
    t = np.arange(257) / 128
    assert dde_residual(spec, 1, t, SemiAnalytic(), rate=0.8 * spec.rate).status == "fail"


def test_polya_aeppli_reduces_to_fractional_poisson():
    # rho = 0, k = 1: unit jumps, so the equation is the fractional Poisson system
    spec = ProcessSpec.polya_aeppli(1.0, 0.0, 1, Stable(0.8))
    t = np.arange(129) / 64
    rep = dde_residual(spec, 2, t, MonteCarlo(20_000, 2000), RngStream(11, 0))
    assert rep.status in ("pass", "inconclusive")
    assert not any(r.status == "fail" for r in rep.rows)


def test_dde_argument_checks():
    t = np.arange(65) / 32
    with pytest.raises(ValueError):
        dde_residual(ProcessSpec(1.0, Exponential(1.0), Stable(0.5)), 1, t, SemiAnalytic())
    with pytest.raises(ValueError):
        dde_residual(ProcessSpec.order_k(1.0, 2), 1, t, SemiAnalytic())
    with pytest.raises(GridMismatchError):
        dde_residual(ProcessSpec.order_k(1.0, 2, Stable(0.5)), 1, t[:-1], SemiAnalytic())
