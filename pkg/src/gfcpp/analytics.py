"""Analytic and empirical moments, dependence diagnostics and test statistics."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import special, stats

from .processes import ProcessSpec, sample_values
from .rng import as_generator
from .specfun import (
    TemperedStable,
    laplace_inverse_clock,
    mean_inverse_subordinator,
    second_moment_inverse_subordinator,
)
from .subordinators import sample_increments, sample_inverse_at

__all__ = [
    "MomentReport",
    "MomentUndefinedError",
    "InsufficientDataError",
    "DegenerateSampleWarning",
    "LRDFit",
    "MartingaleRow",
    "analytic_moments",
    "empirical_moments",
    "compare_moments",
    "clock_moments",
    "lrd_slope",
    "lrd_slope_from_values",
    "martingale_test",
    "ks_two_sample",
    "empirical_laplace",
    "gfcpp_laplace",
    "clock_double_laplace",
]


class MomentUndefinedError(ValueError):
    """The jump law lacks the finite moments a formula needs."""


class InsufficientDataError(ValueError):
    """Too few usable points for a regression."""


class DegenerateSampleWarning(RuntimeWarning):
    """Every sample is identical, so spread estimates are zero."""


# =======
# Reports
# =======

@dataclass
class MomentReport:
    """Mean, variance and (optionally) covariance, analytic vs empirical.

    Each of `analytic`, `empirical`, `se` and `z` maps a quantity name
    (``mean``, ``variance``, ``covariance``) to a float. `se` combines the
    empirical standard error with any Monte Carlo error in the analytic
    side, and ``z = (empirical - analytic) / se``.
    """

    t: float
    s: Optional[float] = None
    analytic: dict = field(default_factory=dict)
    empirical: dict = field(default_factory=dict)
    se: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    analytic_se: dict = field(default_factory=dict, repr=False)
    n_paths: int = 0

    def merge(self, other: "MomentReport") -> "MomentReport":
        """Combine an analytic half with an empirical half and fill in z-scores."""
        a, e = (self, other) if self.analytic else (other, self)
        out = MomentReport(a.t, a.s, dict(a.analytic), dict(e.empirical),
                           analytic_se=dict(a.analytic_se), n_paths=e.n_paths)
        for key, val in out.analytic.items():
            if key not in e.empirical:
                continue
            se = math.hypot(e.se.get(key, 0.0), a.analytic_se.get(key, 0.0))
            diff = e.empirical[key] - val
            out.se[key] = se
            out.z[key] = diff / se if se > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
        return out

    def passes(self, threshold=3.0, keys=None) -> bool:
        keys = self.z.keys() if keys is None else keys
        return all(abs(self.z[k]) < threshold for k in keys)

    def to_dict(self):
        return {
            "t": self.t,
            "s": self.s,
            "n_paths": self.n_paths,
            "analytic": self.analytic,
            "empirical": self.empirical,
            "se": self.se,
            "z": self.z,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


class LRDFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float
    t_used: np.ndarray
    corr: np.ndarray


class MartingaleRow(NamedTuple):
    s: float
    t: float
    mean: float
    se: float
    z: float


# ================
# Analytic moments
# ================

def _finite_jump_moments(law, need_second=True):
    m = law.moments()
    if not m.mean_finite or (need_second and not m.second_finite):
        raise MomentUndefinedError(f"{type(law).__name__} jumps have infinite moments")
    return m


def clock_moments(desc, t):
    """``(E[E_f(t)], Var[E_f(t)])``; the identity clock when `desc` is None."""
    if desc is None:
        return float(t), 0.0
    m1 = mean_inverse_subordinator(desc, t)
    m2 = second_moment_inverse_subordinator(desc, t)
    return m1, max(m2 - m1 * m1, 0.0)


def _clock_covariance_mc(desc, s, t, paths, rng, n_steps):
    e = sample_inverse_at(desc, [s, t], paths, rng, n_steps)
    d = e - e.mean(axis=0)
    prod = d[:, 0] * d[:, 1]
    return float(prod.sum() / (paths - 1)), float(prod.std(ddof=1) / math.sqrt(paths))


def analytic_moments(spec: ProcessSpec, t, s=None, rng=None, cov_paths=20_000,
                     n_steps=4_000) -> MomentReport:
    """Mean, variance and covariance of ``Y_f`` from the clock moments.

    With rate ``r = lam * multiplier`` and jump moments ``m1, m2``::

        E[Y_f(t)]            = r E[E(t)] m1
        Var[Y_f(t)]          = r E[E(t)] m2 + (r m1)**2 Var[E(t)]
        Cov[Y_f(s), Y_f(t)]  = r E[E(s)] m2 + (r m1)**2 Cov[E(s), E(t)],  s <= t

    Clock means and variances come from `specfun`; the clock covariance is a
    Monte Carlo estimate whose standard error is carried in ``analytic_se``.
    """
    if t < 0 or (s is not None and s < 0):
        raise ValueError("times must be >= 0")
    jm = _finite_jump_moments(spec.jump)
    r = spec.rate
    mean_e, var_e = clock_moments(spec.subordinator, t)
    rep = MomentReport(float(t), None if s is None else float(s))
    rep.analytic["mean"] = r * mean_e * jm.mean
    rep.analytic["variance"] = r * mean_e * jm.second_moment + (r * jm.mean) ** 2 * var_e
    if s is not None:
        lo, hi = sorted((float(s), float(t)))
        mean_lo, var_lo = clock_moments(spec.subordinator, lo)
        if spec.subordinator is None:
            cov_e, cov_se = var_lo, 0.0
        elif lo == 0:
            cov_e, cov_se = 0.0, 0.0
        elif lo == hi:
            cov_e, cov_se = var_lo, 0.0
        else:
            if rng is None:
                raise ValueError("an rng is needed for the Monte Carlo clock covariance")
            cov_e, cov_se = _clock_covariance_mc(spec.subordinator, lo, hi, cov_paths,
                                                 as_generator(rng), n_steps)
        rep.analytic["covariance"] = r * mean_lo * jm.second_moment + (r * jm.mean) ** 2 * cov_e
        rep.analytic_se["covariance"] = (r * jm.mean) ** 2 * cov_se
    return rep


# =================
# Empirical moments
# =================

def _jackknife_se(loo):
    n = loo.size
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def empirical_moments(y_t, y_s=None, t=math.nan, s=None, min_paths=100) -> MomentReport:
    """Sample mean, variance and covariance with jackknife standard errors.

    `y_t` (and `y_s`) hold one value per path; the covariance pairs the two
    calendar times on each path.
    """
    y_t = np.asarray(y_t, dtype=float)
    n = y_t.size
    if n < min_paths:
        raise ValueError(f"need at least {min_paths} paths, got {n}")
    rep = MomentReport(float(t), None if s is None else float(s), n_paths=n)
    if np.all(y_t == y_t[0]):
        warnings.warn("all samples are equal; variance is zero", DegenerateSampleWarning,
                      stacklevel=2)
    x = y_t - y_t.mean()
    # leave-one-out statistics in closed form on centred data
    s1, s2 = x.sum(), np.sum(x * x)
    loo_mean = (s1 - x) / (n - 1)
    loo_var = ((s2 - x * x) - (n - 1) * loo_mean ** 2) / (n - 2)
    rep.empirical["mean"] = float(y_t.mean())
    rep.se["mean"] = float(y_t.std(ddof=1) / math.sqrt(n))
    rep.empirical["variance"] = float(s2 / (n - 1))
    rep.se["variance"] = _jackknife_se(loo_var)
    if y_s is not None:
        y_s = np.asarray(y_s, dtype=float)
        if y_s.shape != y_t.shape:
            raise ValueError("y_s and y_t must pair values path by path")
        w = y_s - y_s.mean()
        sxy = np.sum(x * w)
        loo_cov = ((sxy - x * w) - (n - 1) * loo_mean * ((w.sum() - w) / (n - 1))) / (n - 2)
        rep.empirical["covariance"] = float(sxy / (n - 1))
        rep.se["covariance"] = _jackknife_se(loo_cov)
    return rep


def compare_moments(spec: ProcessSpec, t, paths, rng, s=None, n_steps=10_000,
                    cov_paths=20_000, values=None) -> MomentReport:
    """Simulate `paths` values of ``Y_f`` and compare with `analytic_moments`.

    Pre-simulated ``values = (times, y)`` may be passed instead.
    """
    gen = as_generator(rng)
    analytic = analytic_moments(spec, t, s, gen, cov_paths=cov_paths)
    if values is None:
        times = [float(t)] if s is None else sorted({float(s), float(t)})
        y, _ = sample_values(spec, times, paths, gen, n_steps)
    else:
        times, y = values
    col = {float(v): i for i, v in enumerate(times)}
    y_s = None if s is None else y[:, col[float(s)]]
    empirical = empirical_moments(y[:, col[float(t)]], y_s, t, s)
    return analytic.merge(empirical)


# ======================
# Long-range dependence
# ======================

def lrd_slope_from_values(y_s, y_t, t_grid, min_points=4) -> LRDFit:
    """Least-squares slope of ``log Corr(Y(s), Y(t))`` against ``log t``.

    `y_s` has one value per path and `y_t` one column per entry of
    `t_grid`. Nonpositive correlation estimates are left out of the fit.
    """
    y_s = np.asarray(y_s, dtype=float)
    y_t = np.asarray(y_t, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    xs = y_s - y_s.mean()
    xt = y_t - y_t.mean(axis=0)
    denom = math.sqrt(np.sum(xs * xs)) * np.sqrt(np.sum(xt * xt, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = (xs @ xt) / denom
    ok = np.isfinite(corr) & (corr > 0)
    if ok.sum() < min_points:
        raise InsufficientDataError(
            f"only {int(ok.sum())} positive correlation estimates; need {min_points}")
    fit = stats.linregress(np.log(t_grid[ok]), np.log(corr[ok]))
    return LRDFit(float(fit.slope), float(fit.intercept), float(fit.stderr), t_grid[ok], corr[ok])


def lrd_slope(spec: ProcessSpec, s_fixed, t_grid, paths, rng, n_steps=4_000) -> LRDFit:
    """Fitted correlation decay exponent for a tempered-stable clock.

    The jump law must have mean zero (e.g. `CenteredTwoPoint`), and
    `t_grid` must span at least 1.5 decades.
    """
    if not isinstance(spec.subordinator, TemperedStable):
        raise ValueError("lrd_slope needs a tempered-stable clock")
    if spec.jump.moments().mean != 0:
        raise ValueError("lrd_slope needs a zero-mean jump law")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.min() <= s_fixed or math.log10(t_grid.max() / t_grid.min()) < 1.5:
        raise ValueError("t_grid must exceed s_fixed and span at least 1.5 decades")
    times = np.concatenate(([float(s_fixed)], np.sort(t_grid)))
    y, _ = sample_values(spec, times, paths, rng, n_steps)
    return lrd_slope_from_values(y[:, 0], y[:, 1:], times[1:])


# =========================
# Martingale compensation
# =========================

def martingale_test(spec: ProcessSpec, t_pairs, paths, rng, n_steps=10_000,
                    compensator="exact", values=None) -> list:
    """z-scores of compensated increments ``M(t) - M(s)``.

    ``M(t) = Y_f(t) - r E_f(t) E[X_1]`` with both terms read off the same
    path. ``compensator="drop_jump_mean"`` omits the ``E[X_1]`` factor and
    serves as a power check. Pre-simulated ``values = (times, y, e)`` may
    be passed instead of simulating.
    """
    jm = _finite_jump_moments(spec.jump, need_second=False)
    if compensator == "exact":
        scale = spec.rate * jm.mean
    elif compensator == "drop_jump_mean":
        scale = spec.rate
    else:
        raise ValueError("compensator must be 'exact' or 'drop_jump_mean'")
    if values is None:
        times = sorted({float(v) for pair in t_pairs for v in pair})
        y, e = sample_values(spec, times, paths, rng, n_steps)
    else:
        times, y, e = values
    m = y - scale * e
    col = {float(v): i for i, v in enumerate(times)}
    rows = []
    for s, t in t_pairs:
        inc = m[:, col[float(t)]] - m[:, col[float(s)]]
        n = inc.size
        mean = float(inc.mean())
        se = float(inc.std(ddof=1) / math.sqrt(n))
        z = mean / se if se > 0 else 0.0
        rows.append(MartingaleRow(float(s), float(t), mean, se, z))
    return rows


# =================
# Sample comparison
# =================

def ks_two_sample(a, b, min_size=1):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value uses the limiting Kolmogorov distribution with Stephens'
    small-sample correction to the effective size.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    if min(a.size, b.size) < min_size:
        raise ValueError(f"samples need at least {min_size} points")
    pooled = np.concatenate((a, b))
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    p = float(special.kolmogorov((en + 0.12 + 0.11 / en) * d))
    return d, min(max(p, 0.0), 1.0)


def empirical_laplace(samples, s_grid):
    """``mean(exp(-s X))`` per `s` with standard errors."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    if np.any(x < 0):
        raise ValueError("samples must be nonnegative")
    s = np.atleast_1d(np.asarray(s_grid, dtype=float))
    w = np.exp(-np.multiply.outer(s, x))
    vals = w.mean(axis=1)
    se = w.std(axis=1, ddof=1) / math.sqrt(x.size) if x.size > 1 else np.zeros_like(vals)
    if np.ndim(s_grid) == 0:
        return float(vals[0]), float(se[0])
    return vals, se


def gfcpp_laplace(spec: ProcessSpec, s, t):
    """``E[exp(-s Y_f(t))] = E[exp(-r E_f(t) (1 - phi(s)))]`` by Laplace inversion.

    `phi` is the jump Laplace transform and ``r`` the Poisson rate.
    """
    y = spec.rate * (1.0 - float(spec.jump.laplace(s)))
    if spec.subordinator is None:
        return math.exp(-y * t)
    return laplace_inverse_clock(spec.subordinator, y, t)


def clock_double_laplace(desc, ys, ss, paths, rng, dr=0.01, block=2_000, tail_tol=1e-10):
    """Monte Carlo ``int_0^inf exp(-s t) E[exp(-y E_f(t))] dt`` at every ``(y, s)``.

    Each path of ``D_f`` is simulated on an operational grid of step `dr`
    until ``exp(-s D)/s`` falls below `tail_tol`. Between grid points the
    true clock lies between the two neighbouring grid values, so every
    path gives an exact lower and upper bound for its calendar integral.
    Returns ``(estimate, se, half_gap)`` arrays of shape
    ``(len(ys), len(ss))``, the estimate being the midpoint of the bounds.
    """
    gen = as_generator(rng)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    ss = np.atleast_1d(np.asarray(ss, dtype=float))
    if np.any(ys < 0) or np.any(ss <= 0):
        raise ValueError("need y >= 0 and s > 0")
    lo = np.zeros((paths, ys.size, ss.size))
    hi = np.zeros_like(lo)
    d_prev = np.zeros(paths)
    r0 = 0.0
    s_min = ss.min()
    while True:
        inc = sample_increments(desc, dr, gen, size=(paths, block))
        d = np.concatenate((d_prev[:, None], d_prev[:, None] + np.cumsum(inc, axis=1)), axis=1)
        r = r0 + dr * np.arange(block + 1)
        for j, s in enumerate(ss):
            # calendar mass of each operational step
            mass = (np.exp(-s * d[:, :-1]) - np.exp(-s * d[:, 1:])) / s
            for i, y in enumerate(ys):
                lo[:, i, j] += mass @ np.exp(-y * r[1:])
                hi[:, i, j] += mass @ np.exp(-y * r[:-1])
        d_prev = d[:, -1]
        r0 = r[-1]
        if np.exp(-s_min * d_prev.min()) / s_min < tail_tol:
            break
    mid = 0.5 * (lo + hi)
    est = mid.mean(axis=0)
    se = mid.std(axis=0, ddof=1) / math.sqrt(paths)
    half_gap = 0.5 * (hi - lo).mean(axis=0)
    return est, se, half_gap
