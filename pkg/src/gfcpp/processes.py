"""Compound Poisson paths, their time-changed versions and exact CPP pmfs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from .jumps import DiscreteUniform, Exponential, TruncatedGeometric
from .rng import as_generator
from .specfun import InverseGaussian, Stable, TemperedStable
from .subordinators import (
    sample_increments,
    sample_inverse_at,
    sample_stable_increment,
    sample_tempered_stable_increment,
)

__all__ = [
    "ProcessSpec",
    "EventPath",
    "StableAtExpCPP",
    "TemperedStableAtExpCPP",
    "SubordinatorAtExpCPP",
    "simulate_cpp",
    "simulate_gfcpp",
    "sample_values",
    "simulate_representation",
    "convolution_powers",
    "cpp_pmf",
    "gfcpp_pmf_mc",
]


@dataclass(frozen=True)
class ProcessSpec:
    """Arrival clock plus jump law.

    ``subordinator=None`` gives plain Poisson arrivals; otherwise the
    Poisson process runs on the inverse-subordinator clock. The Poisson
    rate is ``lam * multiplier`` (order-k processes with uniform jumps use
    ``multiplier = k``).
    """

    lam: float
    jump: object
    subordinator: Optional[object] = None
    multiplier: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.subordinator is not None and not isinstance(
                self.subordinator, (Stable, TemperedStable, InverseGaussian)):
            raise TypeError("subordinator must be a Bernstein descriptor or None")
        k = getattr(self.jump, "k", None)
        allowed = {1} if k is None else {1, int(k)}
        if self.multiplier not in allowed:
            raise ValueError(f"multiplier must be one of {sorted(allowed)}")

    @property
    def rate(self) -> float:
        return self.lam * self.multiplier

    @property
    def time_changed(self) -> bool:
        return self.subordinator is not None

    @classmethod
    def order_k(cls, lam, k, subordinator=None):
        """Poisson process of order k: uniform jumps on 1..k at rate k*lam."""
        return cls(lam, DiscreteUniform(k), subordinator, multiplier=k)

    @classmethod
    def polya_aeppli(cls, lam, rho, k, subordinator=None):
        """Polya-Aeppli process of order k: truncated-geometric jumps at rate lam."""
        return cls(lam, TruncatedGeometric(rho, k), subordinator, multiplier=1)


@dataclass
class EventPath:
    """Sample path of a (time-changed) compound Poisson process.

    ``mode == "events"``: one row per jump epoch. ``mode == "grid"``: one
    row per calendar grid point, with the clock values in `clock`.
    """

    times: np.ndarray
    values: np.ndarray
    horizon: float
    mode: str = "events"
    clock: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.mode not in ("events", "grid"):
            raise ValueError("mode must be 'events' or 'grid'")
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.times.size and (self.times[0] < 0 or self.times[-1] > self.horizon):
            raise ValueError("times must lie in [0, horizon]")

    def value_at(self, t):
        """Right-continuous step evaluation; 0 before the first row."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        padded = np.concatenate(([0.0], self.values))
        vals = padded[idx + 1]
        return float(vals) if np.ndim(vals) == 0 else vals

    def events(self) -> "EventPath":
        """Collapse a grid path to the grid points where the value changes."""
        if self.mode == "events":
            return self
        prev = np.concatenate(([0.0], self.values[:-1]))
        keep = self.values != prev
        return EventPath(self.times[keep], self.values[keep], self.horizon, "events")

    def to_csv(self, fh=None) -> str:
        """Write ``t,value`` rows (LF endings, 17 significant digits)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t, v in zip(self.times, self.values):
            writer.writerow([f"{t:.17g}", f"{v:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text, horizon, mode="events"):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "value"]:
            raise ValueError("expected a 't,value' header")
        data = np.array(rows[1:], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], horizon, mode)


# =========
# Simulation
# =========

def simulate_cpp(lam, law, T, rng) -> EventPath:
    """Compound Poisson path on ``[0, T]`` by summing exponential gaps.

    Arrivals after `T` are discarded, so the path holds exactly ``N(T)``
    events.
    """
    if not lam > 0:
        raise ValueError("lam must be > 0")
    if T < 0:
        raise ValueError("T must be >= 0")
    gen = as_generator(rng)
    t, v = 0.0, 0.0
    times, values = [], []
    while True:
        t += -math.log(1.0 - gen.uniform()) / lam
        if t > T:
            break
        v += float(law.sample(gen))
        times.append(t)
        values.append(v)
    return EventPath(np.array(times), np.array(values), float(T), "events")


def simulate_gfcpp(spec: ProcessSpec, T, n_grid, rng, n_steps=10_000) -> EventPath:
    """Time-changed compound Poisson path on the calendar grid ``i T / n_grid``.

    The clock ``E_f`` is sampled on the grid first; a compound Poisson path
    is then run in operational time up to ``E_f(T)`` and read off at the
    clock values. Plain Poisson arrivals use the identity clock.
    """
    gen = as_generator(rng)
    grid = np.linspace(0.0, T, int(n_grid) + 1)
    if spec.time_changed:
        clock = sample_inverse_at(spec.subordinator, grid, 1, gen, n_steps)[0]
    else:
        clock = grid.copy()
    inner = simulate_cpp(spec.rate, spec.jump, float(clock[-1]), gen)
    values = inner.value_at(clock)
    return EventPath(grid, np.asarray(values, dtype=float), float(T), "grid", clock)


def sample_values(spec: ProcessSpec, times, size, rng, n_steps=10_000, horizon=None):
    """Joint draws of ``(Y_f(t), E_f(t))`` at `times` over `size` paths.

    Returns two ``(size, len(times))`` arrays. Counts are drawn as Poisson
    increments over clock increments and jumps are summed per interval, so
    values at different times on one row belong to one path.
    """
    gen = as_generator(rng)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted")
    if spec.time_changed:
        clock = sample_inverse_at(spec.subordinator, times, size, gen, n_steps, horizon)
    else:
        clock = np.broadcast_to(times, (size, times.size)).copy()
    d_clock = np.diff(clock, axis=1, prepend=0.0)
    counts = gen.poisson(spec.rate * d_clock)
    y = np.cumsum(spec.jump.sum_iid(counts, gen), axis=1)
    return y, clock


# ===============
# Representations
# ===============

@dataclass(frozen=True)
class StableAtExpCPP:
    beta: float

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")

    def outer(self, inner, gen):
        if self.beta == 1:
            return np.asarray(inner, dtype=float)
        return sample_stable_increment(self.beta, inner, gen)


@dataclass(frozen=True)
class TemperedStableAtExpCPP:
    beta: float
    nu: float

    def outer(self, inner, gen):
        if self.beta == 1:
            return np.asarray(inner, dtype=float)
        return sample_tempered_stable_increment(self.beta, self.nu, inner, gen)


@dataclass(frozen=True)
class SubordinatorAtExpCPP:
    g: object

    def outer(self, inner, gen):
        return sample_increments(self.g, inner, gen)


def simulate_representation(rep, base: ProcessSpec, T, rng, size=None, n_steps=10_000):
    """Outer subordinator evaluated at the value of an exponential-jump GFCPP.

    This is the composition side of the time-change identities, e.g.
    ``D_beta(Y_f^eta(T))`` for Mittag-Leffler jumps.
    """
    if not isinstance(base.jump, Exponential):
        raise ValueError("the inner process must have exponential jumps")
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    inner, _ = sample_values(base, [T], n, gen, n_steps)
    out = np.atleast_1d(rep.outer(inner[:, 0], gen))
    return float(out[0]) if size is None else out


# ====
# pmfs
# ====

@lru_cache(maxsize=64)
def _convolution_table(law, n_max):
    q = law.pmf_vector(n_max)
    q[0] = 0.0
    table = np.zeros((n_max + 1, n_max + 1))
    table[0, 0] = 1.0
    for m in range(1, n_max + 1):
        table[m] = np.convolve(table[m - 1], q)[: n_max + 1]
    table.setflags(write=False)
    return table


def convolution_powers(law, n_max):
    """``C[m, j] = P(X_1 + ... + X_m = j)`` for ``m, j <= n_max``.

    Jumps are at least 1, so at most `n_max` of them can sum to `n_max`
    and atoms beyond `n_max` never contribute.
    """
    if not getattr(law, "discrete", False):
        raise ValueError("convolution powers need a discrete jump law")
    return _convolution_table(law, int(n_max))


def cpp_pmf(lam, law, n, t):
    """``P(Y(t) = n)`` for a compound Poisson process with discrete jumps.

    Sums ``F^{*m}(n) Poisson(m; lam t)`` over ``m = 0..n``; the ``m = 0``
    term carries the atom at ``n = 0``. `t` may be an array.
    """
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    n = int(n)
    table = convolution_powers(law, n)
    t = np.asarray(t, dtype=float)
    m = np.arange(n + 1)
    pois = stats.poisson.pmf(m, lam * t[..., None])
    out = pois @ table[:, n]
    return float(out) if out.ndim == 0 else out


def gfcpp_pmf_mc(spec: ProcessSpec, n, t, paths, rng, n_steps=10_000, return_draws=False):
    """Monte Carlo ``P(Y_f(t) = n)`` as a mixture of CPP pmfs over clock draws.

    Returns ``(estimate, standard_error)``; with ``return_draws`` the
    per-path conditional pmfs are returned as well.
    """
    if not getattr(spec.jump, "discrete", False):
        raise ValueError("gfcpp_pmf_mc needs a discrete jump law")
    gen = as_generator(rng)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if spec.time_changed:
        clock = sample_inverse_at(spec.subordinator, t_arr, paths, gen, n_steps)
    else:
        clock = np.broadcast_to(t_arr, (paths, t_arr.size))
    draws = cpp_pmf(spec.rate, spec.jump, n, clock)
    est = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / math.sqrt(paths) if paths > 1 else np.full(est.shape, np.inf)
    if np.ndim(t) == 0:
        est, se = float(est[0]), float(se[0])
    return (est, se, draws) if return_draws else (est, se)
