"""Subordinator increments, grid paths and first-passage (inverse) clocks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import as_generator
from .specfun import (
    InverseGaussian,
    Stable,
    TemperedStable,
    mean_inverse_subordinator,
    second_moment_inverse_subordinator,
)

__all__ = [
    "MonotonePath",
    "CoverageError",
    "SamplerStallError",
    "sample_stable_increment",
    "sample_tempered_stable_increment",
    "sample_ig_increment",
    "sample_increments",
    "subordinator_path",
    "inverse_path",
    "sample_inverse_at",
    "operational_horizon",
]

_MAX_REJECTION_ROUNDS = 10 ** 6


class CoverageError(ValueError):
    """The simulated subordinator never exceeded the requested calendar time."""


class SamplerStallError(RuntimeError):
    """A rejection sampler exceeded its iteration cap."""


@dataclass(frozen=True)
class MonotonePath:
    """Nondecreasing path sampled on a uniform grid starting at 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must start at 0 and be strictly increasing")
        if values[0] != 0.0 or np.any(np.diff(values) < 0):
            raise ValueError("values must start at 0 and be nondecreasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


# ==========
# Increments
# ==========

def _standard_positive_stable(alpha, size, gen):
    # Chambers-Mallows-Stuck (Kanter form) for the one-sided law with
    # Laplace transform exp(-s**alpha); evaluated in logs for tiny U
    u = gen.uniform(0.0, np.pi, size)
    w = gen.standard_exponential(size)
    log_s = (np.log(np.sin(alpha * u))
             - np.log(np.sin(u)) / alpha
             + (1.0 - alpha) / alpha * (np.log(np.sin((1.0 - alpha) * u)) - np.log(w)))
    return np.exp(log_s)


def sample_stable_increment(alpha, dt, rng, size=None):
    """Increment of the alpha-stable subordinator over a time step `dt`.

    The draw has Laplace transform ``exp(-dt * s**alpha)``; it is
    ``dt**(1/alpha)`` times a standard one-sided stable variate.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0):
        raise ValueError("dt must be >= 0")
    gen = as_generator(rng)
    shape = np.broadcast_shapes(dt.shape, () if size is None else np.atleast_1d(size))
    out = dt ** (1.0 / alpha) * _standard_positive_stable(alpha, shape, gen)
    return float(out) if out.ndim == 0 else out


def sample_tempered_stable_increment(alpha, mu, dt, rng, size=None):
    """Tempered-stable increment by exponential tilting of stable draws.

    A stable draw ``X`` over `dt` is kept with probability ``exp(-mu X)``;
    accepted draws have Laplace transform
    ``exp(-dt * ((s + mu)**alpha - mu**alpha))``. The acceptance rate is
    ``exp(-dt * mu**alpha)``.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    gen = as_generator(rng)
    if mu == 0:
        return sample_stable_increment(alpha, dt, gen, size)
    dt = np.asarray(dt, dtype=float)
    shape = np.broadcast_shapes(dt.shape, () if size is None else np.atleast_1d(size))
    dt_full = np.broadcast_to(dt, shape).ravel()
    out = np.empty(dt_full.shape)
    pending = np.arange(dt_full.size)
    for _ in range(_MAX_REJECTION_ROUNDS):
        x = sample_stable_increment(alpha, dt_full[pending], gen)
        keep = gen.uniform(size=pending.size) <= np.exp(-mu * x)
        out[pending[keep]] = x[keep]
        pending = pending[~keep]
        if pending.size == 0:
            break
    else:
        raise SamplerStallError(
            f"tempered-stable rejection exceeded {_MAX_REJECTION_ROUNDS} rounds")
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def sample_ig_increment(delta, gamma, dt, rng, size=None):
    """Inverse-Gaussian subordinator increment (Michael-Schucany-Haas).

    Over a step `dt` the increment is IG with mean ``delta dt / gamma`` and
    shape ``(delta dt)**2``, i.e. Laplace transform
    ``exp(-dt delta (sqrt(2 s + gamma**2) - gamma))``.
    """
    if delta <= 0 or gamma <= 0:
        raise ValueError("delta and gamma must be > 0")
    gen = as_generator(rng)
    dt = np.asarray(dt, dtype=float)
    shape = np.broadcast_shapes(dt.shape, () if size is None else np.atleast_1d(size))
    dt = np.broadcast_to(dt, shape)
    mean = delta * dt / gamma
    y = gen.standard_normal(shape) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        # a = y * mean / shape; the root is written without cancellation
        a = y / (gamma * delta * dt)
        root = 2.0 * mean / (2.0 + a + np.sqrt(a * a + 4.0 * a))
        u = gen.uniform(size=shape)
        out = np.where(u <= mean / (mean + root), root, mean * mean / root)
    out = np.where(dt > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def sample_increments(desc, dt, rng, size=None):
    """Dispatch to the increment sampler matching the descriptor family."""
    if isinstance(desc, Stable):
        return sample_stable_increment(desc.alpha, dt, rng, size)
    if isinstance(desc, TemperedStable):
        return sample_tempered_stable_increment(desc.alpha, desc.mu, dt, rng, size)
    if isinstance(desc, InverseGaussian):
        return sample_ig_increment(desc.delta, desc.gamma, dt, rng, size)
    raise TypeError(f"unsupported descriptor {desc!r}")


# =====
# Paths
# =====

def subordinator_path(desc, T, n, rng) -> MonotonePath:
    """``D_f`` on the operational grid ``0, T/n, ..., T`` from ``n`` iid increments."""
    if T <= 0:
        raise ValueError("T must be > 0")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    inc = np.atleast_1d(sample_increments(desc, T / n, rng, size=n))
    values = np.concatenate(([0.0], np.cumsum(inc)))
    times = np.arange(n + 1) * (T / n)
    return MonotonePath(times, values)


def inverse_path(d_path: MonotonePath, t_grid) -> MonotonePath:
    """First-passage clock ``E_f(t)`` read off a sampled subordinator path.

    Each ``t`` maps to the operational grid point at the left end of the
    step in which ``D_f`` first exceeds ``t``; that is the largest ``r``
    with ``D_f(r) <= t``. Hence ``D_f(E(t)) <= t < D_f(E(t) + dr)`` and
    ``E(0) = 0``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and t_grid.max() >= d_path.values[-1]:
        raise CoverageError(
            f"calendar time {t_grid.max():g} is not below the simulated supremum "
            f"{d_path.values[-1]:g}; lengthen the operational-time horizon")
    idx = np.searchsorted(d_path.values, t_grid, side="right") - 1
    return MonotonePath(t_grid, d_path.times[idx])


def operational_horizon(desc, t_max, n_sd=5.0):
    """Operational-time span expected to carry ``D_f`` past `t_max`.

    Mean plus `n_sd` standard deviations of ``E_f(t_max)``; paths that
    still fall short are extended by the simulators.
    """
    m1 = mean_inverse_subordinator(desc, t_max)
    m2 = second_moment_inverse_subordinator(desc, t_max)
    sd = math.sqrt(max(m2 - m1 * m1, 0.0))
    return max(m1 + n_sd * sd, 1e-3)


def _first_passage_row(cum, times, dr):
    idx = np.searchsorted(cum, times, side="right") - 1
    return idx * dr


def sample_inverse_at(desc, times, size, rng, n_steps=10_000, horizon=None,
                      chunk_cells=2_000_000, return_last=False):
    """Monte Carlo draws of ``E_f`` at the calendar times `times`.

    Returns an array of shape ``(size, len(times))``; row ``i`` is one
    independent clock path. The operational grid has ``n_steps`` steps over
    `horizon` (default: `operational_horizon`); rows whose subordinator
    falls short of ``max(times)`` are extended with further increments in
    blocks that double in length until they cross it.
    """
    gen = as_generator(rng)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    t_max = float(times.max()) if times.size else 0.0
    out = np.zeros((size, times.size))
    if size == 0 or t_max == 0.0:
        return out
    horizon = operational_horizon(desc, t_max) if horizon is None else float(horizon)
    dr = horizon / n_steps
    rows = max(1, chunk_cells // n_steps)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        inc = sample_increments(desc, dr, gen, size=(stop - start, n_steps))
        cum = np.concatenate((np.zeros((stop - start, 1)), np.cumsum(inc, axis=1)), axis=1)
        for i in range(stop - start):
            row = cum[i]
            block = max(n_steps // 8, 1)
            while row[-1] <= t_max:
                extra = np.cumsum(sample_increments(desc, dr, gen, size=block)) + row[-1]
                row = np.concatenate((row, extra))
                block *= 2
            out[start + i] = _first_passage_row(row, times, dr)
    return out
