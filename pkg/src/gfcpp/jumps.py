"""Jump-size laws: sampling, Laplace transforms, moments and pmfs.

Continuous laws (support on (0, inf)):
    Exponential, MittagLeffler, TemperedMittagLeffler, BernsteinType
Discrete laws (support in {1, 2, ...}):
    DiscreteUniform, TruncatedGeometric, Logarithmic

`CenteredTwoPoint` (jumps of -1 or +1) exists only to build zero-mean
processes for the long-range-dependence check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rng import as_generator
from .specfun import InverseGaussian, Stable, TemperedStable
from .subordinators import (
    sample_increments,
    sample_stable_increment,
    sample_tempered_stable_increment,
)

__all__ = [
    "JumpMoments",
    "Exponential",
    "MittagLeffler",
    "TemperedMittagLeffler",
    "BernsteinType",
    "DiscreteUniform",
    "TruncatedGeometric",
    "Logarithmic",
    "CenteredTwoPoint",
    "sample_jump",
    "jump_lt",
    "jump_moments",
]


class JumpMoments(NamedTuple):
    mean: float
    second_moment: float
    mean_finite: bool = True
    second_finite: bool = True


class _Law:
    discrete = False

    def sample(self, rng, size=None):
        raise NotImplementedError

    def sum_iid(self, counts, rng):
        """Sums of ``counts[i]`` iid jumps, one sum per entry of `counts`."""
        gen = as_generator(rng)
        counts = np.asarray(counts, dtype=np.int64)
        flat = counts.ravel()
        out = np.zeros(flat.shape)
        # bounded batches keep memory flat for large event counts
        batch = 4_000_000
        start = 0
        while start < flat.size:
            stop = start
            acc = 0
            while stop < flat.size and (acc + flat[stop] <= batch or stop == start):
                acc += flat[stop]
                stop += 1
            c = flat[start:stop]
            draws = np.atleast_1d(self.sample(gen, int(c.sum()))) if c.sum() else np.empty(0)
            owner = np.repeat(np.arange(c.size), c)
            out[start:stop] = np.bincount(owner, weights=draws, minlength=c.size)
            start = stop
        return out.reshape(counts.shape)


def _scalar(x, size):
    return float(x) if size is None else x


# ================
# Continuous laws
# ================

@dataclass(frozen=True)
class Exponential(_Law):
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be > 0")

    def sample(self, rng, size=None):
        return _scalar(as_generator(rng).exponential(1.0 / self.eta, size), size)

    def sum_iid(self, counts, rng):
        counts = np.asarray(counts)
        gen = as_generator(rng)
        out = np.zeros(counts.shape)
        pos = counts > 0
        out[pos] = gen.gamma(counts[pos], 1.0 / self.eta)
        return out

    def laplace(self, s):
        return self.eta / (self.eta + np.asarray(s, dtype=float))

    def moments(self):
        return JumpMoments(1.0 / self.eta, 2.0 / self.eta ** 2)


@dataclass(frozen=True)
class MittagLeffler(_Law):
    """Mittag-Leffler jumps with Laplace transform ``eta / (eta + s**beta)``.

    Drawn as a beta-stable subordinator run for an Exponential(eta) time.
    """

    beta: float
    eta: float

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")

    def sample(self, rng, size=None):
        gen = as_generator(rng)
        clock = gen.exponential(1.0 / self.eta, size)
        if self.beta == 1:
            return _scalar(clock, size)
        return _scalar(sample_stable_increment(self.beta, clock, gen), size)

    def laplace(self, s):
        sb = np.power(np.asarray(s, dtype=float), self.beta)
        return self.eta / (self.eta + sb)

    def moments(self):
        if self.beta == 1:
            return Exponential(self.eta).moments()
        return JumpMoments(math.inf, math.inf, False, False)


@dataclass(frozen=True)
class TemperedMittagLeffler(_Law):
    """Tempered Mittag-Leffler jumps, ``E[e^{-sX}] = eta / (eta + (s+nu)**beta - nu**beta)``."""

    beta: float
    eta: float
    nu: float

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not self.nu >= 0:
            raise ValueError("nu must be >= 0")

    def sample(self, rng, size=None):
        gen = as_generator(rng)
        clock = gen.exponential(1.0 / self.eta, size)
        if self.beta == 1:
            return _scalar(clock, size)
        return _scalar(sample_tempered_stable_increment(self.beta, self.nu, clock, gen), size)

    def laplace(self, s):
        g = np.power(np.asarray(s, dtype=float) + self.nu, self.beta) - self.nu ** self.beta
        return self.eta / (self.eta + g)

    def moments(self):
        b, e, v = self.beta, self.eta, self.nu
        if b == 1:
            return Exponential(e).moments()
        if v == 0:
            return JumpMoments(math.inf, math.inf, False, False)
        g1 = b * v ** (b - 1)
        g2 = b * (b - 1) * v ** (b - 2)
        return JumpMoments(g1 / e, -g2 / e + 2 * g1 ** 2 / e ** 2)


@dataclass(frozen=True)
class BernsteinType(_Law):
    """Jumps distributed as ``D_g`` evaluated at an independent Exponential(eta) time.

    Laplace transform ``eta / (g(s) + eta)``; these are the inter-arrival
    times of a Poisson process run on the inverse-``g`` clock.
    """

    g: object
    eta: float

    def __post_init__(self):
        if not isinstance(self.g, (Stable, TemperedStable, InverseGaussian)):
            raise TypeError("g must be a Bernstein descriptor")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")

    def sample(self, rng, size=None):
        gen = as_generator(rng)
        clock = gen.exponential(1.0 / self.eta, size)
        return _scalar(sample_increments(self.g, clock, gen), size)

    def laplace(self, s):
        return self.eta / (self.eta + self.g(np.asarray(s, dtype=float)))

    def moments(self):
        g, e = self.g, self.eta
        if isinstance(g, Stable) or (isinstance(g, TemperedStable) and g.mu == 0):
            return JumpMoments(math.inf, math.inf, False, False)
        if isinstance(g, TemperedStable):
            g1 = g.alpha * g.mu ** (g.alpha - 1)
            g2 = g.alpha * (g.alpha - 1) * g.mu ** (g.alpha - 2)
        else:
            g1 = g.delta / g.gamma
            g2 = -g.delta / g.gamma ** 3
        return JumpMoments(g1 / e, -g2 / e + 2 * g1 ** 2 / e ** 2)


# ==============
# Discrete laws
# ==============

class _DiscreteLaw(_Law):
    discrete = True

    def pmf(self, j):
        raise NotImplementedError

    def pmf_vector(self, n_max):
        """``[P(X=0), ..., P(X=n_max)]``."""
        return np.array([self.pmf(j) for j in range(n_max + 1)])

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        j = np.arange(1, self.support_max + 1)
        p = self.pmf_vector(self.support_max)[1:]
        return np.sum(p * np.exp(-np.multiply.outer(s, j)), axis=-1)


@dataclass(frozen=True)
class DiscreteUniform(_DiscreteLaw):
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")

    @property
    def support_max(self):
        return int(self.k)

    def pmf(self, j):
        return 1.0 / self.k if 1 <= j <= self.k else 0.0

    def sample(self, rng, size=None):
        out = as_generator(rng).integers(1, self.k + 1, size)
        return int(out) if size is None else out.astype(float)

    def moments(self):
        k = self.k
        return JumpMoments((k + 1) / 2.0, (k + 1) * (2 * k + 1) / 6.0)


@dataclass(frozen=True)
class TruncatedGeometric(_DiscreteLaw):
    """``P(X=j) = (1-rho) rho**(j-1) / (1 - rho**k)`` for ``j = 1..k``."""

    rho: float
    k: int

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")

    @property
    def support_max(self):
        return int(self.k)

    def pmf(self, j):
        if not 1 <= j <= self.k:
            return 0.0
        return (1 - self.rho) * self.rho ** (j - 1) / (1 - self.rho ** self.k)

    def sample(self, rng, size=None):
        p = self.pmf_vector(self.k)[1:]
        out = as_generator(rng).choice(np.arange(1, self.k + 1), size=size, p=p / p.sum())
        return int(out) if size is None else out.astype(float)

    def moments(self):
        j = np.arange(1, self.k + 1)
        p = self.pmf_vector(self.k)[1:]
        return JumpMoments(float(np.sum(j * p)), float(np.sum(j * j * p)))


@dataclass(frozen=True)
class Logarithmic(_DiscreteLaw):
    """``P(X=n) = -q**n / (n log(1-q))`` for ``n >= 1``."""

    q: float

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")

    @property
    def support_max(self):
        # atoms beyond this carry less than 1e-12 of tail mass
        n = 1
        tail = 1.0
        while tail >= 1e-12:
            tail -= self.pmf(n)
            n += 1
        return n

    def pmf(self, j):
        if j < 1:
            return 0.0
        return -self.q ** j / (j * math.log1p(-self.q))

    def sample(self, rng, size=None):
        out = as_generator(rng).logseries(self.q, size)
        return int(out) if size is None else out.astype(float)

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return np.log1p(-self.q * np.exp(-s)) / math.log1p(-self.q)

    def moments(self):
        q = self.q
        ell = -math.log1p(-q)
        return JumpMoments(q / ((1 - q) * ell), q / ((1 - q) ** 2 * ell))


@dataclass(frozen=True)
class CenteredTwoPoint(_Law):
    """Jumps of -1 or +1 with probability 1/2 each (zero mean; test-only)."""

    def sample(self, rng, size=None):
        out = 2.0 * as_generator(rng).integers(0, 2, size) - 1.0
        return _scalar(out, size)

    def sum_iid(self, counts, rng):
        counts = np.asarray(counts, dtype=np.int64)
        return 2.0 * as_generator(rng).binomial(counts, 0.5) - counts

    def laplace(self, s):
        return np.cosh(np.asarray(s, dtype=float))

    def moments(self):
        return JumpMoments(0.0, 1.0)


# ==================
# Functional surface
# ==================

def sample_jump(law, rng, size=None):
    """One draw (or `size` draws) from `law`."""
    return law.sample(rng, size)


def jump_lt(law, s):
    """``E[exp(-s X)]``; equals 1 at ``s = 0``."""
    if np.any(np.asarray(s) < 0):
        raise ValueError("s must be >= 0")
    out = law.laplace(s)
    return float(out) if np.ndim(out) == 0 else out


def jump_moments(law) -> JumpMoments:
    return law.moments()
