"""Backoff-value distributions.

A backoff law describes how a contending station picks the moment of its
transmission attempt.  Three continuous families on [0, 1] (uniform, power,
exponential-family) plus a discrete law over k slot points are supported.
Sampling is inverse-CDF only, so the number of uniform draws consumed always
equals the number of samples produced and runs are reproducible per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Outcome of :meth:`DiscretePoints.sample_point` when the station stays quiet.
SILENT = 0


class BackoffLaw:
    """Base class for all backoff laws (marker only)."""


class ContinuousLaw(BackoffLaw):
    """A continuous backoff law supported on [0, 1]."""

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def inverse_cdf(self, u):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Draw samples via the inverse CDF; consumes exactly one uniform per sample."""
        return self.inverse_cdf(rng.random(size))

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("argument must lie in [0, 1]")
        return x


@dataclass(frozen=True)
class Uniform01(ContinuousLaw):
    """Uniform law on [0, 1]; identity CDF."""

    def cdf(self, x):
        return self._check_x(x) + 0.0

    def pdf(self, x):
        return np.ones_like(self._check_x(x))

    def inverse_cdf(self, u):
        return np.asarray(u, dtype=np.float64) + 0.0


@dataclass(frozen=True)
class PowerLaw(ContinuousLaw):
    """Law with CDF F(t) = t**(r + 1) on [0, 1], r >= 0."""

    r: float

    def __post_init__(self):
        if not (self.r >= 0.0):
            raise ValueError("r must be >= 0")

    def cdf(self, x):
        return self._check_x(x) ** (self.r + 1.0)

    def pdf(self, x):
        x = self._check_x(x)
        if self.r == 0.0:
            return np.ones_like(x)
        # continuous limit at x = 0 for r > 0 is 0
        return np.where(x > 0.0, (self.r + 1.0) * x ** self.r, 0.0)

    def inverse_cdf(self, u):
        return np.asarray(u, dtype=np.float64) ** (1.0 / (self.r + 1.0))


@dataclass(frozen=True)
class ExpFamily(ContinuousLaw):
    """Law with CDF F(x) = (exp(alpha * x**beta) - 1) / (exp(alpha) - 1) on [0, 1].

    Strictly increasing with F(0) = 0 and F(1) = 1 for all alpha, beta > 0.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise ValueError("alpha must be > 0")
        if not (self.beta > 0.0):
            raise ValueError("beta must be > 0")

    def cdf(self, x):
        x = self._check_x(x)
        return np.expm1(self.alpha * x ** self.beta) / math.expm1(self.alpha)

    def pdf(self, x):
        x = self._check_x(x)
        a, b = self.alpha, self.beta
        if b == 1.0:
            xb1 = np.ones_like(x)
        else:
            # x**(b-1) at x = 0: limit is 0 for b > 1, +inf for b < 1
            with np.errstate(divide="ignore"):
                xb1 = np.where(x > 0.0, x, 0.0) ** (b - 1.0)
                xb1 = np.where(x > 0.0, xb1, 0.0 if b > 1.0 else np.inf)
        return a * b * xb1 * np.exp(a * x ** b) / math.expm1(a)

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=np.float64)
        inner = np.log1p(u * math.expm1(self.alpha)) / self.alpha
        return inner ** (1.0 / self.beta)


@dataclass(frozen=True)
class DiscretePoints(BackoffLaw):
    """Discrete law over k slot points.

    A station transmits at point i (1-based) with probability ``probs[i-1]``
    and stays silent with probability ``1 - sum(probs)``.
    """

    probs: tuple = field()

    def __init__(self, probs):
        probs = tuple(float(p) for p in probs)
        if len(probs) < 1:
            raise ValueError("at least one point probability is required")
        if any(p < 0.0 for p in probs):
            raise ValueError("point probabilities must be >= 0")
        if sum(probs) > 1.0 + 1e-12:
            raise ValueError("point probabilities must sum to at most 1")
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return len(self.probs)

    def cumulative(self) -> np.ndarray:
        """Cumulative point probabilities c_1..c_k (used by samplers and kernels)."""
        return np.cumsum(self.probs)

    def sample_point(self, rng: np.random.Generator) -> int:
        """Return a 1-based point index, or SILENT; consumes one uniform draw."""
        u = rng.random()
        c = 0.0
        for i, p in enumerate(self.probs, start=1):
            c += p
            if u < c:
                return i
        return SILENT


def law_to_json(law: BackoffLaw) -> dict:
    """Serialize a law to the tagged-union JSON config form."""
    if isinstance(law, Uniform01):
        return {"type": "uniform"}
    if isinstance(law, PowerLaw):
        return {"type": "power", "r": law.r}
    if isinstance(law, ExpFamily):
        return {"type": "exp_family", "alpha": law.alpha, "beta": law.beta}
    if isinstance(law, DiscretePoints):
        return {"type": "discrete_points", "probs": list(law.probs)}
    raise TypeError(f"not a backoff law: {law!r}")


def law_from_json(obj: dict) -> BackoffLaw:
    """Parse the tagged-union JSON form back into a law."""
    try:
        tag = obj["type"]
    except (TypeError, KeyError):
        raise ValueError("law object must carry a 'type' tag") from None
    if tag == "uniform":
        return Uniform01()
    if tag == "power":
        return PowerLaw(r=obj["r"])
    if tag == "exp_family":
        return ExpFamily(alpha=obj["alpha"], beta=obj["beta"])
    if tag == "discrete_points":
        return DiscretePoints(obj["probs"])
    raise ValueError(f"unknown law type: {tag!r}")
