"""Independent verification engines.

Exact enumeration and Monte Carlo estimators for the quantities that
:mod:`backofflab.analytics` computes in closed form.  These never call the
closed forms they are meant to check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .laws import ContinuousLaw

__all__ = [
    "OracleEstimate",
    "enumerate_discrete_success",
    "mc_gap_probability",
    "mc_clw_round",
]

_ENUMERATION_CAP = 10 ** 8


@dataclass(frozen=True)
class OracleEstimate:
    """A Bernoulli Monte Carlo estimate with its normal-approximation error."""

    mean: float
    std_error: float
    trials: int

    def z_score(self, reference: float) -> float:
        """Standardized distance of the estimate from a reference value."""
        if self.std_error == 0.0:
            return 0.0 if self.mean == reference else float("inf")
        return abs(self.mean - reference) / self.std_error


def _bernoulli_estimate(successes: int, trials: int) -> OracleEstimate:
    mean = successes / trials
    return OracleEstimate(
        mean=mean, std_error=sqrt(mean * (1.0 - mean) / trials), trials=trials
    )


def enumerate_discrete_success(n_stations: int, probs) -> float:
    """Exact success probability of a k-slot-point round by brute-force
    enumeration of all (k + 1)**N joint station choices.

    Choice 0 means silent; a round succeeds when exactly one station attains
    the minimal chosen point.
    """
    probs = [float(p) for p in probs]
    if any(p < 0.0 for p in probs) or sum(probs) > 1.0 + 1e-12:
        raise ValueError("invalid point probability vector")
    k = len(probs)
    if (k + 1) ** n_stations > _ENUMERATION_CAP:
        raise ValueError("instance exceeds the enumeration cap")
    weights = [1.0 - sum(probs)] + probs  # index 0 = silent
    total = 0.0
    for choices in itertools.product(range(k + 1), repeat=n_stations):
        transmitting = [c for c in choices if c > 0]
        if not transmitting:
            continue
        lo = min(transmitting)
        if transmitting.count(lo) != 1:
            continue
        prob = 1.0
        for c in choices:
            prob *= weights[c]
        total += prob
    return total


def mc_gap_probability(
    law: ContinuousLaw, n: int, delta: float, trials: int, seed: int
) -> OracleEstimate:
    """Monte Carlo frequency of the event that the two smallest of n draws from
    ``law`` differ by more than ``delta``."""
    if not isinstance(law, ContinuousLaw):
        raise TypeError("law must be a continuous backoff law")
    if trials < 10 ** 4:
        raise ValueError("trials must be >= 1e4")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if n == 1:
        return _bernoulli_estimate(trials, trials)
    successes = 0
    chunk = 200_000
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = law.sample(rng, size=(m, n))
        x.sort(axis=1)
        successes += int(np.count_nonzero(x[:, 1] - x[:, 0] > delta))
        done += m
    return _bernoulli_estimate(successes, trials)


def mc_clw_round(
    n_stations: int, p: float, lam: float, window: float, trials: int, seed: int
) -> OracleEstimate:
    """Monte Carlo frequency of a successful round where every station draws a
    participation coin (threshold p) and a uniform sensing moment in
    [0, window]; a round succeeds when exactly one station participates, or the
    earliest participant leads the runner-up by more than lam."""
    if trials < 10 ** 4:
        raise ValueError("trials must be >= 1e4")
    if n_stations < 1:
        raise ValueError("n_stations must be >= 1")
    rng = np.random.default_rng(seed)
    successes = 0
    chunk = 200_000
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        xi = rng.random((m, n_stations))
        eta = rng.random((m, n_stations)) * window
        active = xi < p
        counts = active.sum(axis=1)
        # lone participant always wins
        successes += int(np.count_nonzero(counts == 1))
        multi = counts >= 2
        if np.any(multi):
            e = np.where(active[multi], eta[multi], np.inf)
            e.sort(axis=1)
            successes += int(np.count_nonzero(e[:, 1] - e[:, 0] > lam))
        done += m
    return _bernoulli_estimate(successes, trials)
