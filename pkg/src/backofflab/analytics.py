"""Closed-form probabilities, optima, and numeric procedures for contention rounds.

Everything in this module is a pure function of its arguments; the Monte Carlo
and enumeration cross-checks live in :mod:`backofflab.oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.optimize

from .laws import ContinuousLaw, ExpFamily, Uniform01

__all__ = [
    "MSequence",
    "TwoPointOptimum",
    "RateVector",
    "ExpFamilyOptimum",
    "QuadratureError",
    "RefinementError",
    "gap_prob_uniform",
    "clw_success_prob",
    "clw_expected_election_time",
    "two_point_success",
    "two_point_optimum",
    "m_sequence",
    "f_k_objective",
    "k_point_optimal_rates",
    "k_point_success_exact",
    "gap_prob_quadrature",
    "gap_prob_exp_closed",
    "election_objective",
    "optimize_exp_family",
]


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested accuracy."""


class RefinementError(RuntimeError):
    """Raised when simplex refinement ends up worse than the coarse grid."""


@dataclass(frozen=True)
class MSequence:
    """The limit success probabilities M_1..M_k of the slot-point recurrence."""

    values: tuple

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def final(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class TwoPointOptimum:
    """Optimal (p, q) for the two-slot-point protocol, with its success value."""

    p: float
    q: float
    success: float


@dataclass(frozen=True)
class RateVector:
    """N-scaled transmission rates a_1..a_k; station probabilities are a_i / N."""

    a: tuple

    def __len__(self):
        return len(self.a)

    def probs(self, n_stations: int) -> np.ndarray:
        return np.asarray(self.a, dtype=np.float64) / n_stations


@dataclass(frozen=True)
class ExpFamilyOptimum:
    """Minimizer of the election-time objective over (alpha, gap)."""

    alpha_star: float
    delta_star: float
    objective: float


def _check_prob(p, name="p"):
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")


def gap_prob_uniform(n: int, gap: float) -> float:
    """Probability that the two smallest of n uniform draws differ by more than gap.

    Equals (1 - gap)**n for n >= 2; with a single draw there is no second
    order statistic and the result is 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_prob(gap, "gap")
    if n == 1:
        return 1.0
    return (1.0 - gap) ** n


def clw_success_prob(n_stations: int, p: float, lam: float, window: float) -> float:
    """Success probability of one round where each station, with probability p,
    senses at a uniform moment in [0, window] and transmits if the channel is idle.

    For window < lam only a lone transmitter can win; for window >= lam multiple
    participants can still succeed if the earliest sensing moment leads the
    runner-up by more than lam.
    """
    if n_stations < 1:
        raise ValueError("n_stations must be >= 1")
    _check_prob(p)
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if window < 0.0:
        raise ValueError("window must be >= 0")
    total = n_stations * p * (1.0 - p) ** (n_stations - 1)
    if window >= lam:
        for k in range(2, n_stations + 1):
            total += (
                (1.0 - lam / window) ** k
                * math.comb(n_stations, k)
                * p ** k
                * (1.0 - p) ** (n_stations - k)
            )
    return total


def clw_expected_election_time(
    n_stations: int, p: float, lam: float, packet: float, window: float
) -> float:
    """Expected time to elect a leader, under a geometric-slot model.

    Each slot lasts window + 2 * (packet + lam) and succeeds independently with
    the per-round success probability; the expectation is slot length divided
    by that probability.  This is a modeling choice: the round structure does
    not prescribe it.
    """
    if packet <= 0.0:
        raise ValueError("packet must be > 0")
    success = clw_success_prob(n_stations, p, lam, window)
    if success <= 0.0:
        raise ValueError("success probability is 0; expected time diverges")
    return (window + 2.0 * (packet + lam)) / success


def two_point_success(n_stations: int, p: float, q: float) -> float:
    """Success probability with two slot points: transmit now with probability p,
    after one quantum with probability q, stay silent otherwise."""
    if n_stations < 1:
        raise ValueError("n_stations must be >= 1")
    if p < 0.0 or q < 0.0 or p + q > 1.0 + 1e-15:
        raise ValueError("need p >= 0, q >= 0, p + q <= 1")
    n = n_stations
    return n * p * (1.0 - p) ** (n - 1) + n * q * (1.0 - (p + q)) ** (n - 1)


def two_point_optimum(n_stations: int) -> TwoPointOptimum:
    """Closed-form maximizer of :func:`two_point_success` for n_stations >= 2."""
    if n_stations < 2:
        raise ValueError("n_stations must be >= 2")
    n = n_stations
    q = (n - 1) ** 2 / (n ** 2 * (n - 1 - ((n - 1) / n) ** n))
    p = 1.0 - q * n
    return TwoPointOptimum(p=p, q=q, success=two_point_success(n, p, q))


def m_sequence(k: int) -> MSequence:
    """M_1 = 1/e, M_{j+1} = exp(-1 + M_j): the best achievable limit success
    probability with j slot points, as the number of stations grows."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = [1.0 / math.e]
    for _ in range(k - 1):
        values.append(math.exp(-1.0 + values[-1]))
    return MSequence(values=tuple(values))


def f_k_objective(a) -> float:
    """Limit success probability sum(a_i * exp(-(a_1 + ... + a_i))) for scaled
    rates a_i."""
    a = np.asarray(a, dtype=np.float64)
    if a.size < 1:
        raise ValueError("rate vector must be non-empty")
    if np.any(a < 0.0):
        raise ValueError("rates must be >= 0")
    return float(np.sum(a * np.exp(-np.cumsum(a))))


def k_point_optimal_rates(k: int) -> RateVector:
    """Rates maximizing :func:`f_k_objective`: a_k = 1 and a_i = 1 - M_{k-i}
    for i < k; the maximum value is M_k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = m_sequence(k).values
    a = [1.0 - m[k - i - 1] for i in range(1, k)] + [1.0]
    return RateVector(a=tuple(a))


def k_point_success_exact(n_stations: int, probs) -> float:
    """Exact finite-N success probability for the k-slot-point protocol:
    sum over points of N * p_i * (1 - (p_1 + ... + p_i))**(N - 1)."""
    if n_stations < 1:
        raise ValueError("n_stations must be >= 1")
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0.0):
        raise ValueError("point probabilities must be >= 0")
    if probs.sum() > 1.0 + 1e-12:
        raise ValueError("point probabilities must sum to at most 1")
    cum = np.cumsum(probs)
    return float(np.sum(n_stations * probs * (1.0 - cum) ** (n_stations - 1)))


_QUAD_ABS_TOL = 1e-10


def gap_prob_quadrature(law: ContinuousLaw, delta: float, n: int) -> float:
    """Probability that the two smallest of n draws from ``law`` differ by more
    than ``delta``, by adaptive quadrature of
    n * integral_0^{1-delta} f(x) * (1 - F(x + delta))**(n-1) dx.

    Absolute error is controlled to 1e-10; non-convergence raises
    :class:`QuadratureError` rather than returning a silent wrong value.
    """
    if not isinstance(law, ContinuousLaw):
        raise TypeError("law must be a continuous backoff law")
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if delta >= 1.0:
        return 0.0

    def integrand(x):
        return float(law.pdf(x)) * (1.0 - float(law.cdf(x + delta))) ** (n - 1)

    out = scipy.integrate.quad(
        integrand, 0.0, 1.0 - delta,
        epsabs=_QUAD_ABS_TOL / 10.0, epsrel=1e-12, limit=200, full_output=1,
    )
    if len(out) > 3:
        raise QuadratureError(f"quadrature did not converge: {out[3]}")
    value, abserr = out[0], out[1]
    if abserr > _QUAD_ABS_TOL:
        raise QuadratureError(
            f"quadrature error estimate {abserr:.3e} exceeds {_QUAD_ABS_TOL:.0e}"
        )
    return n * value


def gap_prob_exp_closed(alpha: float, delta: float, n: int) -> float:
    """Closed form of :func:`gap_prob_quadrature` for ExpFamily(alpha, beta=1):
    exp(-alpha * delta) * ((e^alpha - e^{alpha delta}) / (e^alpha - 1))**n.

    Evaluated in log space so large alpha * n stays finite.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be > 0")
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if delta >= 1.0:
        return 0.0
    # log ratio = log1p(-exp(-alpha (1 - delta))) - log1p(-exp(-alpha))
    log_ratio = math.log1p(-math.exp(-alpha * (1.0 - delta))) - math.log1p(
        -math.exp(-alpha)
    )
    return math.exp(-alpha * delta + n * log_ratio)


def election_objective(lam: float, delta: float, success_prob: float) -> float:
    """Leading factor (1 + lam / delta) / success_prob of the expected
    leader-election time bound."""
    if lam <= 0.0 or delta <= 0.0:
        raise ValueError("lam and delta must be > 0")
    if success_prob <= 0.0:
        raise ValueError("success probability must be > 0")
    return (1.0 + lam / delta) / success_prob


# optimizer box and grid density; the search problem itself fixes no ranges
_ALPHA_LO, _ALPHA_HI = 1e-2, 50.0
_DELTA_HI = 0.5
_GRID_POINTS = 48


def optimize_exp_family(lam: float, upper_n: int, beta: float) -> ExpFamilyOptimum:
    """Minimize (1 + lam/delta) / P(delta, upper_n) over the exponential-family
    laws, by coarse log-grid search followed by Nelder-Mead refinement.

    The gap is clamped to delta >= lam: a gap below the sensing quantum is
    physically meaningless.  For beta == 1 the closed form is used; otherwise
    each evaluation runs the quadrature.  Deterministic: identical inputs give
    identical output.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if upper_n < 2:
        raise ValueError("upper_n must be >= 2")
    if beta <= 0.0:
        raise ValueError("beta must be > 0")
    delta_lo = min(max(lam, 1e-6), _DELTA_HI * 0.999)

    if beta == 1.0:
        def success(alpha, delta):
            return gap_prob_exp_closed(alpha, delta, upper_n)
    else:
        def success(alpha, delta):
            return gap_prob_quadrature(ExpFamily(alpha=alpha, beta=beta), delta, upper_n)

    def objective(alpha, delta):
        if not (_ALPHA_LO <= alpha <= _ALPHA_HI and delta_lo <= delta <= _DELTA_HI):
            return math.inf
        p = success(alpha, delta)
        if p <= 0.0:
            return math.inf
        return election_objective(lam, delta, p)

    alphas = np.geomspace(_ALPHA_LO, _ALPHA_HI, _GRID_POINTS)
    deltas = np.linspace(delta_lo, _DELTA_HI, _GRID_POINTS)
    best_val = math.inf
    best = (alphas[0], deltas[0])
    for a in alphas:
        for d in deltas:
            v = objective(a, d)
            if v < best_val:
                best_val, best = v, (a, d)

    res = scipy.optimize.minimize(
        lambda z: objective(math.exp(z[0]), z[1]),
        x0=np.array([math.log(best[0]), best[1]]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
    )
    refined_val = float(res.fun)
    if refined_val > best_val:
        raise RefinementError(
            f"refined objective {refined_val} exceeds grid best {best_val}"
        )
    return ExpFamilyOptimum(
        alpha_star=float(math.exp(res.x[0])),
        delta_star=float(res.x[1]),
        objective=refined_val,
    )
