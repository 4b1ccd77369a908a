"""Regret and analytical bounds for budgeted lock-up bandits.

Rewards are modelled as negative exponential laws parameterized by their
mean. The helpers here compute realized regret against the top-K benchmark,
the asymptotic lower-bound coefficient, the per-round probability that an arm
lands in the top-K of independent exponential draws (closed form and a
quadrature oracle), and the epsilon-greedy sub-optimal pull probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate

# power-set sums grow as 3^|I|
MAX_BOUND_ARMS = 15


@dataclass
class RewardModel:
    means: np.ndarray
    family: str = "exponential"

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        if np.any(self.means <= 0):
            raise ValueError("reward means must be positive")

    def top(self, k: int) -> np.ndarray:
        """Arm ids of the k largest means (ties to the lowest id)."""
        order = sorted(range(len(self.means)), key=lambda i: (-self.means[i], i))
        return np.array(order[:k])


@dataclass
class RegretSeries:
    cumulative: np.ndarray
    pulls: np.ndarray
    rounds: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rounds is None:
            self.rounds = np.arange(1, len(self.cumulative) + 1)


def compute_regret(granted: np.ndarray, model: RewardModel, batch: int) -> RegretSeries:
    """Cumulative regret per round from a (T, I) selection matrix.

    R_t = t * (sum of the ``batch`` largest means) - sum_i mean_i * W_i(t).
    ``granted`` may also be a trace object exposing a ``granted`` matrix.
    """
    if hasattr(granted, "granted"):
        granted = granted.granted
    granted = np.asarray(granted, dtype=float)
    n = granted.shape[1]
    if batch > n:
        raise ValueError("batch larger than the number of arms")
    best = model.means[model.top(batch)].sum()
    t = np.arange(1, granted.shape[0] + 1)
    collected = np.cumsum(granted @ model.means)
    return RegretSeries(t * best - collected, granted.sum(axis=0).astype(int), t)


def kl_exponential(mean_u: float, mean_v: float) -> float:
    """Relative entropy of Exp(mean_u) with respect to Exp(mean_v)."""
    if mean_u <= 0 or mean_v <= 0:
        raise ValueError("means must be positive")
    return math.log(mean_v / mean_u) + mean_u / mean_v - 1.0


def regret_lower_bound(model: RewardModel, batch: int) -> float:
    """Coefficient of log T in the asymptotic regret of uniformly good policies."""
    means = model.means
    pivot = means[model.top(batch)[-1]]
    return sum((pivot - m) / kl_exponential(m, pivot) for m in means if m < pivot)


def _check_indices(indices, batch, arm):
    theta = np.asarray(indices, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("indices must be positive")
    n = len(theta)
    if not 1 <= batch <= n:
        raise ValueError("batch must be in [1, |I|]")
    if not 0 <= arm < n:
        raise ValueError("arm out of range")
    return theta, n


def _subset_sums(values: Sequence[float]):
    """Sums and sizes of every subset of ``values`` (bitmask order)."""
    sums = np.zeros(1)
    sizes = np.zeros(1, dtype=np.int64)
    for v in values:
        sums = np.concatenate([sums, sums + v])
        sizes = np.concatenate([sizes, sizes + 1])
    return sums, sizes


def expected_pulls_bound(indices: Sequence[float], batch: int, arm: int) -> float:
    """Closed-form probability that ``arm`` is among the top ``batch`` draws.

    Sums, over every set H of at most batch-1 other arms beating the arm
    (lexicographic order) and over every subset phi of the arms outside
    H and the arm itself, the signed term (-1)^|phi| / (theta_i (1/theta_i +
    sum_H 1/theta_j + sum_phi 1/theta_p)). Multiply by T for expected pulls.
    """
    theta, n = _check_indices(indices, batch, arm)
    if n > MAX_BOUND_ARMS:
        raise ValueError(f"closed form limited to {MAX_BOUND_ARMS} arms (got {n})")
    rate = 1.0 / theta
    others = [j for j in range(n) if j != arm]
    total = 0.0
    for h in range(batch):
        for H in combinations(others, h):
            rest = [rate[p] for p in others if p not in H]
            sums, sizes = _subset_sums(rest)
            sign = np.where(sizes % 2, -1.0, 1.0)
            denom = theta[arm] * (rate[arm] + rate[list(H)].sum() + sums)
            total += float(np.sum(sign / denom))
    return total


def _at_most(probs: Sequence[float], k: int) -> float:
    """P(fewer than k successes) for independent Bernoulli(probs)."""
    dist = np.zeros(k + 1)
    dist[0] = 1.0
    for p in probs:
        dist[1:] = dist[1:] * (1 - p) + dist[:-1] * p
        dist[0] *= 1 - p
    return float(dist[:k].sum())


def expected_pulls_numeric(indices: Sequence[float], batch: int, arm: int, tol: float = 1e-9, inner: str = "quad") -> float:
    """Quadrature counterpart of :func:`expected_pulls_bound`.

    Integrates the arm's density times the probability that fewer than
    ``batch`` of the other arms exceed x. With ``inner="quad"`` the
    per-arm tail integrals are themselves computed by quadrature.
    """
    theta, n = _check_indices(indices, batch, arm)
    others = [theta[j] for j in range(n) if j != arm]
    if not others:
        return 1.0

    def density(y, m):
        return math.exp(-y / m) / m

    def tail(x, m):
        if inner == "quad":
            val, _ = integrate.quad(density, 0.0, x, args=(m,), epsabs=1e-14, epsrel=1e-12)
            return 1.0 - val
        return math.exp(-x / m)

    def integrand(x):
        return density(x, theta[arm]) * _at_most([tail(x, m) for m in others], batch)

    value, err = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-12, epsrel=1e-11, limit=200)
    if not math.isfinite(value) or err > tol:
        raise ArithmeticError(f"quadrature did not converge (estimate {value}, residual {err:.2e})")
    return float(value)


@dataclass
class GreedyBound:
    value: float  # clamped into [0, 1]
    raw: float
    vacuous: bool


def egreedy_suboptimal_prob(b: float, d: float, n_arms: int, t: float) -> GreedyBound:
    """Upper bound on the chance epsilon-greedy pulls a sub-optimal arm at round t.

    ``raw`` is the three-term expression evaluated as written (arbitrary
    precision, may overflow to +-inf). Where its base b|I|/((t-1)d^2 sqrt(e))
    is >= 1 the bound carries no information and ``value`` is 1.
    """
    if t < 2:
        raise ValueError("bound defined for t >= 2")
    if b <= 0 or not 0 < d <= 1:
        raise ValueError("need b > 0 and d in (0, 1]")
    b_, d2, t_ = mpmath.mpf(b), mpmath.mpf(d) ** 2, mpmath.mpf(t)
    base = b_ * n_arms / ((t_ - 1) * d2 * mpmath.sqrt(mpmath.e))
    raw = (
        b_ / (d2 * t_)
        + 2 * (b_ / d2) * mpmath.log(1 / base) * base ** (b_ / (5 * d2))
        + (4 * mpmath.e / d2) * base ** (b_ / 2)
    )
    raw_f = float(raw) if abs(raw) < mpmath.mpf("1e308") else math.copysign(math.inf, float(mpmath.sign(raw)))
    vacuous = base >= 1
    value = 1.0 if vacuous else min(1.0, max(0.0, raw_f))
    return GreedyBound(value, raw_f, bool(vacuous))
