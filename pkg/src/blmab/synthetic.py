"""Plain stochastic bandit driver for the learning policies.

Every arm is always available, costs nothing and never locks, and a pulled
arm returns an exponential reward with its configured mean. This strips the
slicing layer so regret can be measured against known means.
"""

from __future__ import annotations

import numpy as np

from .model import SliceRequest
from .policies import BrokerState, Policy


def run_bandit(policy: Policy, means, horizon: int, rng: np.random.Generator, train: bool = True) -> np.ndarray:
    """Return the (horizon, |I|) boolean pull matrix of ``policy``.

    With ``train`` every arm is pulled once before round 1; those pulls are
    not part of the returned matrix.
    """
    means = np.asarray(means, dtype=float)
    n = len(means)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = BrokerState(n)
    if train:
        for i in range(n):
            state.observe(i, float(rng.exponential(means[i])))
    pending = [SliceRequest(i, 0, 0, 0.0, 0) for i in range(n)]
    pulls = np.zeros((horizon, n), dtype=bool)
    # one draw per (round, arm) up front; only the pulled ones are observed
    draws = rng.exponential(means, size=(horizon, n))
    for t in range(1, horizon + 1):
        state.round = t
        decision = policy.select(state, pending, n)
        for i in decision.granted:
            pulls[t - 1, i] = True
            state.observe(i, float(draws[t - 1, i]))
    return pulls
