"""Analytical side: lower bound, top-K probabilities, epsilon-greedy bound."""

import numpy as np

from blmab import (
    RewardModel,
    egreedy_suboptimal_prob,
    expected_pulls_bound,
    expected_pulls_numeric,
    kl_exponential,
    regret_lower_bound,
)

print("KL(Exp(1) || Exp(2)) =", round(kl_exponential(1, 2), 5))
print("lower-bound coefficient, means (2, 1), K=1:", round(regret_lower_bound(RewardModel([2, 1]), 1), 4))

theta = [0.6, 0.3, 0.1]
for i in range(3):
    closed = expected_pulls_bound(theta, 2, i)
    numeric = expected_pulls_numeric(theta, 2, i)
    print(f"arm {i}: P(top-2) closed form {closed:.6f}, quadrature {numeric:.6f}")

for t in np.logspace(3, 6, 4):
    g = egreedy_suboptimal_prob(0.1, 1.0, 2, t)
    print(f"epsilon-greedy bound at t={t:>9.0f}: {g.value:.4f} (raw {g.raw:.4f})")
g = egreedy_suboptimal_prob(10, 0.01, 10, 1e4)
print("reference parameters at t=1e4: raw", g.raw, "vacuous", g.vacuous)
