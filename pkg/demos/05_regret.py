"""Regret of ONETS on a plain exponential bandit grows like log t."""

import numpy as np

from blmab import RewardModel, compute_regret, regret_lower_bound
from blmab.policies import ONETSPolicy
from blmab.synthetic import run_bandit

means = [0.9, 0.8, 0.6, 0.4, 0.2]
model = RewardModel(means)
regret = np.mean(
    [compute_regret(run_bandit(ONETSPolicy(k=1), means, 10_000, np.random.default_rng(s)), model, 1).cumulative
     for s in range(10)],
    axis=0,
)
for t in (100, 1000, 10_000):
    print(f"t={t:>6}: regret {regret[t - 1]:7.1f}   per round {regret[t - 1] / t:.4f}")
print("asymptotic lower bound x log T:", round(regret_lower_bound(model, 1) * np.log(10_000), 1))
