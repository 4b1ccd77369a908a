"""Traffic model and per-round reward.

Builds the reference scenario, looks at its templates and arrival rates, and
evaluates the reward of a few (requested, used) pairs.
"""

import numpy as np

from blmab import ScenarioConfig, build_scenario, compute_reward, draw_arrival_table

sc = build_scenario(ScenarioConfig())
print("templates (PRBs, rounds):", [(t.resources, t.duration) for t in sc.templates])
print("arrival rates per round:", np.round([t.arrival_rate for t in sc.tenants], 3))

# a request lands in every round where the tenant is free with probability 1 - exp(-rate)
table = draw_arrival_table(sc.tenants, 1000, np.random.default_rng(0))
print("empirical request probability:", table.arrive.mean().round(4))

# the reward mixes the requested share of C with the unused share of the slice
for used in (0, 25, 50):
    print(f"R=50, used={used:>2}, alpha=0.5 -> {compute_reward(50, used, 150, 0.5):.5f}")
