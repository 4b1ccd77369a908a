"""Hindsight optimum on a five-tenant instance against the online policies.

All policies of one run replay the same pre-drawn requests and utilization
draws, so the optimum is a true upper bound for within-budget schedules.
"""

from blmab import preset, run_experiment, build_scenario

spec = preset("fig2")
cfg = spec.config.replace(horizon=300)
res = run_experiment(build_scenario(cfg), spec.policies, seeds=5)
for name, s in res.summaries.items():
    print(f"{name:<8} reward {s.means['mean_reward']:.3f} ± {s.ci['mean_reward']:.3f}   {s.seconds_per_run:.2f} s/run")
