"""One run of every online policy on the reference scenario (shorter horizon)."""

from blmab import POLICY_NAMES, ScenarioConfig, build_scenario, run_simulation

sc = build_scenario(ScenarioConfig(horizon=2000))
print(f"{'policy':<8} {'reward':>7} {'util':>6} {'viol':>8} {'gain':>6}")
for name in POLICY_NAMES:
    if name == "optimum":
        continue  # limited to tiny instances, see 03
    tr = run_simulation(sc, name, seed=1)
    print(f"{name:<8} {tr.mean_reward:7.3f} {tr.mean_utilization:6.3f} {tr.violation_rate:8.5f} {tr.multiplexing_gain:6.3f}")
    print("         selections per tenant:", tr.selection_counts.tolist())
