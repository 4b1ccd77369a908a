"""Over-provisioning knob: smaller alpha admits more, at the price of violations."""

from blmab import ScenarioConfig, build_scenario, run_experiment

for alpha in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    sc = build_scenario(ScenarioConfig(alpha=alpha, horizon=2000))
    s = run_experiment(sc, ["onets"], seeds=5).summaries["onets"]
    print(f"alpha={alpha:.1f}  multiplexing gain {s.means['multiplexing_gain']:.3f}  "
          f"violation rate {s.means['violation_rate']:.5f}")
