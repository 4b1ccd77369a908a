"""Command-line front end.

``blmab run`` executes experiments and writes one CSV per (policy, seed)
plus a JSON summary; ``blmab bounds`` evaluates the analytical bounds.
Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import (
    MAX_BOUND_ARMS,
    RewardModel,
    egreedy_suboptimal_prob,
    expected_pulls_bound,
    regret_lower_bound,
)
from .config import PRESETS, ConfigError, Preset, load_config, preset
from .harness import METRICS, ExperimentResult, run_experiment
from .policies import POLICY_NAMES
from .scenario import ScenarioConfig, build_scenario

WORKERS_ENV = "BLMAB_WORKERS"
CSV_COLUMNS = ("round", "granted_ids", "reward_sum", "utilization", "cost_sum", "violation")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blmab", description="Budgeted lock-up bandit slice broker simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run policies over independent seeds")
    run.add_argument("--scenario", type=Path, help="YAML scenario file")
    run.add_argument("--preset", choices=PRESETS + ("none",), default="none", help="figure preset")
    run.add_argument("--policies", help=f"comma-separated subset of {','.join(POLICY_NAMES)}")
    run.add_argument("--seeds", type=int, default=10, help="independent runs per policy (default 10)")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--master-seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    run.add_argument("--horizon", type=int, help="override the number of rounds")
    run.add_argument("--quiet", action="store_true", help="do not print the summary table")

    b = sub.add_parser("bounds", help="evaluate the analytical bounds")
    b.add_argument("--means", required=True, help="comma-separated true reward means (lower bound)")
    b.add_argument("--indices", help="comma-separated index values for the top-K probabilities (default: means)")
    b.add_argument("-K", "--batch", type=int, default=1, help="plays per round")
    b.add_argument("-b", type=float, default=10.0, help="epsilon-greedy b")
    b.add_argument("-d", type=float, default=0.01, help="epsilon-greedy d")
    b.add_argument("-T", "--horizon", type=int, default=10_000, help="horizon")
    b.add_argument("--points", type=int, default=10, help="samples of the epsilon-greedy curve")
    b.add_argument("--json", type=Path, help="append the values to this JSON summary (created if missing)")
    return parser


def _floats(text: str, what: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from exc
    if not values:
        raise UsageError(f"{what}: empty list")
    return values


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _resolve(args) -> Preset:
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    if not 0 <= args.master_seed < 2**64:
        raise UsageError("--master-seed must be an unsigned 64-bit integer")
    if args.preset != "none":
        spec = preset(args.preset)
        if args.scenario is not None:
            raise UsageError("--scenario and --preset are mutually exclusive")
    else:
        cfg = load_config(args.scenario) if args.scenario is not None else ScenarioConfig()
        spec = Preset("custom", cfg, ["onets", "eucb", "egreedy", "fcfs", "random"])
    if args.policies:
        names = [p.strip().lower() for p in args.policies.split(",") if p.strip()]
        bad = [p for p in names if p not in POLICY_NAMES]
        if bad or not names:
            raise UsageError(f"unknown policy {', '.join(bad) or '(none)'}; valid names: {', '.join(POLICY_NAMES)}")
        spec.policies = list(dict.fromkeys(names))
    if args.horizon is not None:
        if args.horizon < 1:
            raise UsageError("--horizon must be >= 1")
        spec.config = spec.config.replace(horizon=args.horizon)
    for _, cfg in spec.configs():
        try:
            cfg.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if "optimum" in spec.policies and (
            cfg.tenant_count > cfg.optimum_max_tenants or cfg.horizon > cfg.optimum_max_horizon
        ):
            raise UsageError(
                f"optimum limited to {cfg.optimum_max_tenants} tenants and {cfg.optimum_max_horizon} rounds "
                f"(scenario has {cfg.tenant_count} tenants, {cfg.horizon} rounds)"
            )
    return spec


def _write_trace(path: Path, trace) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        reward_sum = trace.reward_sum
        for t in range(1, trace.horizon + 1):
            row = t - 1
            w.writerow((
                t,
                " ".join(str(i) for i in trace.granted_ids(t)),
                repr(float(reward_sum[row])),
                int(trace.utilization[row]),
                int(trace.cost_sum[row]),
                int(trace.violation[row]),
            ))


def _selection_overlay(path: Path, result: ExperimentResult, cfg: ScenarioConfig) -> Optional[dict]:
    """Selection ratios per policy next to the closed-form top-K prediction from ONETS's final indices."""
    n = cfg.tenant_count
    columns = {p: s.selection_ratio for p, s in result.summaries.items()}
    predicted = None
    if "onets" in result.traces and n <= MAX_BOUND_ARMS:
        per_run = [
            [expected_pulls_bound(tr.final_index, cfg.batch_size, i) for i in range(n)]
            for tr in result.traces["onets"]
        ]
        predicted = np.mean(per_run, axis=0).tolist()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        names = list(columns)
        w.writerow(["tenant"] + names + (["onets_predicted"] if predicted else []))
        for i in range(n):
            w.writerow([i] + [repr(float(columns[p][i])) for p in names] + ([repr(float(predicted[i]))] if predicted else []))
    return {"onets_predicted_ratio": predicted} if predicted else None


def _write_scatter(path: Path, result: ExperimentResult) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("policy", "round", "reward_sum", "utilization_ratio"))
        for p, traces in result.traces.items():
            tr = traces[0]
            ratio = np.minimum(tr.utilization, tr.capacity) / tr.capacity
            for t in range(tr.horizon):
                w.writerow((p, t + 1, repr(float(tr.reward_sum[t])), repr(float(ratio[t]))))


def _print_table(title: str, result: ExperimentResult, out=None) -> None:
    out = out or sys.stdout
    print(title, file=out)
    header = f"{'policy':<9} {'reward':>16} {'utilization':>12} {'violation':>10} {'mux gain':>9} {'s/run':>8}"
    print(header, file=out)
    print("-" * len(header), file=out)
    for p, s in result.summaries.items():
        m, ci = s.means, s.ci
        flag = "*" if s.single_seed else " "
        print(
            f"{p:<9} {m['mean_reward']:>9.4f}±{ci['mean_reward']:<6.4f}{flag}"
            f"{m['mean_utilization']:>12.4f} {m['violation_rate']:>10.5f} {m['multiplexing_gain']:>9.4f} "
            f"{s.seconds_per_run:>8.3f}",
            file=out,
        )
    if any(s.single_seed for s in result.summaries.values()):
        print("* single seed: confidence interval width set to 0", file=out)


def cmd_run(args) -> int:
    spec = _resolve(args)
    workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {
        "preset": spec.name,
        "description": spec.description,
        "policies": spec.policies,
        "seeds": args.seeds,
        "master_seed": args.master_seed,
        "runs": [],
    }
    aggregate_rows = []
    for value, cfg in spec.configs():
        tag = "." if value is None else f"{spec.sweep[0]}_{value}"
        target = args.out / tag
        target.mkdir(parents=True, exist_ok=True)
        scenario = build_scenario(cfg)
        result = run_experiment(scenario, spec.policies, args.seeds, args.master_seed, workers)
        for p, traces in result.traces.items():
            for k, tr in enumerate(traces):
                _write_trace(target / f"{p}_seed{k}.csv", tr)
        entry = {
            "sweep": None if value is None else {spec.sweep[0]: value},
            "scenario": cfg.to_dict(),
            "templates": [[t.resources, t.duration] for t in scenario.templates],
            "arrival_rates": [t.arrival_rate for t in scenario.tenants],
            "summary": result.as_dict(),
        }
        if "selection_overlay" in spec.extras:
            extra = _selection_overlay(target / "selection_overlay.csv", result, cfg)
            if extra:
                entry.update(extra)
        if "scatter" in spec.extras:
            _write_scatter(target / "scatter.csv", result)
        summary["runs"].append(entry)
        for p, s in result.summaries.items():
            row = {"sweep_value": "" if value is None else value, "policy": p}
            for metric in METRICS:
                row[metric] = s.means[metric]
                row[metric + "_ci95"] = s.ci[metric]
            row["seconds_per_run"] = s.seconds_per_run
            aggregate_rows.append(row)
        if not args.quiet:
            _print_table(f"\n[{spec.name}{'' if value is None else f' {spec.sweep[0]}={value}'}]", result)
    if spec.sweep is not None:
        with (args.out / "aggregate.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(aggregate_rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(aggregate_rows)
    with (args.out / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2)
    return 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def compute_bounds(means, indices, batch, b, d, horizon, points=10) -> dict:
    n = len(indices)
    if not 1 <= batch <= len(means):
        raise UsageError("K must be between 1 and the number of arms")
    if n > MAX_BOUND_ARMS:
        raise UsageError(f"top-K closed form limited to {MAX_BOUND_ARMS} arms (got {n})")
    if horizon < 2:
        raise UsageError("horizon must be >= 2")
    model = RewardModel(means)
    coef = regret_lower_bound(model, batch)
    probs = [expected_pulls_bound(indices, batch, i) for i in range(n)]
    grid = sorted({int(round(v)) for v in np.logspace(math.log10(2), math.log10(horizon), max(points, 2))})
    curve = []
    for t in grid:
        g = egreedy_suboptimal_prob(b, d, n, t)
        curve.append({"t": t, "value": g.value, "raw": g.raw, "vacuous": g.vacuous})
    return {
        "means": list(means),
        "indices": list(indices),
        "K": batch,
        "horizon": horizon,
        "lower_bound_coefficient": coef,
        "lower_bound_at_horizon": coef * math.log(horizon),
        "top_k_probability": probs,
        "expected_pulls": [p * horizon for p in probs],
        "egreedy": {"b": b, "d": d, "curve": curve},
    }


def cmd_bounds(args) -> int:
    means = _floats(args.means, "--means")
    indices = _floats(args.indices, "--indices") if args.indices else means
    if any(v <= 0 for v in means + indices):
        raise UsageError("means and indices must be positive")
    if args.b <= 0 or not 0 < args.d <= 1:
        raise UsageError("need b > 0 and d in (0, 1]")
    res = compute_bounds(means, indices, args.batch, args.b, args.d, args.horizon, args.points)
    print(f"lower-bound coefficient: {res['lower_bound_coefficient']:.6g} (x log T = {res['lower_bound_at_horizon']:.6g})")
    print("arm  P(top-K)    E[W](T)")
    for i, (p, w) in enumerate(zip(res["top_k_probability"], res["expected_pulls"])):
        print(f"{i:>3}  {p:.6f}  {w:>10.1f}")
    print("epsilon-greedy sub-optimal probability")
    for pt in res["egreedy"]["curve"]:
        note = " (vacuous)" if pt["vacuous"] else ""
        print(f"  t={pt['t']:<10d} bound={pt['value']:.6g} raw={pt['raw']:.6g}{note}")
    if args.json is not None:
        data = json.loads(args.json.read_text()) if args.json.exists() else {}
        data.setdefault("bounds", []).append(res)
        args.json.write_text(json.dumps(data, indent=2))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return int(exc.code or 0)
    handler = cmd_run if args.command == "run" else cmd_bounds
    try:
        return handler(args)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"blmab: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure inside a run
        print(f"blmab: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
