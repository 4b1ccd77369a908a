"""Acceptance criteria, each checked at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line (printed at the end of the
pytest run and when this file is executed directly) before asserting.
``BLMAB_ACCEPT_SEEDS`` lowers the seed counts for quick local runs; the
stated criteria use the defaults.
"""

from __future__ import annotations

import itertools
import math
import os
import sys
import time

import numpy as np
import pytest
from scipy.stats import qmc

from blmab.analysis import RewardModel, compute_regret, expected_pulls_bound, expected_pulls_numeric
from blmab.config import preset
from blmab.harness import run_experiment, run_seed, run_simulation
from blmab.policies import ONETSPolicy, solve_instantaneous
from blmab.scenario import ScenarioConfig, build_scenario
from blmab.synthetic import run_bandit

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # executed as a script
    ACCEPTANCE_LINES = []

SEEDS = int(os.environ.get("BLMAB_ACCEPT_SEEDS", "100"))


def report(number: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# ---------------------------------------------------------------------------


def test_c1_policy_ordering():
    spec = preset("fig2")
    res = run_experiment(build_scenario(spec.config), ["optimum", "eucb", "onets", "egreedy"], SEEDS)
    m = {p: s.means["mean_reward"] for p, s in res.summaries.items()}
    ci = {p: s.ci["mean_reward"] for p, s in res.summaries.items()}
    order = ["optimum", "eucb", "onets", "egreedy"]
    gaps = []
    ok = True
    for a, b in zip(order, order[1:]):
        width = max(ci[a], ci[b])
        good = m[a] - m[b] > -width
        ok &= good
        gaps.append(f"{a}-{b}={m[a] - m[b]:+.4f} (>-{width:.4f}: {'ok' if good else 'no'})")
    means = ", ".join(f"{p}={m[p]:.4f}±{ci[p]:.4f}" for p in order)
    report(1, ok, f"{SEEDS} seeds; {means}; " + "; ".join(gaps))
    assert ok


def test_c2_closed_form_predicts_selection_counts():
    cfg = ScenarioConfig()
    sc = build_scenario(cfg)
    T, K, n = cfg.horizon, cfg.batch_size, cfg.tenant_count
    counts, predicted = [], []
    for k in range(SEEDS):
        tr = run_simulation(sc, "onets", run_seed(0, k))
        counts.append(tr.pull_counts)
        predicted.append([T * expected_pulls_bound(tr.final_index, K, i) for i in range(n)])
    W = np.mean(counts, axis=0)
    P = np.mean(predicted, axis=0)
    rel = (W - P) / P
    mask = W >= 100
    worst = float(np.max(np.abs(rel[mask])))
    single = np.abs((np.asarray(counts[0]) - np.asarray(predicted[0])) / np.asarray(predicted[0]))
    ok = worst <= 0.15
    report(
        2, ok,
        f"{SEEDS}-seed mean counts vs T x closed form: max |rel err| {worst:.3f} (tol 0.15), "
        f"per-arm {np.round(rel, 3).tolist()}; single-seed max {single.max():.3f}",
    )
    assert ok


def test_c3_closed_form_vs_integral_vs_monte_carlo():
    rng = np.random.default_rng(2024)
    worst_num = worst_mc = 0.0
    points = 0
    for n in range(1, 7):
        theta = rng.uniform(0.1, 1.0, size=n)
        u = qmc.Sobol(n, scramble=True, seed=n).random_base2(20)  # 1,048,576 draws
        x = -np.log1p(-u) * theta
        rank = (-x).argsort(axis=1).argsort(axis=1)
        for K in range(1, n + 1):
            freq = (rank < K).mean(axis=0)
            for i in range(n):
                closed = expected_pulls_bound(theta, K, i)
                numeric = expected_pulls_numeric(theta, K, i)
                worst_num = max(worst_num, abs(closed - numeric))
                worst_mc = max(worst_mc, abs(closed - freq[i]), abs(numeric - freq[i]))
                points += 1
    ok = worst_num <= 1e-6 and worst_mc <= 1e-3
    report(3, ok, f"{points} (|I|,K,i) points: max |closed-integral| {worst_num:.2e} (tol 1e-6), "
                  f"max |formula-MC| {worst_mc:.2e} (tol 1e-3, 2^20 draws)")
    assert ok


def test_c4_sublinear_regret():
    means = [0.9, 0.8, 0.6, 0.4, 0.2]
    K, T, runs = 2, 10_000, 50
    model = RewardModel(means)
    regs = [
        compute_regret(run_bandit(ONETSPolicy(k=K), means, T, np.random.default_rng(500 + s)), model, K).cumulative
        for s in range(runs)
    ]
    r = np.mean(regs, axis=0)
    t = np.arange(1, T + 1)
    m = t >= 100
    A = np.column_stack([np.ones(m.sum()), np.log(t[m])])
    coef, *_ = np.linalg.lstsq(A, r[m], rcond=None)
    resid = r[m] - A @ coef
    r2 = 1 - resid @ resid / ((r[m] - r[m].mean()) ** 2).sum()
    per_round_3, per_round_4 = r[999] / 1000, r[-1] / T
    ok = r2 >= 0.95 and per_round_4 < 0.5 * per_round_3
    report(4, ok, f"{runs}-run mean regret fit a+c log t: c={coef[1]:.2f}, R^2={r2:.4f} (tol 0.95); "
                  f"R_T/T {per_round_3:.4f} at 1e3 -> {per_round_4:.4f} at 1e4 (ratio {per_round_4 / per_round_3:.3f}, tol 0.5)")
    assert ok


def test_c5_knapsack_matches_enumeration():
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        budget = int(rng.integers(0, 151))
        costs = rng.integers(0, 80, size=n)
        values = rng.random(n)
        locked = {}
        if rng.random() < 0.3:
            locked = {100: int(rng.integers(0, budget + 1))}
        residual = budget - sum(locked.values())
        masks = np.array(list(itertools.product([0, 1], repeat=n)), dtype=bool)
        tot_c = masks @ costs
        tot_v = masks @ values
        feas = tot_c <= residual
        best = np.flatnonzero(feas)[np.argmax(tot_v[feas])]
        expected = set(np.flatnonzero(masks[best]).tolist())
        chosen = solve_instantaneous(budget, locked, [(i, float(values[i]), int(costs[i])) for i in range(n)])
        got = set(chosen[len(locked):])
        if got != expected or chosen[: len(locked)] != list(locked):
            # equal-value alternatives count only if the value is identical
            if not math.isclose(values[list(got)].sum(), tot_v[best], rel_tol=0, abs_tol=1e-12):
                mismatches += 1
    ok = mismatches == 0
    report(5, ok, f"1000 random instances (|I|<=12): {mismatches} mismatches against exhaustive enumeration")
    assert ok


def _per_round_time(policy: str, n: int, T: int = 2000, reps: int = 3) -> float:
    sc = build_scenario(ScenarioConfig(tenant_count=n, horizon=T))
    best = math.inf
    for k in range(reps):
        tr = run_simulation(sc, policy, run_seed(1, k), check=False)
        best = min(best, tr.elapsed / T)
    return best


def test_c6_complexity_separation():
    t = {(p, n): _per_round_time(p, n) for p in ("onets", "eucb") for n in (5, 15)}
    r_onets = t["onets", 15] / t["onets", 5]
    r_eucb = t["eucb", 15] / t["eucb", 5]
    ok = r_onets <= 5 and r_eucb > 10 and r_eucb > r_onets
    report(6, ok, f"per-round time |I|=5 -> 15: onets {t['onets', 5] * 1e6:.0f} -> {t['onets', 15] * 1e6:.0f} us "
                  f"(x{r_onets:.2f}, tol <=5), eucb {t['eucb', 5] * 1e6:.0f} -> {t['eucb', 15] * 1e6:.0f} us "
                  f"(x{r_eucb:.2f}, tol >10)")
    assert ok


def test_c7_alpha_tradeoff():
    alphas = [round(0.1 * k, 1) for k in range(1, 11)]
    base = ScenarioConfig()
    stats = {}
    for a in alphas:
        s = run_experiment(build_scenario(base.replace(alpha=a)), ["onets"], SEEDS).summaries["onets"]
        stats[a] = s
    viol = {a: (s.means["violation_rate"], s.ci["violation_rate"]) for a, s in stats.items()}
    gain = {a: (s.means["multiplexing_gain"], s.ci["multiplexing_gain"]) for a, s in stats.items()}

    def monotone(d):
        # value must not drop as alpha decreases, up to one CI width
        return all(d[lo][0] >= d[hi][0] - max(d[lo][1], d[hi][1]) for lo, hi in zip(alphas, alphas[1:]))

    ok = viol[1.0][0] == 0 and gain[1.0][0] == 0 and monotone(viol) and monotone(gain)
    vtxt = ", ".join(f"{a}:{viol[a][0]:.5f}" for a in alphas)
    gtxt = ", ".join(f"{a}:{gain[a][0]:.3f}" for a in alphas)
    report(7, ok, f"{SEEDS} seeds/alpha; violation rate {{{vtxt}}}; multiplexing gain {{{gtxt}}} "
                  f"(reported only: reference targets gain >0.30 at violation <0.00015)")
    assert ok


def _fuzz_config(rng) -> tuple:
    n = int(rng.integers(1, 13))
    util = ["uniform", "full", f"beta:{rng.uniform(0.3, 4):.2f},{rng.uniform(0.3, 4):.2f}"][int(rng.integers(3))]
    cfg = ScenarioConfig(
        tenant_count=n,
        template_count=int(rng.integers(1, 11)),
        capacity=int(rng.integers(10, 301)),
        pareto_mean=float(rng.choice([0.05, 0.5, 5.0, 100.0])),
        pareto_std=float(rng.choice([0.01, 0.1, 1.0])),
        alpha=float(rng.random()),
        horizon=2000,
        batch_size=int(rng.integers(1, n + 1)),
        duration_max=int(rng.integers(1, 16)),
        utilization=util,
        monitoring=bool(rng.random() < 0.9),
        random_ties=bool(rng.random() < 0.3),
        seed=int(rng.integers(1 << 31)),
    )
    policy = ["fcfs", "random", "egreedy", "onets", "eucb"][int(rng.integers(5))]
    return cfg, policy


def _check_trace(tr, C) -> list:
    bad = []
    if not (tr.cost_sum <= C).all():
        bad.append("budget")
    if not ((tr.rewards >= 0) & (tr.rewards <= 1)).all():
        bad.append("reward range")
    busy = {}
    for start, i, _, L in sorted(tr.admissions):
        if start <= busy.get(i, 0):
            bad.append("overlap")
        end = start + L - 1
        busy[i] = end
        if not tr.granted[start - 1 : min(tr.horizon, end), i].all():
            bad.append("lock-up continuity")
    return bad


def test_c8_invariants_under_fuzzing():
    rng = np.random.default_rng(8)
    rounds = runs = 0
    failures = {}
    while rounds < 1_000_000:
        cfg, policy = _fuzz_config(rng)
        sc = build_scenario(cfg)
        seed = int(rng.integers(1 << 63))
        tr = run_simulation(sc, policy, seed)  # hard budget / lock-up assertions inside
        again = run_simulation(sc, policy, seed)
        problems = _check_trace(tr, cfg.capacity)
        if not (np.array_equal(tr.granted, again.granted) and np.array_equal(tr.rewards, again.rewards)
                and tr.admissions == again.admissions):
            problems.append("determinism")
        for p in problems:
            failures[p] = failures.get(p, 0) + 1
        rounds += cfg.horizon
        runs += 1
    ok = not failures
    report(8, ok, f"{rounds} fuzzed rounds over {runs} random scenarios; violations: {failures or 'none'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
