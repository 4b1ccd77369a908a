"""Discrete-round simulation loop and multi-seed experiments.

Each round is processed expiry first, then arrivals, then selection: running
slices that reached their duration are released, eligible tenants post the
requests drawn for this round, the policy grants a set of tenants, newly
admitted slices open a lock-up, and every granted tenant yields its
reward from this round's utilization draw.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .model import (
    ArrivalTable,
    LockUp,
    SliceRequest,
    compute_reward,
    draw_arrival_table,
    fraction_to_prbs,
)
from .optimum import hindsight_optimum
from .policies import BrokerState, BudgetError, PlannedPolicy, Policy, make_policy
from .scenario import Scenario


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def run_seed(master_seed: int, run_index: int) -> np.random.SeedSequence:
    """Stream of run ``run_index``; independent of how many other runs exist."""
    return np.random.SeedSequence(master_seed, spawn_key=(run_index,))


def _child(seq: np.random.SeedSequence, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (k,)))


def _as_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


# stream ids inside one run
TRAFFIC, TRAINING, POLICY = 0, 1, 2


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


@dataclass
class SimulationTrace:
    policy: str
    horizon: int
    n_tenants: int
    capacity: int
    granted: np.ndarray  # bool (T, I)
    rewards: np.ndarray  # float (T, I)
    utilization: np.ndarray  # sum of used PRBs of running slices
    cost_sum: np.ndarray  # admission cost of the round's decision
    demand: np.ndarray  # sum of granted slice sizes R of running slices
    active: np.ndarray  # running slices
    shortfall: np.ndarray  # running slices not fully served (violation rounds)
    violation: np.ndarray  # bool
    admissions: List[tuple] = field(default_factory=list)  # (round, tenant, template, duration)
    pull_counts: np.ndarray = None
    final_means: np.ndarray = None
    final_index: np.ndarray = None
    elapsed: float = 0.0

    @property
    def reward_sum(self) -> np.ndarray:
        return self.rewards.sum(axis=1)

    @property
    def cumulative_reward(self) -> float:
        return float(self.rewards.sum())

    @property
    def mean_reward(self) -> float:
        """Average per-round system reward."""
        return self.cumulative_reward / self.horizon

    @property
    def mean_utilization(self) -> float:
        """Per-round mean of served PRBs over capacity."""
        return float(np.mean(np.minimum(self.utilization, self.capacity)) / self.capacity)

    @property
    def violation_rate(self) -> float:
        """Running slice-rounds not fully served over all running slice-rounds."""
        total = self.active.sum()
        return float(self.shortfall.sum() / total) if total else 0.0

    @property
    def violation_round_rate(self) -> float:
        return float(self.violation.mean())

    @property
    def multiplexing_gain(self) -> float:
        """Per-round mean of granted slice demand beyond 100% of capacity."""
        return float(np.mean(np.maximum(self.demand / self.capacity - 1.0, 0.0)))

    @property
    def selection_counts(self) -> np.ndarray:
        return self.granted.sum(axis=0)

    def granted_ids(self, t: int) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.granted[t - 1])]


@dataclass
class RoundOutcome:
    round: int
    granted: List[int]
    rewards: Dict[int, float]
    utilization: int
    cost_sum: int
    demand: int
    violation: bool
    admitted: List[int]


# ---------------------------------------------------------------------------
# One run
# ---------------------------------------------------------------------------


class Broker:
    """Per-run mutable state: learning state, running slices, utilization estimates."""

    def __init__(self, scenario: Scenario, policy: Policy, table: ArrivalTable, check: bool = True):
        self.scenario = scenario
        self.policy = policy
        self.table = table
        self.check = check
        n = scenario.n_tenants
        self.state = BrokerState(n)
        self.util_sum = [0.0] * n
        self.util_count = [0] * n
        self._arrive = table.arrive.tolist()
        self._offset = table.offset.tolist()
        self._template = table.template.tolist()
        self._fraction = table.fraction.tolist()
        self._res = [t.resources for t in scenario.templates]
        self._dur = [t.duration for t in scenario.templates]
        self._alpha = scenario.config.alpha
        self._monitored = scenario.config.monitoring

    def train(self, rng: np.random.Generator) -> None:
        """One fictitious reward per tenant drawn from its true reward law."""
        cfg = self.scenario.config
        for tenant in self.scenario.tenants:
            reward = 0.0
            if rng.random() < tenant.request_probability:
                s = int(rng.choice(len(tenant.template_choice), p=tenant.template_choice))
                R = self._res[s]
                lam = fraction_to_prbs(float(tenant.utilization.sample_fraction(rng)), R)
                reward = compute_reward(R, lam, cfg.capacity, cfg.alpha, cfg.monitoring)
            self.state.observe(tenant.id, reward)

    def admission_cost(self, tenant: int, template: int) -> int:
        """alpha*R + (1-alpha)*min(R, learned usage); the full R without history."""
        R = self._res[template]
        if not self._monitored or self.util_count[tenant] == 0:
            return R
        est = self.util_sum[tenant] / self.util_count[tenant] * R
        raw = self._alpha * R + (1.0 - self._alpha) * min(R, est)
        return min(R, max(0, math.ceil(raw - 1e-9)))

    def step(self, t: int) -> RoundOutcome:
        state = self.state
        state.round = t
        C = self.scenario.capacity
        alpha, monitored = self._alpha, self._monitored
        row = t - 1
        lockups = state.lockups

        # (1) expire finished slices, consume one round of the others
        for tenant in [k for k, lk in lockups.items() if lk.remaining == 0]:
            del lockups[tenant]
        for lk in lockups.values():
            lk.remaining -= 1

        # (2) requests of eligible tenants
        arrive = self._arrive[row]
        templates = self._template[row]
        offsets = self._offset[row]
        cost = self.admission_cost
        pending = [
            SliceRequest(i, templates[i], t, row + offsets[i], cost(i, templates[i]))
            for i in range(state.n_tenants)
            if arrive[i] and i not in lockups
        ]

        # (3) selection
        decision = self.policy.select(state, pending, C)
        if self.check:
            if decision.cost_sum > C:
                raise BudgetError(f"round {t}: {self.policy.name} spent {decision.cost_sum} > {C}")
            if not lockups.keys() <= set(decision.granted):
                missing = set(lockups) - set(decision.granted)
                raise BudgetError(f"round {t}: {self.policy.name} dropped lock-ups {sorted(missing)}")
            if len(set(decision.granted)) != len(decision.granted):
                raise BudgetError(f"round {t}: duplicate grants")

        # (4) open lock-ups for granted requests
        by_tenant = {r.tenant: r for r in pending}
        admitted = []
        for i in decision.granted:
            req = by_tenant.get(i)
            if req is not None:
                lockups[i] = LockUp(i, req.template, t, self._dur[req.template] - 1, req.cost)
                admitted.append(i)

        # (5) utilization and rewards
        frac = self._fraction[row]
        res = self._res
        observe = state.observe
        rewards = {}
        used_total = 0
        demand = 0
        for i in decision.granted:
            lk = lockups.get(i)
            if lk is None:
                rewards[i] = 0.0
                observe(i, 0.0)
                continue
            R = res[lk.template]
            lam = min(R, int(frac[i] * (R + 1)))
            eta = alpha * R / C
            if monitored:
                eta += (1.0 - alpha) * (R - lam) / R
                self.util_sum[i] += lam / R
                self.util_count[i] += 1
            rewards[i] = eta
            observe(i, eta)
            used_total += lam
            demand += R

        return RoundOutcome(
            t, list(decision.granted), rewards, used_total, decision.cost_sum, demand, used_total > C, admitted
        )


def run_round(broker: Broker, t: int) -> RoundOutcome:
    return broker.step(t)


def run_simulation(scenario: Scenario, policy_name: str, seed=0, table: Optional[ArrivalTable] = None, check: bool = True) -> SimulationTrace:
    """Run ``scenario`` for its horizon under one policy; deterministic given ``seed``."""
    cfg = scenario.config
    cfg.validate()
    seq = _as_seq(seed)
    T, n, C = cfg.horizon, scenario.n_tenants, scenario.capacity
    if table is None:
        table = draw_arrival_table(scenario.tenants, T, _child(seq, TRAFFIC))
    if table.horizon != T:
        raise ValueError("arrival table horizon does not match the scenario")

    started = time.perf_counter()
    if policy_name == "optimum":
        plan, _ = hindsight_optimum(scenario, table)
        policy = PlannedPolicy(plan, _plan_usage(scenario, table, plan))
    else:
        policy = make_policy(policy_name, cfg, _child(seq, POLICY))

    broker = Broker(scenario, policy, table, check=check)
    if policy.needs_training:
        broker.train(_child(seq, TRAINING))

    granted = np.zeros((T, n), dtype=bool)
    rewards = np.zeros((T, n))
    util = np.zeros(T, dtype=np.int64)
    cost = np.zeros(T, dtype=np.int64)
    demand = np.zeros(T, dtype=np.int64)
    active = np.zeros(T, dtype=np.int64)
    short = np.zeros(T, dtype=np.int64)
    admissions = []
    for t in range(1, T + 1):
        out = broker.step(t)
        row = t - 1
        for i, r in out.rewards.items():
            granted[row, i] = True
            rewards[row, i] = r
        util[row] = out.utilization
        cost[row] = out.cost_sum
        demand[row] = out.demand
        active[row] = len(broker.state.lockups)
        if out.violation:
            frac = broker._fraction[row]
            short[row] = sum(
                1 for i, lk in broker.state.lockups.items() if fraction_to_prbs(frac[i], broker._res[lk.template]) > 0
            )
        for i in out.admitted:
            s = broker.state.lockups[i].template
            admissions.append((t, i, s, broker._dur[s]))
    elapsed = time.perf_counter() - started

    state = broker.state
    W = np.array(state.pull_counts)
    means = np.array(state.empirical_means)
    with np.errstate(divide="ignore"):
        index = means + np.sqrt(2.0 * math.log(max(T, 1)) / np.where(W > 0, W, np.nan))
    return SimulationTrace(
        policy=policy.name,
        horizon=T,
        n_tenants=n,
        capacity=C,
        granted=granted,
        rewards=rewards,
        utilization=util,
        cost_sum=cost,
        demand=demand,
        active=active,
        shortfall=short,
        violation=util > C,
        admissions=admissions,
        pull_counts=W,
        final_means=means,
        final_index=index,
        elapsed=elapsed,
    )


def _plan_usage(scenario, table, plan) -> Dict[int, Dict[int, int]]:
    """PRBs each planned slice uses in each of its rounds (the optimum's costs)."""
    T = table.horizon
    usage: Dict[int, Dict[int, int]] = {}
    for start, tenants in plan.items():
        for i in tenants:
            tpl = scenario.templates[int(table.template[start - 1, i])]
            for t in range(start, min(T, start + tpl.duration - 1) + 1):
                usage.setdefault(t, {})[i] = fraction_to_prbs(table.fraction[t - 1, i], tpl.resources)
    return usage


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple:
    """Sample mean and half-width of its ``level`` confidence interval (0 for one sample)."""
    x = np.asarray(values, dtype=float)
    m = float(x.mean())
    if len(x) < 2:
        return m, 0.0
    sem = float(x.std(ddof=1) / math.sqrt(len(x)))
    return m, float(stats.t.ppf(0.5 + level / 2, len(x) - 1) * sem)


METRICS = ("mean_reward", "mean_utilization", "violation_rate", "multiplexing_gain")


@dataclass
class PolicySummary:
    policy: str
    seeds: int
    means: Dict[str, float]
    ci: Dict[str, float]
    selection_ratio: List[float]
    reward_cdf: Dict[str, List[float]]
    utilization_cdf: Dict[str, List[float]]
    seconds_per_run: float
    seconds_per_round: float
    single_seed: bool = False


@dataclass
class ExperimentResult:
    traces: Dict[str, List[SimulationTrace]]
    summaries: Dict[str, PolicySummary]

    def as_dict(self) -> dict:
        return {
            name: {
                "seeds": s.seeds,
                "single_seed_ci": s.single_seed,
                "mean": s.means,
                "ci95": s.ci,
                "selection_ratio": s.selection_ratio,
                "reward_cdf": s.reward_cdf,
                "utilization_cdf": s.utilization_cdf,
                "seconds_per_run": s.seconds_per_run,
                "seconds_per_round": s.seconds_per_round,
            }
            for name, s in self.summaries.items()
        }


def _cdf_points(values: np.ndarray, points: int = 51) -> Dict[str, List[float]]:
    q = np.linspace(0.0, 1.0, points)
    return {"prob": q.tolist(), "value": np.quantile(values, q).tolist()}


def summarize(name: str, traces: List[SimulationTrace]) -> PolicySummary:
    means, ci = {}, {}
    for metric in METRICS:
        means[metric], ci[metric] = mean_ci([getattr(tr, metric) for tr in traces])
    T = traces[0].horizon
    ratio = np.mean([tr.selection_counts / T for tr in traces], axis=0)
    per_round_reward = np.concatenate([tr.reward_sum for tr in traces])
    per_round_util = np.concatenate([np.minimum(tr.utilization, tr.capacity) / tr.capacity for tr in traces])
    secs = float(np.mean([tr.elapsed for tr in traces]))
    return PolicySummary(
        policy=name,
        seeds=len(traces),
        means=means,
        ci=ci,
        selection_ratio=ratio.tolist(),
        reward_cdf=_cdf_points(per_round_reward),
        utilization_cdf=_cdf_points(per_round_util),
        seconds_per_run=secs,
        seconds_per_round=secs / T,
        single_seed=len(traces) == 1,
    )


def _one(args):
    scenario, policy, master_seed, k = args
    return k, policy, run_simulation(scenario, policy, run_seed(master_seed, k))


def run_experiment(scenario: Scenario, policies: Sequence[str], seeds: int, master_seed: int = 0, workers: int = 1) -> ExperimentResult:
    """Run every policy on ``seeds`` independent runs sharing per-run traffic.

    Runs may execute in a process pool; results are reduced in (policy, run)
    order so the aggregate does not depend on completion order.
    """
    if seeds < 1:
        raise ValueError("need at least one seed")
    jobs = [(scenario, p, master_seed, k) for p in policies for k in range(seeds)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, jobs))
    else:
        results = [_one(j) for j in jobs]
    traces: Dict[str, List[SimulationTrace]] = {p: [None] * seeds for p in policies}
    for k, p, tr in results:
        traces[p][k] = tr
    summaries = {p: summarize(p, traces[p]) for p in policies}
    return ExperimentResult(traces, summaries)
