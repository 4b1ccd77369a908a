"""Admission policies for the budgeted lock-up bandit.

Every policy maps ``(state, pending, capacity)`` to a :class:`RoundDecision`.
Tenants holding a running lock-up are granted first at their original
admission cost; the remaining budget is then filled according to the policy.
A tenant granted without a pending request costs nothing and earns nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .model import LockUp, SliceRequest


class BudgetError(RuntimeError):
    """Running lock-ups alone exceed the capacity (admission was broken upstream)."""


@dataclass
class BrokerState:
    """Learning state shared between the simulation loop and a policy."""

    n_tenants: int
    round: int = 0
    pull_counts: List[int] = field(default_factory=list)
    reward_sums: List[float] = field(default_factory=list)
    empirical_means: List[float] = field(default_factory=list)
    lockups: Dict[int, LockUp] = field(default_factory=dict)
    budget_spent: int = 0

    def __post_init__(self):
        if not self.pull_counts:
            self.pull_counts = [0] * self.n_tenants
            self.reward_sums = [0.0] * self.n_tenants
            self.empirical_means = [0.0] * self.n_tenants

    def observe(self, tenant: int, reward: float) -> None:
        self.pull_counts[tenant] += 1
        self.reward_sums[tenant] += reward
        self.empirical_means[tenant] = self.reward_sums[tenant] / self.pull_counts[tenant]


@dataclass
class RoundDecision:
    granted: List[int] = field(default_factory=list)
    costs: Dict[int, int] = field(default_factory=dict)

    @property
    def cost_sum(self) -> int:
        return sum(self.costs.values())

    def grant(self, tenant: int, cost: int) -> None:
        self.granted.append(tenant)
        self.costs[tenant] = cost


def ucb_index(mean: float, pulls: int, t: float) -> float:
    """Empirical mean plus the sqrt(2 ln t / W) exploration bonus."""
    if pulls < 1:
        raise ValueError("UCB index needs at least one pull per arm (run the training phase)")
    if t < 1:
        raise ValueError("round index must be >= 1")
    return mean + math.sqrt(2.0 * math.log(t) / pulls)


def solve_instantaneous(
    budget: int,
    locked: Dict[int, int],
    candidates: Sequence[tuple],
) -> List[int]:
    """Exact budgeted selection for one round.

    ``locked`` maps tenant -> cost and is always kept. ``candidates`` holds
    ``(tenant, value, cost)`` triples with integer costs; the returned list is
    the locked tenants followed by the subset of candidates maximizing the
    summed value within the residual budget (0/1 knapsack by dynamic
    programming over PRBs). Ties keep the lighter, earlier-listed choice.
    """
    residual = budget - sum(locked.values())
    if residual < 0:
        raise BudgetError(f"locked costs {sum(locked.values())} exceed budget {budget}")
    chosen = list(locked)
    items = [(i, v, int(c)) for i, v, c in candidates if int(c) <= residual]
    if not items:
        return chosen

    best = np.zeros(residual + 1)
    keep = np.zeros((len(items), residual + 1), dtype=bool)
    for k, (_, v, w) in enumerate(items):
        if w == 0:
            take = best + v > best
            best = np.where(take, best + v, best)
            keep[k] = take
            continue
        cand = best[:-w] + v
        take = cand > best[w:]
        nxt = best.copy()
        nxt[w:] = np.where(take, cand, best[w:])
        keep[k, w:] = take
        best = nxt

    c = residual
    picked = []
    for k in range(len(items) - 1, -1, -1):
        if keep[k, c]:
            picked.append(items[k][0])
            c -= items[k][2]
    chosen.extend(reversed(picked))
    return chosen


class Policy:
    """Base class; subclasses implement :meth:`select`."""

    name = "base"
    needs_training = False

    def __init__(self, rng: Optional[np.random.Generator] = None, random_ties: bool = False):
        self.rng = rng if rng is not None else np.random.default_rng()
        self.random_ties = random_ties

    def select(self, state: BrokerState, pending: Sequence[SliceRequest], capacity: int) -> RoundDecision:
        raise NotImplementedError

    def _locked_decision(self, state: BrokerState, capacity: int) -> RoundDecision:
        decision = RoundDecision()
        for tenant in sorted(state.lockups):
            decision.grant(tenant, state.lockups[tenant].cost)
        spent = decision.cost_sum
        if spent > capacity:
            raise BudgetError(f"round {state.round}: lock-ups cost {spent} > capacity {capacity}")
        state.budget_spent = spent
        return decision

    def _ranked(self, tenants: List[int], score: Sequence[float]) -> List[int]:
        """Tenants by decreasing score; ties go to the lowest id unless randomized."""
        if self.random_ties:
            jitter = self.rng.permutation(len(tenants))
            return [t for _, _, t in sorted(zip((-score[t] for t in tenants), jitter, tenants))]
        return sorted(tenants, key=lambda t: (-score[t], t))


def _pending_costs(pending: Sequence[SliceRequest]) -> Dict[int, int]:
    return {r.tenant: r.cost for r in pending}


class FCFSPolicy(Policy):
    """Admit pending requests by arrival time while the budget allows."""

    name = "fcfs"

    def select(self, state, pending, capacity):
        decision = self._locked_decision(state, capacity)
        spent = state.budget_spent
        for req in sorted(pending, key=lambda r: (r.arrival_round, r.arrival_time, r.tenant)):
            if req.tenant in state.lockups:
                continue
            if spent + req.cost <= capacity:
                decision.grant(req.tenant, req.cost)
                spent += req.cost
        state.budget_spent = spent
        return decision


class RandomPolicy(Policy):
    """Admit pending requests in a uniformly shuffled order while the budget allows."""

    name = "random"

    def select(self, state, pending, capacity):
        decision = self._locked_decision(state, capacity)
        spent = state.budget_spent
        reqs = [r for r in pending if r.tenant not in state.lockups]
        for k in self.rng.permutation(len(reqs)):
            req = reqs[k]
            if spent + req.cost <= capacity:
                decision.grant(req.tenant, req.cost)
                spent += req.cost
        state.budget_spent = spent
        return decision


class EpsilonGreedyPolicy(Policy):
    """Epsilon-greedy with a decaying exploration rate min(1, b|I|/(d^2 t)).

    No training phase. Each unconsidered tenant is drawn either greedily by
    empirical mean or uniformly at random, then admitted if it fits.
    """

    name = "egreedy"

    def __init__(self, b: float = 10.0, d: float = 0.01, rng=None, random_ties=False, epsilon: Optional[float] = None):
        super().__init__(rng, random_ties)
        if b <= 0 or not 0 < d <= 1:
            raise ValueError("epsilon-greedy needs b > 0 and d in (0, 1]")
        self.b = b
        self.d = d
        self.fixed_epsilon = epsilon
        self.explore_draws = 0
        self.total_draws = 0

    def epsilon(self, n_tenants: int, t: int) -> float:
        if self.fixed_epsilon is not None:
            return self.fixed_epsilon
        return min(1.0, self.b * n_tenants / (self.d * self.d * max(t, 1)))

    def select(self, state, pending, capacity):
        decision = self._locked_decision(state, capacity)
        spent = state.budget_spent
        eps = self.epsilon(state.n_tenants, state.round)
        costs = _pending_costs(pending)
        means = state.empirical_means
        left = [i for i in range(state.n_tenants) if i not in state.lockups]
        while left:
            z = self.rng.random()
            self.total_draws += 1
            if z > eps:
                i = self._ranked(left, means)[0]
            else:
                self.explore_draws += 1
                i = left[int(self.rng.integers(len(left)))]
            left.remove(i)
            c = costs.get(i, 0)
            if spent + c <= capacity:
                decision.grant(i, c)
                spent += c
        state.budget_spent = spent
        return decision


class ONETSPolicy(Policy):
    """Top-K by UCB index under the budget.

    Running lock-ups count toward K but are never dropped; the remaining
    slots go to the highest-index tenants whose cost fits the residual budget.
    """

    name = "onets"
    needs_training = True

    def __init__(self, k: int = 6, rng=None, random_ties=False):
        super().__init__(rng, random_ties)
        if k < 1:
            raise ValueError("K must be >= 1")
        self.k = k

    def select(self, state, pending, capacity):
        decision = self._locked_decision(state, capacity)
        spent = state.budget_spent
        n = len(decision.granted)
        if n >= self.k:
            return decision
        costs = _pending_costs(pending)
        t = max(state.round, 1)
        log_t = 2.0 * math.log(t)
        W = state.pull_counts
        means = state.empirical_means
        index = [means[i] + math.sqrt(log_t / W[i]) if W[i] else math.inf for i in range(state.n_tenants)]
        for i in self._ranked([i for i in range(state.n_tenants) if i not in state.lockups], index):
            c = costs.get(i, 0)
            if spent + c <= capacity:
                decision.grant(i, c)
                spent += c
                n += 1
                if n >= self.k:
                    break
        state.budget_spent = spent
        return decision


class EUCBPolicy(Policy):
    """UCB indices fed to the exact per-round knapsack."""

    name = "eucb"
    needs_training = True

    def select(self, state, pending, capacity):
        decision = self._locked_decision(state, capacity)
        costs = _pending_costs(pending)
        t = max(state.round, 1)
        cands = [
            (i, ucb_index(state.empirical_means[i], state.pull_counts[i], t), costs.get(i, 0))
            for i in range(state.n_tenants)
            if i not in state.lockups
        ]
        locked = dict(decision.costs)
        chosen = solve_instantaneous(capacity, locked, cands)
        for i in chosen[len(locked):]:
            decision.grant(i, costs.get(i, 0))
        state.budget_spent = decision.cost_sum
        return decision


class PlannedPolicy(Policy):
    """Replays a precomputed admission plan (the hindsight optimum).

    ``plan`` maps round -> tenants to admit; ``round_costs`` maps round ->
    {tenant: PRBs actually used}, which is what the decision reports as cost.
    """

    name = "optimum"

    def __init__(self, plan: Dict[int, List[int]], round_costs: Dict[int, Dict[int, int]]):
        super().__init__()
        self.plan = plan
        self.round_costs = round_costs

    def select(self, state, pending, capacity):
        used = self.round_costs.get(state.round, {})
        decision = RoundDecision()
        for tenant in sorted(state.lockups):
            decision.grant(tenant, used.get(tenant, 0))
        for tenant in self.plan.get(state.round, []):
            decision.grant(tenant, used.get(tenant, 0))
        if decision.cost_sum > capacity:
            raise BudgetError(f"optimum plan over budget at round {state.round}")
        state.budget_spent = decision.cost_sum
        return decision


POLICY_NAMES = ("fcfs", "random", "egreedy", "onets", "eucb", "optimum")


def make_policy(name: str, config, rng: Optional[np.random.Generator] = None) -> Policy:
    """Construct an online policy from the scenario config's policy parameters."""
    key = name.strip().lower()
    ties = getattr(config, "random_ties", False)
    if key == "fcfs":
        return FCFSPolicy(rng, ties)
    if key == "random":
        return RandomPolicy(rng, ties)
    if key == "egreedy":
        return EpsilonGreedyPolicy(config.greedy_b, config.greedy_d, rng, ties)
    if key == "onets":
        return ONETSPolicy(config.batch_size, rng, ties)
    if key == "eucb":
        return EUCBPolicy(rng, ties)
    if key == "optimum":
        raise ValueError("the optimum is built from a full trace; use harness.run_simulation")
    raise ValueError(f"unknown policy {name!r}; valid names: {', '.join(POLICY_NAMES)}")
