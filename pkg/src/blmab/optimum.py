"""Exact hindsight optimum over a fully drawn arrival table.

Knowing every request and every per-round utilization draw in advance, the
best admission schedule maximizes total reward subject to the per-round
budget on actually used PRBs and the lock-up rule. The state after each round
is the set of running slices, so the problem is a dynamic program over
(round, running lock-ups). Two exact solvers share that state space:

* ``dfs``: depth-first recursion memoized on (round, state), pruning subsets
  whose immediate reward plus an optimistic bound on the remaining rounds
  cannot beat the best subset found so far;
* ``dp``: the same recursion unrolled forward in time with every state of a
  round processed as one numpy batch (the default; far faster on long
  horizons).
"""

from __future__ import annotations

import sys
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np

from .model import ArrivalTable, compute_reward, fraction_to_prbs

NEG_INF = float("-inf")


class InstanceTooLarge(ValueError):
    pass


def _slice_profiles(scenario, table: ArrivalTable):
    """used[t][i] / reward[t][i]: per-round PRBs and reward of a slice started at round t+1.

    Entries are lists over the slice's active rounds, truncated at the horizon.
    """
    T, n = table.arrive.shape
    C = scenario.capacity
    alpha = scenario.config.alpha
    monitored = scenario.config.monitoring
    frac = table.fraction
    used: List[List[list]] = [[None] * n for _ in range(T)]
    gain: List[List[list]] = [[None] * n for _ in range(T)]
    for t in range(T):
        for i in range(n):
            if not table.arrive[t, i]:
                continue
            tpl = scenario.templates[int(table.template[t, i])]
            end = min(T, t + tpl.duration)
            lam = [fraction_to_prbs(frac[u, i], tpl.resources) for u in range(t, end)]
            used[t][i] = lam
            gain[t][i] = [compute_reward(tpl.resources, x, C, alpha, monitored) for x in lam]
    return used, gain


def _suffix_bound(used, gain, T, n, C) -> list:
    """suffix[t]: optimistic reward of rounds t..T-1 (0-based).

    Each round is bounded independently: at most one running slice per
    tenant, any slice that could be running then, and the round's budget.
    That multiple-choice knapsack is solved exactly over PRBs.
    """
    running = [[[] for _ in range(n)] for _ in range(T)]
    for s in range(T):
        for i in range(n):
            if used[s][i] is None:
                continue
            for k, (u, g) in enumerate(zip(used[s][i], gain[s][i])):
                running[s + k][i].append((u, g))
    per_round = np.zeros(T)
    for t in range(T):
        best = np.zeros(C + 1)
        for i in range(n):
            nxt = best.copy()
            for u, g in running[t][i]:
                if u == 0:
                    np.maximum(nxt, best + g, out=nxt)
                else:
                    np.maximum(nxt[u:], best[:-u] + g, out=nxt[u:])
            best = nxt
        per_round[t] = best[C]
    suffix = np.zeros(T + 1)
    suffix[:T] = np.cumsum(per_round[::-1])[::-1]
    # small slack keeps float rounding from pruning an optimal branch
    return (suffix + 1e-9).tolist()


def hindsight_optimum(scenario, table: ArrivalTable, max_tenants=None, max_horizon=None, method: str = "dp"):
    """Best admission schedule for the whole table.

    Returns ``(plan, total_reward)`` where ``plan`` maps a 1-based round to the
    tenants whose new slice is admitted in that round.
    """
    T, n = table.arrive.shape
    max_tenants = scenario.config.optimum_max_tenants if max_tenants is None else max_tenants
    max_horizon = scenario.config.optimum_max_horizon if max_horizon is None else max_horizon
    if n > max_tenants or T > max_horizon:
        raise InstanceTooLarge(
            f"hindsight optimum limited to {max_tenants} tenants and {max_horizon} rounds "
            f"(got {n} tenants, {T} rounds)"
        )
    C = scenario.capacity
    used, gain = _slice_profiles(scenario, table)
    if method == "dp":
        return _forward_dp(used, gain, table.arrive, C)
    if method != "dfs":
        raise ValueError(f"unknown method {method!r}")

    suffix_bound = _suffix_bound(used, gain, T, n, C)

    arrive = table.arrive.tolist()

    def advance(t, starts, subset):
        nxt = list(starts)
        for i in range(n):
            s = nxt[i]
            if s and len(used[s - 1][i]) <= t + 1 - (s - 1):
                nxt[i] = 0
        for i in subset:
            nxt[i] = t + 1 if len(used[t][i]) > 1 else 0
        return tuple(nxt)

    @lru_cache(maxsize=None)
    def value(t: int, starts: Tuple[int, ...]) -> Tuple[float, tuple]:
        # starts[i]: 1 + start round (0-based) of tenant i's running slice, 0 if none
        if t == T:
            return 0.0, ()
        base_used = 0
        base_gain = 0.0
        free = []
        for i in range(n):
            s = starts[i]
            if s:
                k = t - (s - 1)
                base_used += used[s - 1][i][k]
                base_gain += gain[s - 1][i][k]
            elif arrive[t][i]:
                free.append(i)
        if base_used > C:
            return NEG_INF, ()

        options = []
        for size in range(len(free) + 1):
            for subset in combinations(free, size):
                u = base_used + sum(used[t][i][0] for i in subset)
                if u > C:
                    continue
                options.append((base_gain + sum(gain[t][i][0] for i in subset), subset))
        options.sort(key=lambda o: -o[0])

        best, best_subset = NEG_INF, ()
        for immediate, subset in options:
            if immediate + suffix_bound[t + 1] <= best:
                break
            future, _ = value(t + 1, advance(t, starts, subset))
            total = immediate + future
            if total > best:
                best, best_subset = total, subset
        return best, best_subset

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * T + 1000))
    try:
        total, _ = value(0, (0,) * n)
        plan: Dict[int, List[int]] = {}
        starts = (0,) * n
        for t in range(T):
            _, subset = value(t, starts)
            if subset:
                plan[t + 1] = list(subset)
            starts = advance(t, starts, subset)
    finally:
        value.cache_clear()
        sys.setrecursionlimit(old_limit)
    return plan, float(total)


def _forward_dp(used, gain, arrive, C):
    T, n = arrive.shape
    lmax = max((len(used[t][i]) for t in range(T) for i in range(n) if used[t][i] is not None), default=1)
    # U[t, i, a]: PRBs used at round t by tenant i's slice of age a (-1: none running)
    U = np.full((T + 1, n, lmax + 1), -1, dtype=np.int64)
    G = np.zeros((T + 1, n, lmax + 1))
    for s in range(T):
        for i in range(n):
            if used[s][i] is None:
                continue
            for a, (u, g) in enumerate(zip(used[s][i], gain[s][i])):
                U[s + a, i, a] = u
                G[s + a, i, a] = g

    base = lmax + 2  # code 0: idle, code a+1: running at age a
    weights = base ** np.arange(n, dtype=np.int64)
    bits = 1 << np.arange(n)
    subsets = ((np.arange(1 << n)[:, None] & bits) > 0)  # (2^n, n)
    sub_bits = np.arange(1 << n)
    tenants = np.arange(n)

    codes = np.zeros((1, n), dtype=np.int64)
    vals = np.zeros(1)
    parents = []
    for t in range(T):
        running = codes > 0
        age = np.where(running, codes - 1, 0)
        lu = np.where(running, U[t, tenants, age], 0)
        lg = np.where(running, G[t, tenants, age], 0.0)
        base_used = lu.sum(axis=1)
        base_gain = lg.sum(axis=1)
        free_bits = ((~running) & arrive[t]) @ bits
        new_used = subsets @ np.where(arrive[t], U[t, :, 0], 0)
        new_gain = subsets @ np.where(arrive[t], G[t, :, 0], 0.0)

        ok = ((sub_bits[None, :] & ~free_bits[:, None]) == 0)
        ok &= (base_used[:, None] + new_used[None, :]) <= C
        ok &= (base_used <= C)[:, None]

        nxt_age = age + 1
        alive = running & (U[t + 1, tenants, np.minimum(nxt_age, lmax)] >= 0) & (nxt_age <= lmax)
        carry_key = (np.where(alive, codes + 1, 0) * weights).sum(axis=1)
        starts_alive = U[t + 1, :, 1] >= 0 if lmax >= 1 else np.zeros(n, dtype=bool)
        sub_key = subsets @ np.where(starts_alive, 2 * weights, 0)

        si, ki = np.nonzero(ok)
        keys = carry_key[si] + sub_key[ki]
        value = vals[si] + base_gain[si] + new_gain[ki]
        order = np.lexsort((-value, keys))
        keys, value, si, ki = keys[order], value[order], si[order], ki[order]
        first = np.ones(len(keys), dtype=bool)
        first[1:] = keys[1:] != keys[:-1]
        keys, vals = keys[first], value[first]
        parents.append((si[first], ki[first]))
        codes = (keys[:, None] // weights[None, :]) % base

    best = int(np.argmax(vals))
    total = float(vals[best])
    plan: Dict[int, List[int]] = {}
    idx = best
    for t in range(T - 1, -1, -1):
        si, ki = parents[t]
        chosen = [int(i) for i in np.flatnonzero(subsets[ki[idx]])]
        if chosen:
            plan[t + 1] = chosen
        idx = int(si[idx])
    return plan, total
