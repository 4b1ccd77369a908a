"""Domain types, the per-round reward, and stochastic scenario generation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Pareto shape parameter is clamped here when the requested std is tiny.
MAX_PARETO_SHAPE = 1e6


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SliceTemplate:
    """A predefined slice offer: ``resources`` PRBs held for ``duration`` rounds."""

    id: int
    resources: int
    duration: int

    def validate(self, capacity: int) -> None:
        if not 0 < self.resources <= capacity:
            raise ValueError(
                f"template {self.id}: resources {self.resources} outside (0, {capacity}]"
            )
        if self.duration < 1:
            raise ValueError(f"template {self.id}: duration must be >= 1")


class UtilizationDist:
    """Distribution of the used fraction of a slice's PRBs in one round.

    Subclasses draw fractions in [0, 1]; :func:`fraction_to_prbs` maps a
    fraction onto an integer PRB count bounded by the template size.
    """

    name = "base"

    def sample_fraction(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def mean_fraction(self) -> float:
        raise NotImplementedError


class UniformUtilization(UtilizationDist):
    name = "uniform"

    def sample_fraction(self, rng, size=None):
        return rng.random(size)

    def mean_fraction(self) -> float:
        return 0.5

    def __repr__(self) -> str:
        return "UniformUtilization()"


class FullUtilization(UtilizationDist):
    """Degenerate distribution: every slice uses all of its PRBs."""

    name = "full"

    def sample_fraction(self, rng, size=None):
        if size is None:
            return 1.0
        return np.ones(size)

    def mean_fraction(self) -> float:
        return 1.0

    def __repr__(self) -> str:
        return "FullUtilization()"


@dataclass(frozen=True)
class BetaUtilization(UtilizationDist):
    a: float
    b: float
    name = "beta"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta utilization needs a > 0 and b > 0")

    def sample_fraction(self, rng, size=None):
        return rng.beta(self.a, self.b, size)

    def mean_fraction(self) -> float:
        return self.a / (self.a + self.b)


def parse_utilization(spec: str | UtilizationDist) -> UtilizationDist:
    """Build a distribution from its config string: ``uniform``, ``full`` or ``beta:a,b``."""
    if isinstance(spec, UtilizationDist):
        return spec
    key = spec.strip().lower()
    if key == "uniform":
        return UniformUtilization()
    if key == "full":
        return FullUtilization()
    if key.startswith("beta:"):
        a, b = (float(v) for v in key[5:].split(","))
        return BetaUtilization(a, b)
    raise ValueError(f"unknown utilization distribution {spec!r}")


def utilization_label(dist: UtilizationDist) -> str:
    if isinstance(dist, BetaUtilization):
        return f"beta:{dist.a:g},{dist.b:g}"
    return dist.name


def fraction_to_prbs(fraction: float, resources: int) -> int:
    """Map a used fraction onto {0..resources}; uniform fractions give a uniform integer."""
    return min(resources, int(fraction * (resources + 1)))


@dataclass
class TenantProfile:
    id: int
    arrival_rate: float
    template_choice: np.ndarray
    utilization: UtilizationDist = field(default_factory=UniformUtilization)

    def __post_init__(self):
        if not self.arrival_rate > 0:
            raise ValueError(f"tenant {self.id}: arrival_rate must be > 0")
        p = np.asarray(self.template_choice, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
            raise ValueError(f"tenant {self.id}: template_choice must be a probability vector")
        self.template_choice = p / p.sum()

    @property
    def request_probability(self) -> float:
        """Chance that at least one arrival lands in a round the tenant is eligible."""
        return -math.expm1(-self.arrival_rate)


class SliceRequest(NamedTuple):
    """A pending request; immutable and cheap to build every round."""

    tenant: int
    template: int
    arrival_round: int
    arrival_time: float = 0.0
    cost: int = 0


@dataclass
class LockUp:
    tenant: int
    template: int
    start_round: int
    remaining: int
    cost: int


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------


def compute_reward(requested, used, capacity, alpha, monitored=True):
    """Per-round payoff of one granted tenant.

    Blends the requested share of capacity (weight ``alpha``) with the unused
    share of the slice. Without monitoring the second term is dropped. An
    absent request (``requested == 0``) pays nothing.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if requested < 0 or used < 0:
        raise ValueError("resources must be non-negative")
    if requested > capacity:
        raise ValueError(f"requested {requested} exceeds capacity {capacity}")
    if requested == 0:
        if used > 0:
            raise ValueError("used resources without a request")
        return 0.0
    share = alpha * requested / capacity
    if not monitored:
        return share
    if used > requested:
        raise ValueError(f"used {used} exceeds requested {requested}")
    return share + (1.0 - alpha) * (requested - used) / requested


# ---------------------------------------------------------------------------
# Arrival rates
# ---------------------------------------------------------------------------


def pareto_parameters(mean: float, std: float) -> tuple[float, float]:
    """Return (scale, shape) of a Pareto-I law with the given mean and std.

    For shape a > 2, std/mean = 1/sqrt(a(a-2)), hence a = 1 + sqrt(1 + (mean/std)^2)
    and scale = mean (a-1)/a.
    """
    if not (math.isfinite(mean) and mean > 0):
        raise ValueError(f"Pareto mean must be positive, got {mean}")
    if not (math.isfinite(std) and std >= 0):
        raise ValueError(f"Pareto std must be non-negative, got {std}")
    if std == 0 or mean / std > MAX_PARETO_SHAPE:
        shape = MAX_PARETO_SHAPE
        warnings.warn(
            f"Pareto shape clamped to {MAX_PARETO_SHAPE:g} (std={std} is tiny relative to mean={mean})",
            RuntimeWarning,
            stacklevel=2,
        )
    else:
        ratio = mean / std
        shape = 1.0 + math.sqrt(1.0 + ratio * ratio)
    shape = min(shape, MAX_PARETO_SHAPE)
    return mean * (shape - 1.0) / shape, shape


def sample_arrival_rates(count: int, mean: float, std: float, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    scale, shape = pareto_parameters(mean, std)
    return scale * (1.0 + rng.pareto(shape, size=count))


# ---------------------------------------------------------------------------
# Requests and utilization
# ---------------------------------------------------------------------------


def generate_request_stream(
    profile: TenantProfile,
    horizon: int,
    grant_history: Iterable[tuple[int, int]] = (),
    rng: np.random.Generator | None = None,
) -> list[SliceRequest]:
    """Requests of one tenant over rounds 1..horizon.

    Exponential gaps with the tenant's rate are accumulated in continuous
    time; round ``t`` covers the interval (t-1, t]. At most one request is
    kept per round. ``grant_history`` holds ``(start_round, duration)`` pairs
    of slices granted to the tenant: arrivals inside rounds
    ``start+1 .. start+duration-1`` are suppressed and the next gap is drawn
    from the slice's expiry.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    windows = sorted(grant_history)
    n_templates = len(profile.template_choice)
    mean_gap = 1.0 / profile.arrival_rate

    out: list[SliceRequest] = []
    time = 0.0
    last_round = 0
    while True:
        time += rng.exponential(mean_gap)
        rnd = max(1, math.ceil(time))
        if rnd > horizon:
            break
        blocked = next((s + d - 1 for s, d in windows if s < rnd <= s + d - 1), None)
        if blocked is not None:
            time = float(blocked)
            continue
        if rnd == last_round:
            continue
        template = int(rng.choice(n_templates, p=profile.template_choice))
        out.append(SliceRequest(profile.id, template, rnd, time))
        last_round = rnd
    return out


def sample_utilization(template: SliceTemplate, dist: UtilizationDist, rng: np.random.Generator) -> int:
    if template.resources <= 0:
        return 0
    return fraction_to_prbs(float(dist.sample_fraction(rng)), template.resources)


@dataclass
class ArrivalTable:
    """Pre-drawn per-(round, tenant) randomness shared by every policy.

    By memorylessness, ceiling-mapped exponential arrivals make "a request
    lands in round t" an independent Bernoulli(1 - exp(-rate)) event for any
    round in which the tenant is eligible, so the table can be drawn once and
    replayed against any grant history. Row ``t-1`` holds round ``t``.
    """

    arrive: np.ndarray  # bool (T, I)
    offset: np.ndarray  # first arrival time inside the round, (0, 1]
    template: np.ndarray  # template index chosen by the request
    fraction: np.ndarray  # utilization fraction of the tenant's slice that round

    @property
    def horizon(self) -> int:
        return self.arrive.shape[0]


def draw_arrival_table(tenants: Sequence[TenantProfile], horizon: int, rng: np.random.Generator) -> ArrivalTable:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = len(tenants)
    arrive = np.empty((horizon, n), dtype=bool)
    offset = np.empty((horizon, n))
    template = np.empty((horizon, n), dtype=np.int64)
    fraction = np.empty((horizon, n))
    for j, tenant in enumerate(tenants):
        p = tenant.request_probability
        arrive[:, j] = rng.random(horizon) < p
        # first arrival inside the round, conditioned on landing there
        u = rng.random(horizon)
        offset[:, j] = np.clip(-np.log1p(-u * p) / tenant.arrival_rate, 1e-12, 1.0)
        template[:, j] = rng.choice(len(tenant.template_choice), size=horizon, p=tenant.template_choice)
        fraction[:, j] = tenant.utilization.sample_fraction(rng, horizon)
    return ArrivalTable(arrive, offset, template, fraction)
