"""Scenario configuration and construction of tenants and templates."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    SliceTemplate,
    TenantProfile,
    parse_utilization,
    sample_arrival_rates,
)


@dataclass
class ScenarioConfig:
    """Every knob of one simulated system.

    Defaults reproduce the reference parameter table (10 tenants, 10
    templates, 150 PRBs, Pareto(100, 0.1) rates, alpha 0.5, 10000 rounds,
    epsilon-greedy b=10 / d=0.01, ONETS K=6).
    """

    tenant_count: int = 10
    template_count: int = 10
    capacity: int = 150
    pareto_mean: float = 100.0
    pareto_std: float = 0.1
    alpha: float = 0.5
    horizon: int = 10_000
    batch_size: int = 6
    greedy_b: float = 10.0
    greedy_d: float = 0.01
    seed: int = 0
    duration_min: int = 1
    duration_max: int = 10
    utilization: str = "uniform"
    monitoring: bool = True
    random_ties: bool = False
    optimum_max_tenants: int = 5
    optimum_max_horizon: int = 1000
    # Optional explicit overrides; None means "draw from the seed".
    arrival_rates: Optional[list] = None
    templates: Optional[list] = None
    tenant_utilization: Optional[list] = None
    template_choice: Optional[list] = None

    def validate(self) -> None:
        for name in ("tenant_count", "template_count", "horizon", "batch_size", "duration_min"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.capacity <= 0:
            raise ValueError("capacity must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.duration_max < self.duration_min:
            raise ValueError("duration_max must be >= duration_min")
        if self.greedy_b <= 0 or not 0 < self.greedy_d <= 1:
            raise ValueError("epsilon-greedy needs b > 0 and d in (0, 1]")
        if self.pareto_mean <= 0 or self.pareto_std < 0:
            raise ValueError("Pareto mean must be > 0 and std >= 0")
        if self.arrival_rates is not None and len(self.arrival_rates) != self.tenant_count:
            raise ValueError("arrival_rates must list one rate per tenant")
        if self.templates is not None and len(self.templates) != self.template_count:
            raise ValueError("templates must list one [resources, duration] pair per template")
        if self.tenant_utilization is not None and len(self.tenant_utilization) != self.tenant_count:
            raise ValueError("tenant_utilization must list one distribution per tenant")
        if self.template_choice is not None and len(self.template_choice) != self.tenant_count:
            raise ValueError("template_choice must list one probability vector per tenant")
        parse_utilization(self.utilization)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Scenario:
    config: ScenarioConfig
    templates: list = field(default_factory=list)
    tenants: list = field(default_factory=list)

    @property
    def capacity(self) -> int:
        return self.config.capacity

    @property
    def n_tenants(self) -> int:
        return len(self.tenants)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Draw templates and tenant rates from ``config.seed`` (fixed per scenario)."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0xC0FFEE,)))

    if config.templates is not None:
        templates = [SliceTemplate(s, int(r), int(l)) for s, (r, l) in enumerate(config.templates)]
    else:
        res = rng.integers(1, config.capacity + 1, size=config.template_count)
        dur = rng.integers(config.duration_min, config.duration_max + 1, size=config.template_count)
        templates = [SliceTemplate(s, int(r), int(l)) for s, (r, l) in enumerate(zip(res, dur))]
    for t in templates:
        t.validate(config.capacity)

    if config.arrival_rates is not None:
        rates = np.asarray(config.arrival_rates, dtype=float)
    else:
        rates = sample_arrival_rates(config.tenant_count, config.pareto_mean, config.pareto_std, rng)

    tenants = []
    for i in range(config.tenant_count):
        dist = config.utilization
        if config.tenant_utilization is not None:
            dist = config.tenant_utilization[i]
        if config.template_choice is not None:
            choice = np.asarray(config.template_choice[i], dtype=float)
        else:
            choice = np.full(len(templates), 1.0 / len(templates))
        tenants.append(TenantProfile(i, float(rates[i]), choice, parse_utilization(dist)))
    return Scenario(config, templates, tenants)
