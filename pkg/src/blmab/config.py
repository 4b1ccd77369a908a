"""Scenario files and figure presets.

A scenario file is YAML with five optional sections. Every key is optional
and falls back to the reference parameter table::

    system:
      capacity: 150          # PRBs (C)
      horizon: 10000         # rounds (T)
      seed: 0                # scenario seed: templates and arrival rates
    tenants:
      count: 10
      pareto_mean: 100.0     # mean arrival rate per round
      pareto_std: 0.1
      utilization: uniform   # uniform | full | beta:a,b
      arrival_rates: null    # explicit per-tenant rates override the Pareto draw
      utilization_per_tenant: null
      template_choice: null  # per-tenant probability vectors over templates
    templates:
      count: 10
      duration_min: 1
      duration_max: 10
      list: null             # explicit [[resources, duration], ...]
    reward:
      alpha: 0.5
      monitoring: true
    policy:
      batch_size: 6          # ONETS K
      greedy_b: 10.0
      greedy_d: 0.01
      random_ties: false
    optimum:
      max_tenants: 5
      max_horizon: 1000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import yaml

from .scenario import ScenarioConfig

# (section, key in file) -> ScenarioConfig field
SCHEMA = {
    ("system", "capacity"): "capacity",
    ("system", "horizon"): "horizon",
    ("system", "seed"): "seed",
    ("tenants", "count"): "tenant_count",
    ("tenants", "pareto_mean"): "pareto_mean",
    ("tenants", "pareto_std"): "pareto_std",
    ("tenants", "utilization"): "utilization",
    ("tenants", "arrival_rates"): "arrival_rates",
    ("tenants", "utilization_per_tenant"): "tenant_utilization",
    ("tenants", "template_choice"): "template_choice",
    ("templates", "count"): "template_count",
    ("templates", "duration_min"): "duration_min",
    ("templates", "duration_max"): "duration_max",
    ("templates", "list"): "templates",
    ("reward", "alpha"): "alpha",
    ("reward", "monitoring"): "monitoring",
    ("policy", "batch_size"): "batch_size",
    ("policy", "greedy_b"): "greedy_b",
    ("policy", "greedy_d"): "greedy_d",
    ("policy", "random_ties"): "random_ties",
    ("optimum", "max_tenants"): "optimum_max_tenants",
    ("optimum", "max_horizon"): "optimum_max_horizon",
}
SECTIONS = tuple(dict.fromkeys(sec for sec, _ in SCHEMA))


class ConfigError(ValueError):
    pass


def config_from_mapping(data: Optional[dict]) -> ScenarioConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("scenario file must be a mapping of sections")
    values = {}
    for section, body in data.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r}; expected one of {', '.join(SECTIONS)}")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in body.items():
            name = SCHEMA.get((section, key))
            if name is None:
                raise ConfigError(f"unknown key {section}.{key}")
            values[name] = value
    cfg = ScenarioConfig(**values)
    try:
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def config_to_mapping(cfg: ScenarioConfig) -> dict:
    out = {sec: {} for sec in SECTIONS}
    for (section, key), name in SCHEMA.items():
        out[section][key] = getattr(cfg, name)
    return out


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return config_from_mapping(data)


def dumps_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_mapping(cfg), sort_keys=False)


def load_config(path) -> ScenarioConfig:
    return loads_config(Path(path).read_text())


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

ONLINE = ["onets", "eucb", "egreedy", "fcfs", "random"]


@dataclass
class Preset:
    name: str
    config: ScenarioConfig
    policies: List[str]
    sweep: Optional[Tuple[str, Sequence]] = None  # (config field, values)
    description: str = ""
    extras: List[str] = field(default_factory=list)

    def configs(self) -> List[Tuple[Optional[object], ScenarioConfig]]:
        if self.sweep is None:
            return [(None, self.config)]
        name, values = self.sweep
        return [(v, self.config.replace(**{name: v})) for v in values]


def preset(name: str) -> Preset:
    table1 = ScenarioConfig()
    key = name.strip().lower()
    if key == "fig2":
        return Preset(
            key,
            table1.replace(tenant_count=5, batch_size=3, horizon=1000),
            ["optimum", "eucb", "onets", "egreedy"],
            description="5 tenants, K=3, T=1000: online policies against the hindsight optimum",
        )
    if key == "fig3":
        return Preset(
            key, table1, list(ONLINE),
            description="reference table scenario: reward/utilization CDFs, selection ratios with the closed-form overlay",
            extras=["selection_overlay"],
        )
    if key == "fig4":
        return Preset(
            key, table1, list(ONLINE), ("tenant_count", [5, 10, 15]),
            description="sweep of the number of tenants",
        )
    if key == "fig5":
        return Preset(
            key, table1, list(ONLINE), ("alpha", [0.1, 0.5, 0.9]),
            description="per-round reward against utilization for three alpha values",
            extras=["scatter"],
        )
    if key == "fig6":
        return Preset(
            key, table1, ["onets"], ("alpha", [round(0.1 * k, 1) for k in range(1, 11)]),
            description="alpha sweep: multiplexing gain against violation rate",
        )
    raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")


PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6")
