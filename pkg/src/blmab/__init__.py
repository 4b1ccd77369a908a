"""Budgeted lock-up multi-armed bandit simulator for network-slice brokering."""

__version__ = "0.1.0"

from .analysis import (
    GreedyBound,
    RegretSeries,
    RewardModel,
    compute_regret,
    egreedy_suboptimal_prob,
    expected_pulls_bound,
    expected_pulls_numeric,
    kl_exponential,
    regret_lower_bound,
)
from .config import PRESETS, dumps_config, load_config, loads_config, preset
from .harness import (
    ExperimentResult,
    SimulationTrace,
    run_experiment,
    run_round,
    run_seed,
    run_simulation,
)
from .model import (
    ArrivalTable,
    LockUp,
    SliceRequest,
    SliceTemplate,
    TenantProfile,
    compute_reward,
    draw_arrival_table,
    generate_request_stream,
    pareto_parameters,
)
from .optimum import hindsight_optimum
from .policies import (
    POLICY_NAMES,
    BrokerState,
    RoundDecision,
    make_policy,
    solve_instantaneous,
    ucb_index,
)
from .scenario import Scenario, ScenarioConfig, build_scenario
