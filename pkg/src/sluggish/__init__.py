"""Optimal stochastic training programs for a sluggish, optimizing agent."""

from .agent import (
    AgentPolicy,
    PeriodicPlan,
    agent_longrun_cost,
    bellman_residual,
    cyclic_best_reply,
    myopic_agent,
    myopic_best_reply,
    solve_agent_mdp,
)
from .evaluate import (
    ExtendedChain,
    MassStats,
    SimulationPath,
    build_extended_chain,
    flow_identity_residual,
    mass_stats,
    simulate,
    total_variation,
)
from .markov import is_unichain, recurrent_classes, stationary_distribution
from .model import (
    InfeasibleMargin,
    InvalidCap,
    ModelError,
    ModelParams,
    MultipleRecurrentClasses,
    NonIntegerRatio,
    TrainerPolicy,
    TwoStateSpec,
)
from .trainer import (
    SearchReport,
    constant_policy,
    cycle_policy,
    feasibility_check,
    matrix_policy,
    prop1_policy,
    prop2_policy,
    search_two_state,
    two_state_policy,
)

__version__ = "0.1.0"
