"""Double-spending security of constant-fee blockchains as an average-reward MDP."""

from .model import ACTIONS, Mdp, build_mdp, enumerate_states, feasible, outcomes
from .montecarlo import SimulatedRates, simulate_policy
from .params import (
    DEFAULT_FEE_CONST,
    DEFAULT_MAX_LEAD,
    DEFAULT_VD_MAX,
    Fork,
    InvalidParams,
    MdpAction,
    MdpParams,
    MdpState,
    Regime,
)
from .security import SEARCH_TOL, SweepRow, compare_meta_native, double_spend_value, sweep
from .solver import (
    MdpSolution,
    NoConvergence,
    PolicyRates,
    evaluate_policy,
    relative_value_iteration,
    solve_optimal_policy,
    stationary_from,
)

__all__ = [
    "ACTIONS",
    "DEFAULT_FEE_CONST",
    "DEFAULT_MAX_LEAD",
    "DEFAULT_VD_MAX",
    "Fork",
    "InvalidParams",
    "Mdp",
    "MdpAction",
    "MdpParams",
    "MdpSolution",
    "MdpState",
    "NoConvergence",
    "PolicyRates",
    "Regime",
    "SEARCH_TOL",
    "SimulatedRates",
    "SweepRow",
    "build_mdp",
    "compare_meta_native",
    "double_spend_value",
    "enumerate_states",
    "evaluate_policy",
    "feasible",
    "outcomes",
    "relative_value_iteration",
    "simulate_policy",
    "solve_optimal_policy",
    "stationary_from",
    "sweep",
]
