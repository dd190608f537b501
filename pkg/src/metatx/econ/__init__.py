"""Closed-form economics of metatransactions and a subsidy-pool simulation."""

from .channels import (
    breakeven,
    deposit_requirement,
    expected_blocks_to_inclusion,
    inclusion_probability,
    pool_id,
    sample_pool_distribution,
    top_share,
)
from .profiles import PROFILES, Profile, get_profile
from .subsidy import (
    DrainResult,
    RefundKind,
    SubsidyPolicy,
    drain_closed_form,
    refund_for,
    simulate_counter_attack,
    subsidy_step,
)
from .takeover import ETHEREUM_2019, REPORTED_ATTACK51_USD_PER_HOUR, TakeoverParams, takeover_cost
from .throughput import (
    FractionOutOfRange,
    ModelKind,
    ThroughputModel,
    backsolve_avg_tx_gas,
    throughput,
    throughput_drop,
)

__all__ = [
    "DrainResult",
    "ETHEREUM_2019",
    "FractionOutOfRange",
    "ModelKind",
    "PROFILES",
    "Profile",
    "REPORTED_ATTACK51_USD_PER_HOUR",
    "RefundKind",
    "SubsidyPolicy",
    "TakeoverParams",
    "ThroughputModel",
    "backsolve_avg_tx_gas",
    "breakeven",
    "deposit_requirement",
    "drain_closed_form",
    "expected_blocks_to_inclusion",
    "get_profile",
    "inclusion_probability",
    "pool_id",
    "refund_for",
    "sample_pool_distribution",
    "simulate_counter_attack",
    "subsidy_step",
    "takeover_cost",
    "throughput",
    "throughput_drop",
    "top_share",
]
