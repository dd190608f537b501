"""Subsidy pool refunding metatransaction fees, and a counter-attacker draining it.

With a full refund the counter-attacker's transactions are free, so the pool
can be emptied at no cost. A square-root refund leaves ``X - floor(sqrt X)``
with the sender on every fee ``X > 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class RefundKind(enum.Enum):
    IDENTITY = "identity"
    SQRT = "sqrt"


@dataclass(frozen=True)
class SubsidyPolicy:
    kind: RefundKind
    pool_balance: int

    def __post_init__(self) -> None:
        if self.pool_balance < 0:
            raise ValueError("pool balance must be non-negative")


def refund_for(kind: RefundKind, fee: int) -> int:
    return fee if kind is RefundKind.IDENTITY else math.isqrt(fee)


def subsidy_step(policy: SubsidyPolicy, fee: int) -> tuple[int, int, int]:
    """Refund one fee: returns (refund, new pool balance, sender's net cost)."""
    if fee <= 0:
        raise ValueError("fee must be positive")
    refund = min(refund_for(policy.kind, fee), policy.pool_balance)
    return refund, policy.pool_balance - refund, fee - refund


@dataclass(frozen=True)
class DrainResult:
    steps: int
    attacker_cost: int
    pool_trajectory: tuple[int, ...]


def simulate_counter_attack(policy: SubsidyPolicy, fee: int, max_steps: int = 10_000_000) -> DrainResult:
    """Pay ``fee`` repeatedly until the pool is empty, tallying the net cost."""
    pool = policy.pool_balance
    steps = cost = 0
    trajectory = [pool]
    while pool > 0:
        if steps >= max_steps:
            raise RuntimeError("pool not drained within max_steps")
        refund, pool, net = subsidy_step(SubsidyPolicy(policy.kind, pool), fee)
        if refund == 0:
            # floor(sqrt(1)) = 1, so this only happens for an empty pool
            break
        steps += 1
        cost += net
        trajectory.append(pool)
    return DrainResult(steps, cost, tuple(trajectory))


def drain_closed_form(policy: SubsidyPolicy, fee: int) -> tuple[int, int]:
    """(steps, attacker cost) to drain the pool, without simulating."""
    r = refund_for(policy.kind, fee)
    steps = -(-policy.pool_balance // r)
    return steps, steps * fee - policy.pool_balance
