"""Cost and reach of the payment-channel scheme: break-even, deposits, inclusion odds."""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Collection, Sequence

from ..chainsim.config import MinerProfile
from ..core import Address


def breakeven(open_cost_gas: int, per_tx_overhead_gas: int, num_channels: int) -> int:
    """Fewest metatransactions whose saved per-tx overhead pays for opening the channels."""
    if open_cost_gas <= 0 or per_tx_overhead_gas <= 0 or num_channels <= 0:
        raise ValueError("all arguments must be positive")
    return -(-num_channels * open_cost_gas // per_tx_overhead_gas)


def deposit_requirement(cnt: int, fee: int, n_channels: int) -> int:
    """Collateral locked up front to pre-fund ``cnt`` transactions on each channel."""
    if cnt < 0 or fee < 0 or n_channels < 0:
        raise ValueError("arguments must be non-negative")
    return cnt * fee * n_channels


def inclusion_probability(open_channels: Collection[Address], miners: Sequence[MinerProfile]) -> float:
    """Chance that the next block is mined by someone the sender has a channel with.

    Shares are summed exactly, so the result is the correctly rounded total.
    """
    ids = {m.miner_id for m in miners}
    unknown = set(open_channels) - ids
    if unknown:
        raise ValueError(f"{len(unknown)} channel counterparties are not miners")
    total = sum((Fraction(m.hash_share) for m in miners if m.miner_id in open_channels), Fraction(0))
    return float(min(total, Fraction(1)))


def expected_blocks_to_inclusion(p: float) -> float:
    """Mean of the geometric waiting time; infinite when no channel miner exists."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    return math.inf if p == 0 else 1.0 / p


def pool_id(rank: int) -> Address:
    return Address.named(f"pool-{rank}")


def sample_pool_distribution(n_pools: int, lam: float, rng: random.Random) -> list[MinerProfile]:
    """Pool hash shares drawn as normalized iid Exp(lam) variates, largest first."""
    if n_pools < 1:
        raise ValueError("need at least one pool")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    draws = sorted((rng.expovariate(lam) for _ in range(n_pools)), reverse=True)
    total = math.fsum(draws)
    return [MinerProfile(pool_id(i), d / total) for i, d in enumerate(draws)]


def top_share(miners: Sequence[MinerProfile], n: int) -> float:
    """Cumulative share of the ``n`` largest miners."""
    shares = sorted((float(m.hash_share) for m in miners), reverse=True)
    return math.fsum(shares[:n])
