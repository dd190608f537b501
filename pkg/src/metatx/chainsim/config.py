from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from ..core import Address

Share = Union[float, Fraction]


@dataclass(frozen=True)
class SimConfig:
    block_gas_limit: int = 210_000
    base_tx_gas: int = 21_000
    seed: int = 0
    channel_timeout_blocks: int = 100
    # minted to the block's miner in native units, fees ride on top
    coinbase_reward: int = 1

    def __post_init__(self) -> None:
        if not self.block_gas_limit >= self.base_tx_gas > 0:
            raise ValueError("need block_gas_limit >= base_tx_gas > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.channel_timeout_blocks < 0 or self.coinbase_reward < 0:
            raise ValueError("timeout and coinbase reward must be non-negative")

    @property
    def block_capacity(self) -> int:
        """Number of transactions that fit in one block."""
        return self.block_gas_limit // self.base_tx_gas


@dataclass(frozen=True)
class MinerProfile:
    miner_id: Address
    hash_share: Share
    accepts_meta_fees: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.hash_share <= 1:
            raise ValueError(f"hash share {self.hash_share} outside [0, 1]")


SHARE_TOLERANCE = 1e-9


def check_shares(profiles: list[MinerProfile]) -> None:
    total = sum(p.hash_share for p in profiles)
    if abs(total - 1) > SHARE_TOLERANCE:
        raise ValueError(f"miner hash shares sum to {float(total)}, expected 1")
