"""Throughput when a fraction of transactions carries metatransaction overhead."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..core import MetaTxError


class FractionOutOfRange(MetaTxError, ValueError):
    pass


class ModelKind(enum.Enum):
    SIZE_BASED = "size"
    GAS_BASED = "gas"


@dataclass(frozen=True)
class ThroughputModel:
    """Capacity model: blocks hold a fixed number of bytes or a fixed amount of gas.

    Each metatransaction adds ``utxo_overhead`` bytes or ``overhead_gas`` gas
    to an average transaction, so a block fits proportionally fewer of them.
    """

    kind: ModelKind
    base_tps: float
    avg_tx_size: float = 0.0
    utxo_overhead: float = 0.0
    avg_tx_gas: float = 0.0
    overhead_gas: float = 0.0

    def __post_init__(self) -> None:
        if self.base_tps <= 0:
            raise ValueError("base_tps must be positive")
        if self.kind is ModelKind.SIZE_BASED:
            if self.avg_tx_size <= 0 or self.utxo_overhead < 0:
                raise ValueError("size-based model needs avg_tx_size > 0 and utxo_overhead >= 0")
        elif self.avg_tx_gas <= 0 or self.overhead_gas < 0:
            raise ValueError("gas-based model needs avg_tx_gas > 0 and overhead_gas >= 0")

    @property
    def unit_cost(self) -> float:
        return self.avg_tx_size if self.kind is ModelKind.SIZE_BASED else self.avg_tx_gas

    @property
    def overhead(self) -> float:
        return self.utxo_overhead if self.kind is ModelKind.SIZE_BASED else self.overhead_gas


def throughput(m: ThroughputModel, fraction: float) -> float:
    """Transactions per second when ``fraction`` of them are metatransactions."""
    if not 0.0 <= fraction <= 1.0:
        raise FractionOutOfRange(f"fraction {fraction} outside [0, 1]")
    if fraction == 0:
        return m.base_tps
    return m.base_tps * m.unit_cost / (m.unit_cost + fraction * m.overhead)


def throughput_drop(m: ThroughputModel, fraction: float = 1.0) -> float:
    """Relative throughput loss in [0, 1)."""
    return 1.0 - throughput(m, fraction) / m.base_tps


def backsolve_avg_tx_gas(overhead_gas: float, drop: float) -> float:
    """Average gas per transaction for which a full switch loses ``drop`` of throughput.

    From ``drop = o / (t + o)``.
    """
    if not 0.0 < drop < 1.0:
        raise ValueError("drop must be in (0, 1)")
    return overhead_gas * (1.0 - drop) / drop
