"""Named parameter sets for the calculators.

Gas figures are measurements of one EVM version, so they live here as data
rather than inside the formulas. ``ethereum`` and ``paper-defaults`` differ
only in the channel opening cost: 250,000 gas for a generic contract versus
92,392 gas for the measured deployment, the latter being what the break-even
counts 7 / 61 / 122 follow from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

from .throughput import ModelKind, ThroughputModel, backsolve_avg_tx_gas

MINER_OVERHEAD_GAS = 15188
RELAYER_OVERHEAD_GAS = 47241
ETH_MINER_DROP = 0.2297
# the average gas per transaction is not published; recover it from the miner row
ETH_AVG_TX_GAS = backsolve_avg_tx_gas(MINER_OVERHEAD_GAS, ETH_MINER_DROP)

TEZOS_BLOCK_GAS_LIMIT = 4_000_000
TEZOS_TPS = 6.67
TEZOS_BLOCK_SECONDS = 60
# full blocks at the observed rate
TEZOS_AVG_TX_GAS = TEZOS_BLOCK_GAS_LIMIT / (TEZOS_TPS * TEZOS_BLOCK_SECONDS)


@dataclass(frozen=True)
class Profile:
    name: str
    base_tps: float
    kind: ModelKind
    # scheme name -> per-metatransaction overhead (bytes or gas)
    overheads: Mapping[str, float]
    avg_tx_size: float = 0.0
    avg_tx_gas: float = 0.0
    block_gas_limit: Optional[int] = None
    base_tx_gas: Optional[int] = None
    channel_open_gas: Optional[int] = None
    channel_close_gas: Optional[int] = None
    notes: str = field(default="", compare=False)

    def model(self, scheme: str = "miner") -> ThroughputModel:
        try:
            overhead = self.overheads[scheme]
        except KeyError:
            raise ValueError(
                f"profile {self.name!r} has no {scheme!r} scheme; choose from {sorted(self.overheads)}"
            ) from None
        if self.kind is ModelKind.SIZE_BASED:
            return ThroughputModel(self.kind, self.base_tps, avg_tx_size=self.avg_tx_size, utxo_overhead=overhead)
        return ThroughputModel(self.kind, self.base_tps, avg_tx_gas=self.avg_tx_gas, overhead_gas=overhead)


def _eth(name: str, open_gas: int, notes: str) -> Profile:
    return Profile(
        name=name,
        base_tps=11.62,
        kind=ModelKind.GAS_BASED,
        overheads=MappingProxyType({"miner": MINER_OVERHEAD_GAS, "relayer": RELAYER_OVERHEAD_GAS, "channel": 0}),
        avg_tx_gas=ETH_AVG_TX_GAS,
        block_gas_limit=8_003_131,
        base_tx_gas=21000,
        channel_open_gas=open_gas,
        channel_close_gas=850_000,
        notes=notes,
    )


PROFILES: Mapping[str, Profile] = MappingProxyType(
    {
        "bitcoin": Profile(
            name="bitcoin",
            base_tps=4.07,
            kind=ModelKind.SIZE_BASED,
            overheads=MappingProxyType({"miner": 93.45}),
            avg_tx_size=1637,
            notes="one extra 0-value output per metatransaction",
        ),
        "ethereum": _eth("ethereum", 250_000, "generic channel contract opening cost"),
        "tezos": Profile(
            name="tezos",
            base_tps=TEZOS_TPS,
            kind=ModelKind.GAS_BASED,
            overheads=MappingProxyType({"miner": 10000}),
            avg_tx_gas=TEZOS_AVG_TX_GAS,
            block_gas_limit=TEZOS_BLOCK_GAS_LIMIT,
            base_tx_gas=10000,
            notes="anyone-can-spend receiver; average gas assumes full 60 s blocks",
        ),
        "paper-defaults": _eth("paper-defaults", 92_392, "measured channel opening cost"),
    }
)


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
