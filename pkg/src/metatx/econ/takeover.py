"""Cost of outbidding all native fees versus renting a hash-rate majority."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TakeoverParams:
    daily_fees_native: float
    price_usd: float
    network_hash: float  # H/s
    unit_hash: float  # H/s per rented unit
    unit_price_usd_per_hour: float

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")


# Ethereum, mid-September 2019; rented unit is a K80 GPU instance
ETHEREUM_2019 = TakeoverParams(
    daily_fees_native=1009.4,
    price_usd=197.11,
    network_hash=2.2e12,
    unit_hash=24e6,
    unit_price_usd_per_hour=0.20,
)

# Values printed for the rental attack row; the formula above gives ~18,333/h
REPORTED_ATTACK51_USD_PER_HOUR = 360_114


def takeover_cost(p: TakeoverParams, horizon_hours: float) -> tuple[float, float]:
    """(USD to subsidize every native fee, USD to rent 100% of network hash) over the horizon."""
    if horizon_hours <= 0:
        raise ValueError("horizon must be positive")
    takeover = p.daily_fees_native * p.price_usd * horizon_hours / 24.0
    attack51 = (p.network_hash / p.unit_hash) * p.unit_price_usd_per_hour * horizon_hours
    return takeover, attack51
