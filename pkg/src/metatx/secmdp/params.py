"""Parameters and state encoding of the double-spending MDP."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..core import MetaTxError

DEFAULT_FEE_CONST = 0.05
DEFAULT_MAX_LEAD = 20
DEFAULT_VD_MAX = 1e4


class InvalidParams(MetaTxError, ValueError):
    pass


class Regime(enum.Enum):
    """Currency the per-block fee is paid in; it changes nothing in the dynamics."""

    NATIVE = "native"
    META = "meta"


class Fork(enum.IntEnum):
    IRRELEVANT = 0  # last block found by the adversary
    RELEVANT = 1  # last block found by honest miners, a match is possible
    ACTIVE = 2  # adversary has matched, honest miners are split


class MdpAction(enum.IntEnum):
    """Listed in tie-breaking order: on equal value the earlier action wins."""

    ADOPT = 0
    OVERRIDE = 1
    MATCH = 2
    WAIT = 3


@dataclass(frozen=True)
class MdpParams:
    alpha: float
    k: int
    gamma: float = 0.0
    stale_rate: float = 0.0
    fee_const: float = DEFAULT_FEE_CONST
    max_lead: int = DEFAULT_MAX_LEAD
    regime: Regime = Regime.NATIVE

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 0.5:
            raise InvalidParams(f"alpha {self.alpha} outside [0, 0.5)")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParams(f"gamma {self.gamma} outside [0, 1]")
        if not 0.0 <= self.stale_rate < 1.0:
            raise InvalidParams(f"stale rate {self.stale_rate} outside [0, 1)")
        if self.k < 1:
            raise InvalidParams("confirmation depth k must be positive")
        if self.fee_const < 0:
            raise InvalidParams("fee constant must be non-negative")
        if self.max_lead < self.k + 2:
            raise InvalidParams(f"max_lead {self.max_lead} must be at least k + 2 = {self.k + 2}")

    @property
    def honest_baseline(self) -> float:
        """Adversary reward per step when it mines honestly."""
        return self.alpha * (1.0 + self.fee_const)


@dataclass(frozen=True, order=True)
class MdpState:
    a: int
    h: int
    fork: Fork
