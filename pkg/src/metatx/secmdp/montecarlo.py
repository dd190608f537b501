"""Sampling simulator of the fork race, independent of the MDP tables.

It replays a policy against randomly drawn mining events and tallies
rewards, so long-run averages can be checked against the exact solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numba import njit

from .params import MdpAction, MdpParams, MdpState

_UNSET = -1


def policy_array(policy: Mapping[MdpState, MdpAction], max_lead: int) -> np.ndarray:
    table = np.full((max_lead + 1, max_lead + 1, 3), _UNSET, dtype=np.int64)
    for s, act in policy.items():
        table[s.a, s.h, int(s.fork)] = int(act)
    return table


@njit(cache=True)
def _simulate(table, alpha, gamma, stale, k, steps, seed):
    np.random.seed(seed)
    a = 0
    h = 0
    fork = 0
    adv = 0
    hon = 0
    rev = 0
    for _ in range(steps):
        act = table[a, h, fork]
        if act == _UNSET:
            raise ValueError("policy undefined in a visited state")
        if act == 0:  # adopt
            hon += h
            a = 0
            h = 0
            fork = 0
        elif act == 1:  # override
            adv += h + 1
            if h >= k:
                rev += 1
            a = a - h - 1
            h = 0
            fork = 0
        elif act == 2:  # match
            fork = 2
        u = np.random.random()
        if u < alpha:
            a += 1
            if fork != 2:
                fork = 0
        elif u < alpha + (1.0 - alpha) * (1.0 - stale):
            if fork == 2 and np.random.random() < gamma:
                adv += h
                if h >= k:
                    rev += 1
                a = a - h
                h = 1
            else:
                h += 1
            fork = 1
    return adv, hon, rev


@dataclass(frozen=True)
class SimulatedRates:
    steps: int
    adv_blocks: float
    honest_blocks: float
    reversals: float

    def gain(self, fee_const: float, vd: float) -> float:
        return (1.0 + fee_const) * self.adv_blocks + vd * self.reversals

    @property
    def relative_revenue(self) -> float:
        total = self.adv_blocks + self.honest_blocks
        return self.adv_blocks / total if total > 0 else 0.0


def simulate_policy(
    p: MdpParams, policy: Mapping[MdpState, MdpAction], steps: int, seed: int = 0
) -> SimulatedRates:
    """Per-step reward rates of ``policy`` over ``steps`` sampled mining events from (0, 0)."""
    table = policy_array(policy, p.max_lead)
    adv, hon, rev = _simulate(table, p.alpha, p.gamma, p.stale_rate, p.k, steps, seed)
    return SimulatedRates(steps, adv / steps, hon / steps, rev / steps)


__all__ = ["SimulatedRates", "policy_array", "simulate_policy"]
