"""Double-spending MDP with constant per-block fees.

One step is one mining event. In each state the adversary first acts, then a
block is found: by the adversary with probability ``alpha``, by the honest
network otherwise, and an honest block goes stale with probability
``stale_rate``. Reward is per step, in block rewards, for the adversary only:

* Adopt: give up the private chain; state (0, 0).
* Override (a > h): publish h + 1 blocks, which are credited; if the honest
  chain had reached ``k`` blocks the victim's transaction is reversed and
  ``vd`` is credited too.
* Match (fork relevant, a >= h >= 1): publish h blocks to split the honest
  network; a share ``gamma`` of honest power then extends the adversary's
  branch, crediting h blocks (and ``vd`` if h >= k).
* Wait: keep mining privately.

Every credited block carries ``1 + fee_const`` units. At a lead of
``max_lead`` on either chain the adversary must resolve with Adopt or
Override.

Reward components are stored separately (adversary blocks, reversals,
honest blocks) so ``vd`` and the fee constant can be applied without
rebuilding the transition structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .params import Fork, InvalidParams, MdpAction, MdpParams, MdpState

ACTIONS = tuple(MdpAction)


def enumerate_states(max_lead: int) -> list[MdpState]:
    states = []
    for a in range(max_lead + 1):
        for h in range(max_lead + 1):
            states.append(MdpState(a, h, Fork.IRRELEVANT))
            states.append(MdpState(a, h, Fork.RELEVANT))
            if a >= h >= 1:
                states.append(MdpState(a, h, Fork.ACTIVE))
    return states


def feasible(s: MdpState, action: MdpAction, max_lead: int) -> bool:
    at_edge = s.a >= max_lead or s.h >= max_lead
    if action is MdpAction.ADOPT:
        return True
    if action is MdpAction.OVERRIDE:
        return s.a > s.h
    if at_edge:
        return False
    if action is MdpAction.MATCH:
        return s.fork is Fork.RELEVANT and s.a >= s.h >= 1
    return True


@dataclass(frozen=True)
class Outcome:
    """One branch of a (state, action) pair."""

    prob: float
    nxt: MdpState
    adv_blocks: int = 0
    reversals: int = 0
    honest_blocks: int = 0


def outcomes(s: MdpState, action: MdpAction, p: MdpParams) -> list[Outcome]:
    """Successor distribution of taking ``action`` in ``s`` and then one mining event."""
    adv_blocks = reversals = honest_blocks = 0
    if action is MdpAction.ADOPT:
        a, h, fork = 0, 0, Fork.IRRELEVANT
        honest_blocks = s.h
    elif action is MdpAction.OVERRIDE:
        a, h, fork = s.a - s.h - 1, 0, Fork.IRRELEVANT
        adv_blocks = s.h + 1
        reversals = int(s.h >= p.k)
    elif action is MdpAction.MATCH:
        a, h, fork = s.a, s.h, Fork.ACTIVE
    else:
        a, h, fork = s.a, s.h, s.fork

    base = dict(adv_blocks=adv_blocks, reversals=reversals, honest_blocks=honest_blocks)
    honest = (1.0 - p.alpha) * (1.0 - p.stale_rate)
    stale = (1.0 - p.alpha) * p.stale_rate
    out = [
        Outcome(p.alpha, MdpState(a + 1, h, Fork.ACTIVE if fork is Fork.ACTIVE else Fork.IRRELEVANT), **base)
    ]
    if fork is Fork.ACTIVE:
        out.append(
            Outcome(
                honest * p.gamma,
                MdpState(a - h, 1, Fork.RELEVANT),
                adv_blocks=adv_blocks + h,
                reversals=reversals + int(h >= p.k),
                honest_blocks=honest_blocks,
            )
        )
        out.append(Outcome(honest * (1.0 - p.gamma), MdpState(a, h + 1, Fork.RELEVANT), **base))
    else:
        out.append(Outcome(honest, MdpState(a, h + 1, Fork.RELEVANT), **base))
    out.append(Outcome(stale, MdpState(a, h, fork), **base))
    return [o for o in out if o.prob > 0.0]


@dataclass(frozen=True)
class Mdp:
    """Transition and reward tables; ``P[action]`` is an n-by-n CSR matrix.

    Infeasible (state, action) pairs are self-loops with zero reward and are
    masked out by ``mask[action]``.
    """

    params: MdpParams
    vd: float
    states: tuple[MdpState, ...]
    index: Mapping[MdpState, int]
    P: Mapping[MdpAction, sp.csr_matrix]
    adv_blocks: Mapping[MdpAction, np.ndarray]
    reversals: Mapping[MdpAction, np.ndarray]
    honest_blocks: Mapping[MdpAction, np.ndarray]
    mask: Mapping[MdpAction, np.ndarray]

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def start(self) -> int:
        return self.index[MdpState(0, 0, Fork.IRRELEVANT)]

    def reward(self, action: MdpAction, vd: float | None = None) -> np.ndarray:
        vd = self.vd if vd is None else vd
        return (1.0 + self.params.fee_const) * self.adv_blocks[action] + vd * self.reversals[action]

    def table_bytes(self) -> bytes:
        """Canonical byte image of all tables, for structural comparisons."""
        parts = []
        for act in ACTIONS:
            m = self.P[act]
            parts += [m.indptr.tobytes(), m.indices.tobytes(), m.data.tobytes()]
            parts += [self.reward(act).tobytes(), self.mask[act].tobytes()]
        return b"".join(parts)


def build_mdp(p: MdpParams, vd: float = 0.0) -> Mdp:
    if math.isnan(vd) or vd < 0:
        raise InvalidParams("vd must be a non-negative number")
    states = tuple(enumerate_states(p.max_lead))
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    P, adv, rev, hon, mask = {}, {}, {}, {}, {}
    for act in ACTIONS:
        rows, cols, vals = [], [], []
        r_adv = np.zeros(n)
        r_rev = np.zeros(n)
        r_hon = np.zeros(n)
        ok = np.zeros(n, dtype=bool)
        for i, s in enumerate(states):
            if not feasible(s, act, p.max_lead):
                rows.append(i)
                cols.append(i)
                vals.append(1.0)
                continue
            ok[i] = True
            for o in outcomes(s, act, p):
                try:
                    j = index[o.nxt]
                except KeyError:
                    raise AssertionError(f"{s} --{act.name}--> {o.nxt} leaves the state space") from None
                rows.append(i)
                cols.append(j)
                vals.append(o.prob)
                r_adv[i] += o.prob * o.adv_blocks
                r_rev[i] += o.prob * o.reversals
                r_hon[i] += o.prob * o.honest_blocks
        # duplicates (e.g. a self-loop reached two ways) are summed by the constructor
        P[act] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        P[act].sum_duplicates()
        P[act].sort_indices()
        adv[act], rev[act], hon[act], mask[act] = r_adv, r_rev, r_hon, ok
    return Mdp(p, float(vd), states, index, P, adv, rev, hon, mask)
