"""Average-reward solution of finite MDPs by relative value iteration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from ..core import MetaTxError
from .model import ACTIONS, Mdp
from .params import MdpAction, MdpState

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200_000
# mixes each transition with a self-loop so periodic chains converge; gains are unchanged
APERIODICITY = 0.9


class NoConvergence(MetaTxError, RuntimeError):
    pass


@dataclass(frozen=True)
class MdpSolution:
    policy: Mapping[MdpState, MdpAction]
    value: float  # optimal gain per step
    residual: float  # final span of successive value differences
    iterations: int
    bias: np.ndarray = field(repr=False, compare=False)
    actions: np.ndarray = field(repr=False, compare=False)  # action index per state
    residuals: tuple[float, ...] = field(default=(), repr=False, compare=False)


def relative_value_iteration(
    P: Sequence[sp.spmatrix],
    r: Sequence[np.ndarray],
    mask: Optional[Sequence[np.ndarray]] = None,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    tau: float = APERIODICITY,
    v0: Optional[np.ndarray] = None,
    tie_tol: float = 1e-9,
) -> tuple[float, np.ndarray, np.ndarray, float, int, list[float]]:
    """Solve max gain; returns (gain, bias, greedy action per state, residual, iterations, history).

    Stops when span(v_{n+1} - v_n) <= tol. Greedy ties within ``tie_tol`` of the
    best go to the lowest action index.
    """
    m = len(P)
    n = P[0].shape[0]
    stacked = sp.vstack([sp.csr_matrix(x) for x in P]).tocsr()
    R = np.stack([np.asarray(x, dtype=float) for x in r])
    allowed = np.ones((m, n), dtype=bool) if mask is None else np.stack(mask)
    if not allowed.any(axis=0).all():
        raise ValueError("every state needs at least one feasible action")
    v = np.zeros(n) if v0 is None else np.array(v0, dtype=float)
    history: list[float] = []
    for it in range(1, max_iter + 1):
        Q = R + tau * (stacked @ v).reshape(m, n) + (1.0 - tau) * v
        Q[~allowed] = -np.inf
        v_new = Q.max(axis=0)
        diff = v_new - v
        span = float(diff.max() - diff.min())
        history.append(span)
        v = v_new - v_new[0]
        if span <= tol:
            gain = float(0.5 * (diff.max() + diff.min()))
            best = Q.max(axis=0)
            scale = max(1.0, float(np.abs(best).max()))
            acts = np.argmax(Q >= best - tie_tol * scale, axis=0)
            return gain, v, acts, span, it, history
    raise NoConvergence(f"span {history[-1]:.3g} after {max_iter} iterations")


def solve_optimal_policy(
    mdp: Mdp,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    v0: Optional[np.ndarray] = None,
) -> MdpSolution:
    gain, bias, acts, residual, iters, history = relative_value_iteration(
        [mdp.P[a] for a in ACTIONS],
        [mdp.reward(a) for a in ACTIONS],
        [mdp.mask[a] for a in ACTIONS],
        tol=tol,
        max_iter=max_iter,
        v0=v0,
    )
    policy = {s: ACTIONS[acts[i]] for i, s in enumerate(mdp.states)}
    return MdpSolution(policy, gain, residual, iters, bias, acts, tuple(history))


# -- exact evaluation of a fixed policy ----------------------------------------------


@dataclass(frozen=True)
class PolicyRates:
    """Long-run per-step rates of a stationary policy started in the start state."""

    adv_blocks: float
    reversals: float
    honest_blocks: float

    def gain(self, fee_const: float, vd: float) -> float:
        return (1.0 + fee_const) * self.adv_blocks + vd * self.reversals

    @property
    def relative_revenue(self) -> float:
        total = self.adv_blocks + self.honest_blocks
        return self.adv_blocks / total if total > 0 else 0.0


def _select(mdp: Mdp, acts: np.ndarray):
    n = mdp.n
    P = sp.csr_matrix((n, n))
    adv, rev, hon = np.zeros(n), np.zeros(n), np.zeros(n)
    for k, a in enumerate(ACTIONS):
        rows = acts == k
        if not rows.any():
            continue
        if not mdp.mask[a][rows].all():
            raise ValueError(f"policy uses infeasible {a.name}")
        D = sp.diags(rows.astype(float))
        P = P + D @ mdp.P[a]
        adv[rows] = mdp.adv_blocks[a][rows]
        rev[rows] = mdp.reversals[a][rows]
        hon[rows] = mdp.honest_blocks[a][rows]
    return P.tocsr(), adv, rev, hon


def stationary_from(P: sp.csr_matrix, start: int) -> np.ndarray:
    """Cesaro-limit state distribution of the chain ``P`` started in ``start``.

    Handles several recurrent classes by weighting each class's stationary
    distribution with its absorption probability.
    """
    n = P.shape[0]
    reach = csgraph.breadth_first_order(P, start, directed=True, return_predecessors=False)
    sub = P[reach][:, reach].tocsr()
    m = len(reach)
    ncomp, labels = csgraph.connected_components(sub, directed=True, connection="strong")
    # a strongly connected component is recurrent iff no edge leaves it
    coo = sub.tocoo()
    leaving = np.zeros(ncomp, dtype=bool)
    leaving[labels[coo.row][labels[coo.row] != labels[coo.col]]] = True
    dist = np.zeros(m)
    transient = np.flatnonzero(leaving[labels])
    for c in np.flatnonzero(~leaving):
        members = np.flatnonzero(labels == c)
        pi = _stationary_class(sub[members][:, members])
        if len(transient) == 0:
            weight = 1.0
        elif labels[0] == c:
            weight = 1.0
        else:
            weight = _absorption(sub, transient, members, 0)
        dist[members] += weight * pi
    out = np.zeros(n)
    out[reach] = dist
    return out


def _stationary_class(Pc: sp.csr_matrix) -> np.ndarray:
    k = Pc.shape[0]
    if k == 1:
        return np.ones(1)
    A = (Pc.T - sp.identity(k)).tolil()
    A[0, :] = np.ones(k)
    b = np.zeros(k)
    b[0] = 1.0
    pi = spsolve(A.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _absorption(sub: sp.csr_matrix, transient: np.ndarray, members: np.ndarray, start: int) -> float:
    pos = {s: i for i, s in enumerate(transient)}
    if start not in pos:
        return 0.0
    Q = sub[transient][:, transient]
    into = np.asarray(sub[transient][:, members].sum(axis=1)).ravel()
    x = spsolve((sp.identity(len(transient)) - Q).tocsc(), into)
    return float(np.atleast_1d(x)[pos[start]])


def evaluate_policy(mdp: Mdp, acts: np.ndarray, start: Optional[int] = None) -> PolicyRates:
    P, adv, rev, hon = _select(mdp, np.asarray(acts))
    d = stationary_from(P, mdp.start if start is None else start)
    return PolicyRates(float(d @ adv), float(d @ rev), float(d @ hon))
