"""Minimal double-spend value that makes attacking beat honest mining."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .model import build_mdp
from .params import DEFAULT_VD_MAX, MdpParams, Regime
from .solver import DEFAULT_TOL, evaluate_policy, solve_optimal_policy

SEARCH_TOL = 1e-3


def _threshold(p: MdpParams, vd: float, solver_tol: float, v0=None):
    """Solve at ``vd`` and return (vd above which the optimal policy beats honest mining, bias).

    For a fixed policy the gain is linear in vd, so its break-even vd is
    exact: (baseline - block income) / reversal rate.
    """
    mdp = build_mdp(p, vd)
    sol = solve_optimal_policy(mdp, tol=solver_tol, v0=v0)
    rates = evaluate_policy(mdp, sol.actions)
    if rates.reversals <= 0.0:
        return math.inf, sol.bias
    income = (1.0 + p.fee_const) * rates.adv_blocks
    return max(0.0, (p.honest_baseline - income) / rates.reversals), sol.bias


def double_spend_value(
    p: MdpParams,
    *,
    vd_max: float = DEFAULT_VD_MAX,
    tol: float = SEARCH_TOL,
    solver_tol: float = DEFAULT_TOL,
) -> float:
    """Smallest vd in [0, vd_max] for which some policy strictly out-earns honest mining.

    Returns ``math.inf`` if even ``vd_max`` does not suffice. The bisection
    keeps the bracket [lo, hi] with honest mining optimal at lo; every solve
    also tightens hi to the exact break-even of the policy it found.
    """
    if p.alpha == 0.0:
        return math.inf
    hi, bias = _threshold(p, vd_max, solver_tol)
    if hi >= vd_max:
        return math.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        t, bias = _threshold(p, mid, solver_tol, v0=bias)
        if t < mid:
            hi = t
        else:
            lo = mid
    return hi


def compare_meta_native(
    p: MdpParams,
    *,
    meta_fee_const: Optional[float] = None,
    native_fee_const: Optional[float] = None,
    **kwargs,
) -> float:
    """vd under metatransaction fees minus vd under native fees.

    Both sides default to ``p.fee_const``. Two infinite values count as equal.
    """
    meta = replace(
        p, regime=Regime.META, fee_const=p.fee_const if meta_fee_const is None else meta_fee_const
    )
    native = replace(
        p, regime=Regime.NATIVE, fee_const=p.fee_const if native_fee_const is None else native_fee_const
    )
    vd_meta = double_spend_value(meta, **kwargs)
    vd_native = double_spend_value(native, **kwargs)
    if math.isinf(vd_meta) and math.isinf(vd_native):
        return 0.0
    return vd_meta - vd_native


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    k: int
    fee_const: float
    gamma: float
    stale_rate: float
    vd_native: float
    vd_meta: float

    @property
    def difference(self) -> float:
        if math.isinf(self.vd_meta) and math.isinf(self.vd_native):
            return 0.0
        return self.vd_meta - self.vd_native


def _sweep_point(args: tuple) -> SweepRow:
    alpha, k, fee, gamma, stale, max_lead, vd_max = args
    base = MdpParams(alpha, k, gamma=gamma, stale_rate=stale, fee_const=fee, max_lead=max_lead)
    vd_native = double_spend_value(replace(base, regime=Regime.NATIVE), vd_max=vd_max)
    vd_meta = double_spend_value(replace(base, regime=Regime.META), vd_max=vd_max)
    return SweepRow(alpha, k, fee, gamma, stale, vd_native, vd_meta)


def sweep(
    alphas: Iterable[float],
    ks: Iterable[int],
    fee_consts: Iterable[float] = (0.05,),
    *,
    gamma: float = 0.0,
    stale_rate: float = 0.0,
    max_lead: Optional[int] = None,
    vd_max: float = DEFAULT_VD_MAX,
    workers: int = 1,
) -> list[SweepRow]:
    """Evaluate both regimes on the grid; rows are ordered by (alpha, k, fee) whatever the workers."""
    points = sorted(
        (a, k, f, gamma, stale_rate, max_lead if max_lead is not None else max(20, k + 2), vd_max)
        for a in alphas
        for k in ks
        for f in fee_consts
    )
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, points))
    return [_sweep_point(pt) for pt in points]
