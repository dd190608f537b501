import math

import numpy as np
import pytest
import scipy.sparse as sp

from metatx.secmdp import (
    ACTIONS,
    SEARCH_TOL,
    Fork,
    InvalidParams,
    MdpAction,
    MdpParams,
    NoConvergence,
    Regime,
    build_mdp,
    compare_meta_native,
    double_spend_value,
    enumerate_states,
    evaluate_policy,
    feasible,
    relative_value_iteration,
    simulate_policy,
    solve_optimal_policy,
    stationary_from,
    sweep,
)

ALPHAS = (0.1, 0.2, 0.3, 0.4)
KS = (1, 3, 6, 12)


# -- construction -----------------------------------------------------------------------


def test_parameter_validation():
    for bad in (
        dict(alpha=0.5, k=1),
        dict(alpha=-0.1, k=1),
        dict(alpha=0.1, k=0),
        dict(alpha=0.1, k=1, gamma=1.5),
        dict(alpha=0.1, k=1, stale_rate=1.0),
        dict(alpha=0.1, k=1, fee_const=-1),
        dict(alpha=0.1, k=10, max_lead=11),
    ):
        with pytest.raises(InvalidParams):
            MdpParams(**bad)
    with pytest.raises(InvalidParams):
        build_mdp(MdpParams(0.1, 1), vd=-1)
    with pytest.raises(InvalidParams):
        build_mdp(MdpParams(0.1, 1), vd=math.nan)


def test_state_space():
    states = enumerate_states(4)
    assert len(states) == len(set(states))
    assert all(0 <= s.a <= 4 and 0 <= s.h <= 4 for s in states)
    assert all(s.a >= s.h >= 1 for s in states if s.fork is Fork.ACTIVE)


def test_edge_forces_resolution():
    L = 5
    for s in enumerate_states(L):
        if s.a == L or s.h == L:
            assert not feasible(s, MdpAction.WAIT, L)
            assert not feasible(s, MdpAction.MATCH, L)
            assert feasible(s, MdpAction.ADOPT, L)


@pytest.mark.parametrize(
    "p",
    [
        MdpParams(0.3, 3),
        MdpParams(0.45, 1, gamma=0.5, stale_rate=0.1, max_lead=8),
        MdpParams(0.0, 2, max_lead=6),
        MdpParams(0.1, 4, gamma=1.0, stale_rate=0.5, max_lead=10),
    ],
)
def test_rows_are_distributions(p):
    mdp = build_mdp(p, vd=3.0)
    for a in ACTIONS:
        P = mdp.P[a]
        assert (P.data >= 0).all()
        assert np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0).max() <= 1e-12


def test_regimes_bit_identical():
    for alpha, k in [(0.1, 1), (0.3, 6)]:
        native = build_mdp(MdpParams(alpha, k, gamma=0.3, regime=Regime.NATIVE), vd=7.5)
        meta = build_mdp(MdpParams(alpha, k, gamma=0.3, regime=Regime.META), vd=7.5)
        assert native.table_bytes() == meta.table_bytes()
    different = build_mdp(MdpParams(0.3, 6, fee_const=0.0), vd=7.5)
    assert different.table_bytes() != native.table_bytes()


# -- solver -------------------------------------------------------------------------------


def test_single_state_single_action():
    gain, bias, acts, residual, _, _ = relative_value_iteration(
        [sp.csr_matrix(np.ones((1, 1)))], [np.array([2.5])]
    )
    assert gain == pytest.approx(2.5, abs=1e-12)
    assert acts.tolist() == [0]


def test_two_state_chain():
    # alternate between rewards 1 and 3 -> average 2; periodic without the self-loop mix
    P = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    gain, *_ = relative_value_iteration([P], [np.array([1.0, 3.0])])
    assert gain == pytest.approx(2.0, abs=1e-6)


def test_tie_breaks_to_lowest_action():
    P = sp.csr_matrix(np.ones((1, 1)))
    _, _, acts, *_ = relative_value_iteration([P, P, P], [np.array([1.0])] * 3)
    assert acts.tolist() == [0]


def test_iteration_cap():
    P = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(NoConvergence):
        relative_value_iteration([P], [np.array([0.0, 1.0])], tau=1.0, max_iter=50)


def test_zero_hash_power():
    p = MdpParams(0.0, 3, max_lead=8)
    mdp = build_mdp(p, vd=100.0)
    sol = solve_optimal_policy(mdp)
    assert sol.value == pytest.approx(0.0, abs=1e-6)
    assert evaluate_policy(mdp, sol.actions).gain(p.fee_const, 100.0) == 0.0
    P = _chain(mdp, sol.actions)
    reach = np.flatnonzero(stationary_from(P, mdp.start) > 0)
    visited = {mdp.states[i] for i in reach}
    assert all(sol.policy[s] is MdpAction.ADOPT for s in visited if feasible(s, MdpAction.ADOPT, 8))
    assert double_spend_value(p) == math.inf


def _chain(mdp, acts):
    P = sp.csr_matrix((mdp.n, mdp.n))
    for k, a in enumerate(ACTIONS):
        P = P + sp.diags((acts == k).astype(float)) @ mdp.P[a]
    return P.tocsr()


def test_solution_deterministic():
    p = MdpParams(0.3, 3, gamma=0.5)
    a = solve_optimal_policy(build_mdp(p, vd=5.0))
    b = solve_optimal_policy(build_mdp(p, vd=5.0))
    assert a.policy == b.policy
    assert a.value == b.value


def test_residual_within_tolerance_and_nonincreasing():
    sol = solve_optimal_policy(build_mdp(MdpParams(0.3, 3), vd=5.0), tol=1e-6)
    assert sol.residual <= 1e-6
    hist = np.array(sol.residuals)
    warm = 10
    assert (np.diff(hist[warm:]) <= 1e-12).all()


def test_exact_evaluation_matches_solver_gain():
    p = MdpParams(0.35, 2, gamma=0.5, stale_rate=0.05)
    mdp = build_mdp(p, vd=4.0)
    sol = solve_optimal_policy(mdp, tol=1e-9)
    rates = evaluate_policy(mdp, sol.actions)
    assert rates.gain(p.fee_const, 4.0) == pytest.approx(sol.value, abs=1e-6)


def test_evaluate_rejects_infeasible_policy():
    mdp = build_mdp(MdpParams(0.3, 1, max_lead=4))
    with pytest.raises(ValueError):
        evaluate_policy(mdp, np.full(mdp.n, int(MdpAction.OVERRIDE)))


def test_honest_policy_rates():
    p = MdpParams(0.25, 2, stale_rate=0.0, max_lead=6)
    mdp = build_mdp(p)
    # adopt everywhere except publish-one-block states: the adversary mines honestly
    acts = np.array(
        [MdpAction.OVERRIDE if (s.a == 1 and s.h == 0) else MdpAction.ADOPT for s in mdp.states], dtype=int
    )
    rates = evaluate_policy(mdp, acts)
    assert rates.relative_revenue == pytest.approx(0.25, abs=1e-9)
    assert rates.gain(p.fee_const, 0.0) == pytest.approx(p.honest_baseline, abs=1e-9)


# -- Monte-Carlo oracle -------------------------------------------------------------------


def test_low_alpha_selfish_mining_unprofitable():
    p = MdpParams(0.1, 1, fee_const=0.0)
    sol = solve_optimal_policy(build_mdp(p, vd=0.0))
    sim = simulate_policy(p, sol.policy, 10_000_000, seed=1)
    assert sim.relative_revenue == pytest.approx(0.1, abs=1e-3)
    assert sol.value == pytest.approx(0.1, abs=1e-6)


@pytest.mark.parametrize(
    "p, vd",
    [
        (MdpParams(0.3, 1, gamma=0.5, stale_rate=0.02), 2.0),
        (MdpParams(0.4, 3, fee_const=0.05), 3.0),
        (MdpParams(0.35, 2, gamma=0.0), 0.0),
    ],
)
def test_solution_value_matches_rollout(p, vd):
    sol = solve_optimal_policy(build_mdp(p, vd))
    sim = simulate_policy(p, sol.policy, 10_000_000, seed=2)
    assert sim.gain(p.fee_const, vd) == pytest.approx(sol.value, rel=0.01)


def test_rollout_seeded():
    p = MdpParams(0.3, 1)
    pol = solve_optimal_policy(build_mdp(p, 1.0)).policy
    assert simulate_policy(p, pol, 10_000, seed=4) == simulate_policy(p, pol, 10_000, seed=4)


# -- double-spend value -------------------------------------------------------------------


def test_vd_is_tight():
    p = MdpParams(0.3, 3)
    vd = double_spend_value(p)
    below = solve_optimal_policy(build_mdp(p, max(0.0, vd - 2 * SEARCH_TOL)))
    above = solve_optimal_policy(build_mdp(p, vd + 2 * SEARCH_TOL))
    assert below.value <= p.honest_baseline + 1e-6
    assert above.value > p.honest_baseline


def test_tiny_alpha_is_infinite():
    assert double_spend_value(MdpParams(0.001, 6)) == math.inf


def test_vd_monotone_in_k():
    for alpha in (0.2, 0.4):
        vds = [double_spend_value(MdpParams(alpha, k)) for k in KS]
        assert all(x <= y for x, y in zip(vds, vds[1:])), vds


def test_vd_monotone_in_alpha():
    for k in (1, 6):
        vds = [double_spend_value(MdpParams(a, k)) for a in ALPHAS]
        assert all(x >= y for x, y in zip(vds, vds[1:])), vds


def test_regime_difference_zero():
    assert abs(compare_meta_native(MdpParams(0.3, 3, gamma=0.2))) <= 2 * SEARCH_TOL


def test_both_infinite_difference_is_zero():
    assert compare_meta_native(MdpParams(0.0, 2)) == 0.0


def test_cheaper_fees_lower_the_bar():
    # with no fee the honest baseline drops by more than the attacker's block income,
    # so the meta side (fee 0) needs a smaller vd than the native side (fee 0.05)
    diff = compare_meta_native(MdpParams(0.3, 3), meta_fee_const=0.0, native_fee_const=0.05)
    assert diff <= 0


def test_sweep_ordering_and_rows():
    rows = sweep([0.4, 0.3], [3, 1], fee_consts=(0.05,))
    assert [(r.alpha, r.k) for r in rows] == [(0.3, 1), (0.3, 3), (0.4, 1), (0.4, 3)]
    for r in rows:
        assert r.vd_native == r.vd_meta and r.difference == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("k", KS)
def test_truncation_sensitivity(alpha, k):
    v20 = double_spend_value(MdpParams(alpha, k, max_lead=20))
    v30 = double_spend_value(MdpParams(alpha, k, max_lead=30))
    if math.isinf(v20) and math.isinf(v30):
        return
    assert abs(v30 - v20) < 1e-2, (v20, v30)
