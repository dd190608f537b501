import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from metatx.chainsim import MinerProfile
from metatx.econ import (
    ETHEREUM_2019,
    PROFILES,
    FractionOutOfRange,
    ModelKind,
    RefundKind,
    SubsidyPolicy,
    TakeoverParams,
    ThroughputModel,
    backsolve_avg_tx_gas,
    breakeven,
    deposit_requirement,
    drain_closed_form,
    expected_blocks_to_inclusion,
    get_profile,
    inclusion_probability,
    pool_id,
    sample_pool_distribution,
    simulate_counter_attack,
    subsidy_step,
    takeover_cost,
    throughput,
    throughput_drop,
    top_share,
)
from metatx.econ.profiles import ETH_AVG_TX_GAS

BTC = ThroughputModel(ModelKind.SIZE_BASED, 4.07, avg_tx_size=1637, utxo_overhead=93.45)


# -- throughput -----------------------------------------------------------------------


def test_bitcoin_full_switch():
    assert throughput(BTC, 1.0) == pytest.approx(3.85, abs=0.01)


def test_zero_fraction_is_exact_base():
    for p in PROFILES.values():
        for scheme in p.overheads:
            m = p.model(scheme)
            assert throughput(m, 0.0) == m.base_tps


def test_ethereum_backsolve_cross_check():
    assert ETH_AVG_TX_GAS == pytest.approx(50_900, rel=0.01)
    eth = get_profile("ethereum")
    assert throughput_drop(eth.model("miner")) == pytest.approx(0.2297, abs=1e-9)
    assert throughput_drop(eth.model("relayer")) == pytest.approx(0.481, abs=0.005)
    assert throughput_drop(eth.model("channel")) == 0.0


def test_backsolve_inverts_drop():
    for o, d in [(100, 0.1), (15188, 0.2297), (47241, 0.9)]:
        m = ThroughputModel(ModelKind.GAS_BASED, 1.0, avg_tx_gas=backsolve_avg_tx_gas(o, d), overhead_gas=o)
        assert throughput_drop(m) == pytest.approx(d, rel=1e-12)


def test_fraction_out_of_range():
    for f in (-0.01, 1.01, math.nan):
        with pytest.raises(FractionOutOfRange):
            throughput(BTC, f)


def test_model_validation():
    with pytest.raises(ValueError):
        ThroughputModel(ModelKind.GAS_BASED, 1.0, avg_tx_gas=0, overhead_gas=1)
    with pytest.raises(ValueError):
        ThroughputModel(ModelKind.SIZE_BASED, 0.0, avg_tx_size=1)


@given(st.floats(0, 1), st.floats(0, 1))
def test_throughput_monotone(f, g):
    lo, hi = sorted((f, g))
    for m in (BTC, get_profile("ethereum").model("relayer")):
        assert throughput(m, hi) <= throughput(m, lo)


def test_throughput_continuous_at_zero():
    assert throughput(BTC, 1e-12) == pytest.approx(BTC.base_tps, rel=1e-12)


def test_unknown_profile_and_scheme():
    with pytest.raises(ValueError):
        get_profile("dogecoin")
    with pytest.raises(ValueError):
        get_profile("bitcoin").model("relayer")


# -- break-even and deposits ------------------------------------------------------------


@pytest.mark.parametrize("k, n", [(1, 7), (10, 61), (20, 122)])
def test_breakeven_measured(k, n):
    p = get_profile("paper-defaults")
    assert breakeven(p.channel_open_gas, p.overheads["miner"], k) == n


def test_breakeven_equal_costs():
    assert breakeven(500, 500, 1) == 1


def test_breakeven_matches_linear_scan():
    for o in range(1, 51):
        for t in range(1, 51):
            for k in range(1, 51):
                n = 0
                while n * t < k * o:
                    n += 1
                assert breakeven(o, t, k) == n


def test_breakeven_rejects_nonpositive():
    with pytest.raises(ValueError):
        breakeven(0, 1, 1)


def test_deposit_requirement():
    assert deposit_requirement(100, 2, 5) == 1000
    assert deposit_requirement(0, 7, 9) == 0
    with pytest.raises(ValueError):
        deposit_requirement(-1, 1, 1)


# -- inclusion ----------------------------------------------------------------------------


def _pools(shares):
    return [MinerProfile(pool_id(i), s) for i, s in enumerate(shares)]


def test_inclusion_top_five():
    shares = [0.25, 0.2, 0.15, 0.1, 0.05] + [0.25 / 65] * 65
    miners = _pools(shares)
    assert inclusion_probability({pool_id(i) for i in range(5)}, miners) == 0.75


def test_inclusion_trivial_cases():
    miners = _pools([0.5, 0.3, 0.2])
    assert inclusion_probability(set(), miners) == 0
    assert inclusion_probability({m.miner_id for m in miners}, miners) == 1.0
    with pytest.raises(ValueError):
        inclusion_probability({pool_id(99)}, miners)


def test_expected_blocks():
    assert expected_blocks_to_inclusion(0.25) == 4
    assert expected_blocks_to_inclusion(0.0) == math.inf


@given(st.integers(1, 40), st.integers(0, 2**32), st.data())
def test_inclusion_additive_and_bounded(n, seed, data):
    miners = sample_pool_distribution(n, 2.4045, random.Random(seed))
    ids = [m.miner_id for m in miners]
    picked = data.draw(st.lists(st.sampled_from(ids), unique=True))
    cut = data.draw(st.integers(0, len(picked)))
    a, b = set(picked[:cut]), set(picked[cut:])
    whole = inclusion_probability(a | b, miners)
    assert whole == pytest.approx(inclusion_probability(a, miners) + inclusion_probability(b, miners), abs=1e-12)
    assert 0 <= whole <= 1


def test_sampler_single_pool():
    [only] = sample_pool_distribution(1, 2.4045, random.Random(0))
    assert only.hash_share == 1.0


@given(st.integers(1, 200), st.floats(0.01, 100), st.integers(0, 2**32))
def test_sampler_normalized_and_sorted(n, lam, seed):
    miners = sample_pool_distribution(n, lam, random.Random(seed))
    shares = [m.hash_share for m in miners]
    assert math.fsum(shares) == pytest.approx(1.0, abs=1e-12)
    assert shares == sorted(shares, reverse=True)
    assert top_share(miners, n) == pytest.approx(1.0, abs=1e-12)


def test_sampler_seeded():
    a = sample_pool_distribution(70, 2.4045, random.Random(5))
    b = sample_pool_distribution(70, 2.4045, random.Random(5))
    assert a == b


# -- takeover -----------------------------------------------------------------------------


def test_takeover_rows():
    for hours, expected, tol in [(1, 8290, 1), (24, 198_963, 1), (168, 1_392_740, 5)]:
        takeover, _ = takeover_cost(ETHEREUM_2019, hours)
        assert takeover == pytest.approx(expected, abs=tol)


def test_attack51_formula():
    _, attack = takeover_cost(ETHEREUM_2019, 1)
    assert attack == pytest.approx(18_333.33, abs=0.01)


def test_takeover_validation():
    with pytest.raises(ValueError):
        TakeoverParams(0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        takeover_cost(ETHEREUM_2019, 0)


# -- subsidy ------------------------------------------------------------------------------


def test_identity_refund_is_free():
    assert subsidy_step(SubsidyPolicy(RefundKind.IDENTITY, 5000), 1000) == (1000, 4000, 0)


def test_sqrt_refund():
    refund, pool, net = subsidy_step(SubsidyPolicy(RefundKind.SQRT, 10**6), 10_000)
    assert (refund, net) == (100, 9900)
    assert pool == 10**6 - 100


def test_refund_capped_by_pool():
    assert subsidy_step(SubsidyPolicy(RefundKind.IDENTITY, 30), 100) == (30, 0, 70)


@given(st.integers(2, 10**9))
def test_sqrt_sender_always_pays(x):
    _, _, net = subsidy_step(SubsidyPolicy(RefundKind.SQRT, 10**12), x)
    assert net > 0


@pytest.mark.parametrize("pool, fee", [(5000, 1000), (999, 7), (1, 1), (12_345, 3)])
def test_identity_drain_free(pool, fee):
    policy = SubsidyPolicy(RefundKind.IDENTITY, pool)
    r = simulate_counter_attack(policy, fee)
    assert (r.steps, r.attacker_cost) == drain_closed_form(policy, fee)
    # only the last, pool-capped refund can leave the attacker a remainder
    assert r.attacker_cost == (-pool) % fee
    assert r.steps == math.ceil(pool / fee)
    assert r.pool_trajectory[-1] == 0


@pytest.mark.parametrize("pool, fee", [(1000, 10_000), (900, 9), (10_000, 2), (1234, 50)])
def test_sqrt_drain_matches_closed_form(pool, fee):
    policy = SubsidyPolicy(RefundKind.SQRT, pool)
    r = simulate_counter_attack(policy, fee)
    assert (r.steps, r.attacker_cost) == drain_closed_form(policy, fee)
    assert r.attacker_cost > 0
    root = math.isqrt(fee)
    if pool % root == 0:
        assert r.attacker_cost == (pool // root) * (fee - root)


def test_sqrt_fee_of_one_is_free():
    r = simulate_counter_attack(SubsidyPolicy(RefundKind.SQRT, 10), 1)
    assert (r.steps, r.attacker_cost) == (10, 0)


def test_empty_pool():
    r = simulate_counter_attack(SubsidyPolicy(RefundKind.SQRT, 0), 5)
    assert (r.steps, r.attacker_cost, r.pool_trajectory) == (0, 0, (0,))
