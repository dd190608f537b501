import random

from hypothesis import given, settings
from hypothesis import strategies as st

from metatx.chainsim import Ledger, MinerProfile, SimConfig, apply_block, build_block
from metatx.core import Currency, Payload
from metatx.schemes import FeePayer, RelayerRequest, SignedMessage, relayer_submit

from .conftest import addr
from .harness import ChannelReport, atomicity_violations, channel_trial, mine_rounds, random_mempool, try_forced_block

seeds = st.integers(0, 2**63 - 1)


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 4))
def test_chain_never_splits_a_pair(seed, rounds):
    rng = random.Random(seed)
    world = random_mempool(rng)
    ledger = try_forced_block(rng, mine_rounds(rng, world, rounds), world)
    assert atomicity_violations(ledger, world) == []


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_channel_lifecycle(seed):
    report = ChannelReport()
    channel_trial(random.Random(seed), report)
    assert report.problems == []


@settings(max_examples=200, deadline=None)
@given(
    st.integers(0, 50),
    st.integers(1, 40),
    st.integers(0, 30),
    st.sampled_from(list(FeePayer)),
    st.sampled_from([Payload.NOOP, Payload.TRANSFER_META]),
)
def test_relayed_call_all_or_nothing(payer_balance, fee, amount, payer, action):
    sender, target, relay, miner = addr("p-sender"), addr("p-target"), addr("p-relay"), addr("p-miner")
    funded = payer_balance if payer is FeePayer.SENDER else 0
    ledger = Ledger.genesis(
        SimConfig(coinbase_reward=0),
        native={relay: 10},
        meta={sender: funded + (amount if action is Payload.TRANSFER_META else 0),
              target: 0 if payer is FeePayer.SENDER else payer_balance},
    )
    msg = SignedMessage(target, action, amount if action is Payload.TRANSFER_META else 0, fee, payer)
    # bypass the relayer's own funding check by building against a richer view
    rich = Ledger.genesis(ledger.config, dict(ledger.native), {sender: 10**6, target: 10**6})
    tx_c, tx_cs = relayer_submit(RelayerRequest(sender, msg), relay, True, rich, fee_native=1)
    block = build_block([tx_c], MinerProfile(miner, 1.0), ledger)
    after = apply_block(ledger, block)
    if tx_c in block.txs:
        assert block.txs == (tx_c, tx_cs)
        assert after.balance(relay, Currency.META) == fee
    else:
        assert block.txs == ()
        assert after.meta == ledger.meta
        assert after.balance(relay) == 10
    assert after.supply(Currency.META) == ledger.supply(Currency.META)
