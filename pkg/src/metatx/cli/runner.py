"""Tick-driven scenario simulation over the chain simulator and the three schemes.

Each tick every sender may act, one miner is elected, it builds and applies a
block, and the senders update their view of their channels from the result.
Everything random flows from one ``random.Random`` seeded by the scenario, so
a run is a pure function of (scenario, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..chainsim import (
    AggregationTx,
    Block,
    Channel,
    ChannelPhase,
    Ledger,
    apply_block,
    build_block,
    elect_miner,
)
from ..core import (
    Address,
    Currency,
    MetaTxError,
    Payload,
    Transaction,
    TxId,
    tx_id,
    validate_metatx,
)
from ..schemes import (
    Action,
    ChannelEvent,
    FeePayer,
    RelayerRequest,
    SignedMessage,
    best_aggregation,
    channel_close_by_miner,
    channel_expire_refund,
    channel_open,
    channel_pay,
    commit_payment,
    miner_metatx_batch,
    miner_metatx_issue,
    miner_policy_channel,
    proofs_for,
    relayer_submit,
)
from .config import ActionKind, Scenario, Scheme, SenderSpec

_PAYLOADS = {
    ActionKind.NOOP: Payload.NOOP,
    ActionKind.TRANSFER_NATIVE: Payload.TRANSFER_NATIVE,
    ActionKind.TRANSFER_META: Payload.TRANSFER_META,
}


@dataclass
class _Sender:
    spec: SenderSpec
    addr: Address
    actions: int = 0
    done: bool = False
    stop_reason: str = ""
    # relayer
    censored: int = 0
    # channel: miner address -> sender-side channel view
    channels: dict[Address, Channel] = field(default_factory=dict)
    opening: set[bytes] = field(default_factory=set)
    opened: bool = False
    outstanding: Optional[Transaction] = None
    pending_aggs: dict[Address, AggregationTx] = field(default_factory=dict)
    issuing_over: bool = False


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    ledger: Ledger
    metrics: list[dict]
    events: list[ChannelEvent]
    summary: dict


class Simulation:
    def __init__(self, scenario: Scenario, seed: Optional[int] = None) -> None:
        self.sc = scenario
        self.seed = scenario.sim.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        native = {scenario.address(n): v[0] for n, v in scenario.accounts.items()}
        meta = {scenario.address(n): v[1] for n, v in scenario.accounts.items()}
        self.ledger = Ledger.genesis(scenario.sim, native, meta)
        self.initial_supply = {c: self.ledger.supply(c) for c in Currency}
        self.mempool: list[Transaction] = []
        self.miners = {m.profile.miner_id: m for m in scenario.miners}
        self.profiles = [m.profile for m in scenario.miners]
        self.names = {scenario.address(n): n for n in scenario.accounts}
        self.names.update({m.profile.miner_id: m.name for m in scenario.miners})
        self.senders = [_Sender(s, scenario.address(s.name)) for s in scenario.senders]
        # aggregations each miner has received, per channel
        self.inbox: dict[Address, list[AggregationTx]] = {a: [] for a in self.miners}
        self.pairs: list[tuple[tuple[TxId, ...], TxId]] = []
        self.relayed: list[TxId] = []
        self.events: list[ChannelEvent] = []
        self.metrics: list[dict] = []
        self.close_pending: set[bytes] = set()

    # -- helpers ---------------------------------------------------------------

    def _next_nonce(self, addr: Address) -> int:
        return self.ledger.nonce(addr) + sum(1 for t in self.mempool if t.sender == addr)

    def _pending(self, addr: Address) -> bool:
        return any(t.sender == addr for t in self.mempool)

    def _action(self, s: _Sender) -> Action:
        return Action(self.sc.address(s.spec.target), _PAYLOADS[s.spec.action], s.spec.amount)

    def _stop(self, s: _Sender, reason: str) -> None:
        s.done = True
        s.stop_reason = reason

    def _budget_left(self, s: _Sender) -> bool:
        return s.spec.max_actions is None or s.actions < s.spec.max_actions

    # -- sender behaviour ------------------------------------------------------------

    def _step_sender(self, s: _Sender) -> None:
        wants = self.rng.random() < s.spec.rate
        if s.done:
            return
        if s.spec.scheme is Scheme.CHANNEL:
            self._step_channel_sender(s, wants)
            return
        if not self._budget_left(s):
            if not self._pending(s.addr):
                self._stop(s, "finished")
            return
        if not wants:
            return
        if s.spec.scheme is Scheme.MINER:
            self._issue_miner(s)
        else:
            self._issue_relayed(s)

    def _issue_miner(self, s: _Sender) -> None:
        if self._pending(s.addr):
            return
        spec = s.spec
        nonce = self._next_nonce(s.addr)
        try:
            if spec.batch == 1:
                m = miner_metatx_issue(
                    s.addr, self._action(s), spec.meta_fee, spec.direct_to_miner, self.ledger, nonce
                )
                if not validate_metatx(m):
                    raise AssertionError(f"issued an invalid metatransaction: {validate_metatx(m)}")
                tx0s, tx1 = [m.tx0], m.tx1
            else:
                tx0s, tx1 = miner_metatx_batch(
                    s.addr, [self._action(s)] * spec.batch, spec.meta_fee, self.ledger,
                    spec.direct_to_miner, nonce,
                )
        except MetaTxError as exc:
            self._stop(s, type(exc).__name__)
            return
        self.mempool.extend(tx0s)
        self.mempool.append(tx1)
        self.pairs.append((tuple(tx_id(t) for t in tx0s), tx_id(tx1)))
        s.actions += 1

    def _issue_relayed(self, s: _Sender) -> None:
        spec = s.spec
        relayer = self.sc.address(spec.relayer)
        if any(t.sender == relayer and t.payload is Payload.RELAYED_CALL for t in self.mempool):
            return
        msg = SignedMessage(
            self.sc.address(spec.target),
            _PAYLOADS[spec.action],
            spec.amount,
            spec.meta_fee,
            FeePayer(spec.fee_payer),
        )
        s.actions += 1
        try:
            out = relayer_submit(
                RelayerRequest(s.addr, msg), relayer, spec.honest, self.ledger,
                spec.native_fee, nonce=self._next_nonce(relayer),
            )
        except MetaTxError as exc:
            self._stop(s, type(exc).__name__)
            return
        if out is None:
            s.censored += 1
            return
        tx_c, _ = out
        self.mempool.append(tx_c)
        self.relayed.append(tx_id(tx_c))

    def _step_channel_sender(self, s: _Sender, wants: bool) -> None:
        spec = s.spec
        height = self.ledger.height
        if not s.opened:
            needed = spec.collateral * len(spec.channel_miners)
            if self.ledger.balance(s.addr, Currency.META) < needed:
                self._stop(s, "InsufficientCollateral")
                return
            if self.ledger.balance(s.addr, Currency.NATIVE) < spec.open_fee * len(spec.channel_miners):
                self._stop(s, "InsufficientNativeFunds")
                return
            for name in spec.channel_miners:
                miner = self.sc.address(name)
                ch, tx = channel_open(
                    s.addr, miner, spec.collateral, self.sc.sim.channel_timeout_blocks, self.ledger,
                    fee_native=spec.open_fee, nonce=self._next_nonce(s.addr),
                )
                s.channels[miner] = ch
                s.opening.add(ch.channel_id)
                self.mempool.append(tx)
            s.opened = True
            return
        if s.opening:
            return

        live = {m: ch for m, ch in s.channels.items()
                if self.ledger.channel(ch.channel_id).phase is ChannelPhase.OPEN}
        # refund whatever the miner let expire
        for miner, ch in sorted(live.items()):
            if height > ch.timeout_at:
                self._drop_outstanding(s)
                if any(t.sender == s.addr and t.payload is Payload.CHANNEL_REFUND
                       and t.receiver == ch.address for t in self.mempool):
                    continue
                self.mempool.append(
                    channel_expire_refund(
                        ch, height, self.ledger,
                        fee_native=1 if self.ledger.balance(s.addr) >= 1 else 0,
                        nonce=self._next_nonce(s.addr),
                    )
                )
        if not live:
            self._stop(s, "channels closed")
            return
        if s.outstanding is not None or s.issuing_over:
            return
        payable = {m: ch for m, ch in live.items()
                   if ch.sender_balance >= spec.meta_fee and height < ch.timeout_at}
        if not self._budget_left(s) or not payable:
            s.issuing_over = True
            return
        if not wants:
            return
        a = self._action(s)
        tx0 = Transaction(
            sender=s.addr, receiver=a.target, amount=a.amount,
            nonce=self._next_nonce(s.addr), payload=a.payload,
        )
        for miner, ch in sorted(payable.items()):
            agg = channel_pay(ch, spec.meta_fee, tx0)
            s.pending_aggs[miner] = agg
            self.inbox[miner].append(agg)
        s.outstanding = tx0
        s.actions += 1
        self.mempool.append(tx0)

    def _drop_outstanding(self, s: _Sender) -> None:
        if s.outstanding is not None:
            txid = tx_id(s.outstanding)
            self.mempool = [t for t in self.mempool if tx_id(t) != txid]
            s.outstanding = None
            s.pending_aggs.clear()
            s.issuing_over = True

    # -- miner behaviour ------------------------------------------------------------

    def _miner_closes(self, miner: Address) -> None:
        height = self.ledger.height
        by_sender = {s.addr: s for s in self.senders}
        for cid in sorted(self.ledger.channels):
            ch = self.ledger.channels[cid]
            if ch.miner != miner or ch.phase is not ChannelPhase.OPEN or cid in self.close_pending:
                continue
            s = by_sender.get(ch.sender)
            finished = s is None or (s.issuing_over and s.outstanding is None)
            if not (finished or height == ch.timeout_at):
                continue
            received = [a for a in self.inbox[miner] if a.channel_id == cid]
            agg = best_aggregation(received, miner, self.ledger)
            if agg is None or height > ch.timeout_at:
                continue
            ack = s.spec.close_with_ack if s is not None else False
            tx = channel_close_by_miner(
                ch, agg, self.ledger,
                proofs=None if ack else proofs_for(self.ledger, agg),
                sender_ack=ack,
                nonce=self._next_nonce(miner),
            )
            self.mempool.append(tx)
            self.close_pending.add(cid)

    # -- block bookkeeping ------------------------------------------------------------

    def _after_block(self, block: Block) -> None:
        height = block.height
        included = {tx_id(t) for t in block.txs}
        self.mempool = [t for t in self.mempool if tx_id(t) not in included]
        for s in self.senders:
            if s.spec.scheme is not Scheme.CHANNEL:
                continue
            for ch in s.channels.values():
                if ch.channel_id in s.opening and ch.channel_id in self.ledger.channels:
                    s.opening.discard(ch.channel_id)
                    self.events.append(ChannelEvent(height, "open", ch.channel_id, ch.sender, ch.miner, ch.collateral, 0))
            if s.outstanding is not None and tx_id(s.outstanding) in included:
                agg = s.pending_aggs.get(block.miner)
                if agg is None:
                    raise AssertionError("a channel tx0 was mined by a miner the sender did not pay")
                ch = commit_payment(s.channels[block.miner], agg)
                s.channels[block.miner] = ch
                self.events.append(ChannelEvent(height, "pay", ch.channel_id, ch.sender, ch.miner, s.spec.meta_fee, ch.seq))
                s.outstanding = None
                s.pending_aggs.clear()
        for t in block.txs:
            if t.payload is Payload.CHANNEL_SETTLE:
                ch = self.ledger.channel(t.receiver.id)
                self.close_pending.discard(ch.channel_id)
                self.events.append(ChannelEvent(height, "close", ch.channel_id, ch.sender, ch.miner, ch.miner_balance, ch.seq))
            elif t.payload is Payload.CHANNEL_REFUND:
                ch = self.ledger.channel(t.receiver.id)
                self.events.append(ChannelEvent(height, "refund", ch.channel_id, ch.sender, ch.miner, ch.collateral, ch.seq))

    def _record(self, block: Block, events_before: int) -> None:
        txs = block.txs
        self.metrics.append(
            {
                "height": block.height,
                "miner": self.names.get(block.miner, block.miner.short()),
                "txs": len(txs),
                "gas_used": block.gas_used,
                "native_fees": sum(t.fee_native for t in txs),
                "meta_fees": sum(t.fee_meta for t in txs),
                "meta_fee_txs": sum(1 for t in txs if t.fee_meta > 0),
                "relayer_reimbursed": sum(t.amount for t in txs if t.payload is Payload.RELAYER_REIMBURSE),
                "channel_events": len(self.events) - events_before,
                "mempool": len(self.mempool),
            }
        )

    # -- main loop ----------------------------------------------------------------

    def run(self) -> RunResult:
        for _ in range(self.sc.ticks):
            for s in self.senders:
                self._step_sender(s)
            miner = elect_miner(self.profiles, self.rng)
            spec = self.miners[miner]
            self._miner_closes(miner)
            approved = [
                tx_id(t) for t in miner_policy_channel(
                    self.mempool, self.ledger.channels, self.inbox[miner], miner, self.ledger.height
                )
            ]
            block = build_block(
                self.mempool, spec.profile, self.ledger,
                approved=approved, sweep_anyone_can_spend=spec.sweep_anyone_can_spend,
            )
            before = self.ledger
            self.ledger = apply_block(self.ledger, block)
            self._check_conservation(before)
            n_events = len(self.events)
            self._after_block(block)
            self._record(block, n_events)
        return RunResult(self.sc, self.seed, self.ledger, self.metrics, self.events, self._summary())

    def _check_conservation(self, before: Ledger) -> None:
        mint = self.sc.sim.coinbase_reward
        if self.ledger.supply(Currency.NATIVE) != before.supply(Currency.NATIVE) + mint:
            raise AssertionError("native supply changed by more than the coinbase")
        if self.ledger.supply(Currency.META) != before.supply(Currency.META):
            raise AssertionError("meta supply changed")

    def _summary(self) -> dict:
        L = self.ledger
        mined_pairs = atomic = 0
        for tx0_ids, tx1_id in self.pairs:
            if not L.is_mined(tx1_id):
                continue
            mined_pairs += 1
            h = L.mined[tx1_id]
            if all(L.mined.get(i) == h for i in tx0_ids):
                atomic += 1
        relayed_mined = sum(1 for i in self.relayed if L.is_mined(i))
        channels = [L.channel(ch.channel_id) for s in self.senders for ch in s.channels.values()
                    if ch.channel_id in L.channels]
        settled = [c for c in channels if c.phase is ChannelPhase.CLOSED_BY_MINER]
        return {
            "scenario": self.sc.name,
            "seed": self.seed,
            "blocks": L.height,
            "transactions": sum(len(b.txs) for b in L.chain),
            "metatx": {
                "issued": len(self.pairs),
                "mined": mined_pairs,
                "same_block": atomic,
                "atomicity_pct": 100.0 if mined_pairs == 0 else 100.0 * atomic / mined_pairs,
            },
            "relayer": {
                "submitted": len(self.relayed),
                "mined": relayed_mined,
                "censored": sum(s.censored for s in self.senders),
            },
            "channels": {
                "opened": len(channels),
                "settled": len(settled),
                "refunded": sum(1 for c in channels if c.phase is ChannelPhase.REFUNDED_AFTER_TIMEOUT),
                "still_open": sum(1 for c in channels if c.phase is ChannelPhase.OPEN),
                "paid_to_miners": sum(c.miner_balance for c in settled),
                "payments_committed": sum(ch.seq for s in self.senders for ch in s.channels.values()),
            },
            "supply": {
                "native": L.supply(Currency.NATIVE),
                "meta": L.supply(Currency.META),
                "native_minted": L.supply(Currency.NATIVE) - self.initial_supply[Currency.NATIVE],
            },
            "senders": {
                s.spec.name: {"actions": s.actions, "stopped": s.stop_reason or None}
                for s in self.senders
            },
            "balances": {
                name: {
                    "native": L.balance(addr, Currency.NATIVE),
                    "meta": L.balance(addr, Currency.META),
                }
                for addr, name in sorted(self.names.items(), key=lambda kv: kv[1])
            },
        }


def run_simulation(scenario: Scenario, seed: Optional[int] = None) -> RunResult:
    return Simulation(scenario, seed).run()
