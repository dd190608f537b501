"""Two-currency account ledger, block validation and block building.

Blocks are all-or-nothing: ``apply_block`` validates every transaction against
a working copy and only returns a new ``Ledger`` if the whole block is valid.
A transaction with a dependency (``delta``) is valid only if the referenced
transaction appears earlier in the same block, which makes metatransaction
pairs atomic by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence

from ..core import (
    ANYONE_CAN_SPEND,
    ZERO_HASH,
    Address,
    AddressKind,
    Currency,
    DecodeError,
    Payload,
    Transaction,
    TxId,
    Writer,
    sha256,
    tx_id,
)
from . import contracts
from .config import MinerProfile, SimConfig
from .errors import (
    ClaimNotByBlockMiner,
    DependencyUnsatisfied,
    DuplicateTransaction,
    EmptyClaim,
    EmptyMinerSet,
    InsufficientBalance,
    InvalidBlock,
    NonceGap,
    NotYetExpired,
    NothingToClaim,
    UnauthorizedSender,
    UnknownChannel,
    ChannelNotOpen,
)
from .merkle import merkle_root


@dataclass(frozen=True)
class Block:
    height: int
    parent: bytes
    miner: Address
    txs: tuple[Transaction, ...]
    merkle_root: bytes
    gas_used: int

    @property
    def hash(self) -> bytes:
        return sha256(
            Writer()
            .raw(b"metatx/block")
            .u64(self.height)
            .raw(self.parent)
            .address(self.miner)
            .raw(self.merkle_root)
            .u64(self.gas_used)
            .u32(len(self.txs))
            .getvalue()
        )

    @property
    def tx_ids(self) -> list[TxId]:
        return [tx_id(t) for t in self.txs]

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "hash": self.hash.hex(),
            "parent": self.parent.hex(),
            "miner": self.miner.id.hex(),
            "merkle_root": self.merkle_root.hex(),
            "gas_used": self.gas_used,
            "txs": [t.to_dict() for t in self.txs],
        }


def _frozen(d: Mapping) -> Mapping:
    return MappingProxyType({k: v for k, v in d.items() if v != 0})


@dataclass(frozen=True)
class Ledger:
    """Immutable snapshot of chain state. Zero balances are not stored."""

    config: SimConfig
    native: Mapping[Address, int] = field(default_factory=dict)
    meta: Mapping[Address, int] = field(default_factory=dict)
    nonces: Mapping[Address, int] = field(default_factory=dict)
    chain: tuple[Block, ...] = ()
    channels: Mapping[bytes, contracts.Channel] = field(default_factory=dict)
    # tx id -> height of the including block; backs the mined(tx) predicate
    mined: Mapping[TxId, int] = field(default_factory=dict)
    claimed_refs: frozenset[TxId] = frozenset()

    @classmethod
    def genesis(
        cls,
        config: SimConfig,
        native: Optional[Mapping[Address, int]] = None,
        meta: Optional[Mapping[Address, int]] = None,
    ) -> "Ledger":
        for book in (native or {}, meta or {}):
            if any(v < 0 for v in book.values()):
                raise ValueError("initial balances must be non-negative")
        return cls(config, _frozen(native or {}), _frozen(meta or {}))

    @property
    def height(self) -> int:
        """Height of the next block."""
        return len(self.chain)

    @property
    def tip_hash(self) -> bytes:
        return self.chain[-1].hash if self.chain else ZERO_HASH

    def balance(self, addr: Address, currency: Currency = Currency.NATIVE) -> int:
        book = self.native if currency is Currency.NATIVE else self.meta
        return book.get(addr, 0)

    def nonce(self, addr: Address) -> int:
        return self.nonces.get(addr, 0)

    def is_mined(self, txid: TxId) -> bool:
        return txid in self.mined

    def supply(self, currency: Currency) -> int:
        book = self.native if currency is Currency.NATIVE else self.meta
        return sum(book.values())

    def channel(self, channel_id: bytes) -> contracts.Channel:
        try:
            return self.channels[channel_id]
        except KeyError:
            raise UnknownChannel(channel_id.hex()) from None


class _State:
    """Mutable working copy used while validating or building one block."""

    def __init__(self, ledger: Ledger, miner: Address) -> None:
        self.ledger = ledger
        self.cfg = ledger.config
        self.height = ledger.height
        self.miner = miner
        self.native = dict(ledger.native)
        self.meta = dict(ledger.meta)
        self.nonces = dict(ledger.nonces)
        self.channels = dict(ledger.channels)
        self.claimed = set(ledger.claimed_refs)
        self.block_ids: set[TxId] = set()

    def snapshot(self) -> tuple:
        return (
            dict(self.native),
            dict(self.meta),
            dict(self.nonces),
            dict(self.channels),
            set(self.claimed),
            set(self.block_ids),
        )

    def restore(self, snap: tuple) -> None:
        (self.native, self.meta, self.nonces, self.channels,
         self.claimed, self.block_ids) = (
            dict(snap[0]), dict(snap[1]), dict(snap[2]), dict(snap[3]),
            set(snap[4]), set(snap[5]),
        )

    def book(self, currency: Currency) -> dict:
        return self.native if currency is Currency.NATIVE else self.meta

    def resolve(self, addr: Address) -> Address:
        return self.miner if addr.kind is AddressKind.CURRENT_MINER else addr

    def debit(self, currency: Currency, addr: Address, amount: int) -> None:
        if amount == 0:
            return
        book = self.book(currency)
        bal = book.get(addr, 0)
        if bal < amount:
            raise InsufficientBalance(
                f"{addr!r} holds {bal} {currency.value}, needs {amount}"
            )
        book[addr] = bal - amount

    def credit(self, currency: Currency, addr: Address, amount: int) -> None:
        if amount:
            book = self.book(currency)
            book[addr] = book.get(addr, 0) + amount

    def move(self, currency: Currency, src: Address, dst: Address, amount: int) -> None:
        self.debit(currency, src, amount)
        self.credit(currency, dst, amount)

    def meta_fee_sink(self, tx: Transaction) -> Address:
        # fees in C* follow the receiver when it is a fee-routing address,
        # otherwise they go straight to the block's miner
        if tx.receiver.kind in (AddressKind.ANYONE_CAN_SPEND, AddressKind.CURRENT_MINER):
            return self.resolve(tx.receiver)
        return self.miner

    # -- transaction application -------------------------------------------------

    def apply_sequence(self, txs: Sequence[Transaction]) -> None:
        """Apply transactions in order; internal reimbursements must follow their call."""
        i = 0
        while i < len(txs):
            tx = txs[i]
            if tx.payload is Payload.RELAYER_REIMBURSE:
                raise InvalidBlock("reimbursement without a preceding relayed call")
            self.apply_tx(tx)
            if tx.payload is Payload.RELAYED_CALL:
                expected = contracts.derive_reimbursement(tx)
                if i + 1 >= len(txs) or txs[i + 1] != expected:
                    raise InvalidBlock("relayed call is not followed by its reimbursement")
                self._apply_reimbursement(expected)
                i += 1
            i += 1

    def _register(self, tx: Transaction) -> TxId:
        txid = tx_id(tx)
        if txid in self.block_ids or txid in self.ledger.mined:
            raise DuplicateTransaction(f"{txid!r} already included")
        if tx.delta is not None and tx.delta not in self.block_ids:
            raise DependencyUnsatisfied(
                f"{txid!r} depends on {tx.delta!r}, which is not earlier in this block"
            )
        return txid

    def _apply_reimbursement(self, tx: Transaction) -> None:
        txid = self._register(tx)
        self.move(Currency.META, tx.sender, tx.receiver, tx.amount)
        self.block_ids.add(txid)

    def apply_tx(self, tx: Transaction) -> None:
        txid = self._register(tx)
        sender = tx.sender
        if sender.kind in (AddressKind.CHANNEL_CONTRACT, AddressKind.CURRENT_MINER):
            raise UnauthorizedSender(f"{sender!r} cannot originate transactions")
        if sender.kind is AddressKind.ANYONE_CAN_SPEND and tx.payload is not Payload.CLAIM_ANYONE_CAN_SPEND:
            raise UnauthorizedSender("the anyone-can-spend address may only be swept")
        expected = self.nonces.get(sender, 0)
        if tx.nonce != expected:
            raise NonceGap(f"{sender!r} nonce {tx.nonce}, expected {expected}")
        self.nonces[sender] = expected + 1

        self.move(Currency.NATIVE, sender, self.miner, tx.fee_native)
        self.move(Currency.META, sender, self.meta_fee_sink(tx), tx.fee_meta)

        try:
            handler = _HANDLERS[tx.payload]
        except KeyError:
            raise InvalidBlock(f"{tx.payload.name} cannot be submitted directly") from None
        try:
            handler(self, tx)
        except DecodeError as exc:
            raise InvalidBlock(f"malformed {tx.payload.name} data: {exc}") from exc
        self.block_ids.add(txid)

    def _transfer_native(self, tx: Transaction) -> None:
        self.move(Currency.NATIVE, tx.sender, self.resolve(tx.receiver), tx.amount)

    def _transfer_meta(self, tx: Transaction) -> None:
        self.move(Currency.META, tx.sender, self.resolve(tx.receiver), tx.amount)

    def _noop(self, tx: Transaction) -> None:
        if tx.amount:
            raise InvalidBlock("a no-op cannot carry an amount")

    def _channel_open(self, tx: Transaction) -> None:
        if tx.receiver.kind is not AddressKind.CHANNEL_CONTRACT:
            raise InvalidBlock("channel open must target a channel contract address")
        miner, opened_at, timeout_at = contracts.decode_open(tx.data)
        cid = tx.receiver.id
        if cid != contracts.derive_channel_id(tx.sender, miner, opened_at, tx.nonce):
            raise InvalidBlock("channel id does not match its opening parameters")
        if cid in self.channels:
            raise InvalidBlock("channel already exists")
        if tx.amount <= 0:
            raise InvalidBlock("channel collateral must be positive")
        if timeout_at < opened_at:
            raise InvalidBlock("channel times out before it opens")
        self.move(Currency.META, tx.sender, tx.receiver, tx.amount)
        self.channels[cid] = contracts.Channel(
            channel_id=cid,
            sender=tx.sender,
            miner=miner,
            collateral=tx.amount,
            sender_balance=tx.amount,
            miner_balance=0,
            seq=0,
            opened_at=opened_at,
            timeout_at=timeout_at,
        )

    def _channel(self, tx: Transaction) -> contracts.Channel:
        if tx.receiver.kind is not AddressKind.CHANNEL_CONTRACT:
            raise InvalidBlock("channel operation must target a channel contract")
        try:
            return self.channels[tx.receiver.id]
        except KeyError:
            raise UnknownChannel(tx.receiver.id.hex()) from None

    def _channel_settle(self, tx: Transaction) -> None:
        ch = self._channel(tx)
        if tx.sender != ch.miner:
            raise UnauthorizedSender("only the channel's miner can settle it")
        agg, proofs, ack = contracts.decode_settlement(tx.data)
        contracts.verify_settlement(
            ch, agg, proofs, ack, self.ledger.chain, self.claimed, self.height
        )
        paid = agg.cumulative_miner_balance
        self.move(Currency.META, ch.address, ch.miner, paid)
        self.move(Currency.META, ch.address, ch.sender, ch.collateral - paid)
        self.channels[ch.channel_id] = contracts.settled(ch, agg)
        self.claimed.update(agg.referenced_tx0_ids)

    def _channel_refund(self, tx: Transaction) -> None:
        ch = self._channel(tx)
        if tx.sender != ch.sender:
            raise UnauthorizedSender("only the channel's sender can reclaim it")
        if ch.phase is not contracts.ChannelPhase.OPEN:
            raise ChannelNotOpen(f"channel is {ch.phase.value}")
        if self.height <= ch.timeout_at:
            raise NotYetExpired(f"height {self.height} <= timeout {ch.timeout_at}")
        self.move(Currency.META, ch.address, ch.sender, ch.collateral)
        self.channels[ch.channel_id] = contracts.refunded(ch)

    def _claim(self, tx: Transaction) -> None:
        if self.resolve(tx.receiver) != self.miner:
            raise ClaimNotByBlockMiner("only the block's miner may sweep anyone-can-spend")
        balance = self.meta.get(ANYONE_CAN_SPEND, 0)
        if balance == 0:
            raise EmptyClaim("anyone-can-spend address is empty")
        self.move(Currency.META, ANYONE_CAN_SPEND, self.miner, balance)

    def _relayed_call(self, tx: Transaction) -> None:
        call = contracts.decode_relayed(tx.data)
        target = self.resolve(tx.receiver)
        if call.action is Payload.TRANSFER_NATIVE:
            self.move(Currency.NATIVE, call.origin, target, tx.amount)
        elif call.action is Payload.TRANSFER_META:
            self.move(Currency.META, call.origin, target, tx.amount)
        elif tx.amount:
            raise InvalidBlock("a relayed no-op cannot carry an amount")


_HANDLERS = {
    Payload.TRANSFER_NATIVE: _State._transfer_native,
    Payload.TRANSFER_META: _State._transfer_meta,
    Payload.NOOP: _State._noop,
    Payload.CHANNEL_OPEN: _State._channel_open,
    Payload.CHANNEL_SETTLE: _State._channel_settle,
    Payload.CHANNEL_REFUND: _State._channel_refund,
    Payload.CLAIM_ANYONE_CAN_SPEND: _State._claim,
    Payload.RELAYED_CALL: _State._relayed_call,
}


def _gas(cfg: SimConfig, n_txs: int) -> int:
    return n_txs * cfg.base_tx_gas


def _seal(ledger: Ledger, miner: Address, txs: Sequence[Transaction]) -> Block:
    txs = tuple(txs)
    return Block(
        height=ledger.height,
        parent=ledger.tip_hash,
        miner=miner,
        txs=txs,
        merkle_root=merkle_root([tx_id(t) for t in txs]),
        gas_used=_gas(ledger.config, len(txs)),
    )


def apply_block(ledger: Ledger, block: Block) -> Ledger:
    """Validate ``block`` against ``ledger`` and return the successor state."""
    cfg = ledger.config
    if block.height != ledger.height:
        raise InvalidBlock(f"block height {block.height}, expected {ledger.height}")
    if block.parent != ledger.tip_hash:
        raise InvalidBlock("block does not extend the current tip")
    if block.merkle_root != merkle_root(block.tx_ids):
        raise InvalidBlock("merkle root does not commit to the block's transactions")
    if block.gas_used != _gas(cfg, len(block.txs)) or block.gas_used > cfg.block_gas_limit:
        raise InvalidBlock(f"gas used {block.gas_used} is inconsistent or over the limit")
    if block.miner.kind is not AddressKind.NORMAL:
        raise InvalidBlock("block miner must be a normal address")

    state = _State(ledger, block.miner)
    state.apply_sequence(block.txs)
    state.credit(Currency.NATIVE, block.miner, cfg.coinbase_reward)

    mined = dict(ledger.mined)
    for t in block.txs:
        mined[tx_id(t)] = block.height
    return Ledger(
        config=cfg,
        native=_frozen(state.native),
        meta=_frozen(state.meta),
        nonces=MappingProxyType(dict(state.nonces)),
        chain=ledger.chain + (block,),
        channels=MappingProxyType(dict(state.channels)),
        mined=MappingProxyType(mined),
        claimed_refs=frozenset(state.claimed),
    )


def elect_miner(profiles: Sequence[MinerProfile], rng: random.Random) -> Address:
    """Sample a miner with probability equal to its hash share; one draw per call."""
    if not profiles:
        raise EmptyMinerSet("no miners to elect from")
    total = sum(p.hash_share for p in profiles)
    if total <= 0:
        raise EmptyMinerSet("all miners have zero hash share")
    u = rng.random() * float(total)
    acc = 0.0
    for p in profiles:
        acc += float(p.hash_share)
        if u < acc:
            return p.miner_id
    # float round-off at the top of the range
    return next(p.miner_id for p in reversed(profiles) if p.hash_share > 0)


def claim_anyone_can_spend(ledger: Ledger, miner: Address) -> Transaction:
    balance = ledger.balance(ANYONE_CAN_SPEND, Currency.META)
    if balance == 0:
        raise NothingToClaim("anyone-can-spend address is empty")
    return Transaction(
        sender=ANYONE_CAN_SPEND,
        receiver=miner,
        amount=balance,
        nonce=ledger.nonce(ANYONE_CAN_SPEND),
        payload=Payload.CLAIM_ANYONE_CAN_SPEND,
    )


# -- block building -------------------------------------------------------------


def _authorized(tx: Transaction, miner: Address, approved: frozenset[TxId]) -> bool:
    """A fee-less transaction the miner still wants: its own, or policy-approved."""
    if tx.sender == miner:
        return True
    if tx.payload is Payload.CLAIM_ANYONE_CAN_SPEND and tx.receiver == miner:
        return True
    return tx_id(tx) in approved


def _closes_bundle(tx: Transaction, miner: Address, approved: frozenset[TxId]) -> bool:
    return tx.fee_native > 0 or tx.fee_meta > 0 or _authorized(tx, miner, approved)


def _acceptable(bundle: Sequence[Transaction], miner: MinerProfile, approved) -> bool:
    if sum(t.fee_native for t in bundle) > 0:
        return True
    if miner.accepts_meta_fees and sum(t.fee_meta for t in bundle) > 0:
        return True
    return all(_authorized(t, miner.miner_id, approved) for t in bundle)


def _expand(txs: Sequence[Transaction]) -> list[Transaction]:
    out = []
    for t in txs:
        out.append(t)
        if t.payload is Payload.RELAYED_CALL:
            try:
                out.append(contracts.derive_reimbursement(t))
            except DecodeError:
                pass
    return out


def build_block(
    mempool: Iterable[Transaction],
    miner: MinerProfile,
    ledger: Ledger,
    cfg: Optional[SimConfig] = None,
    *,
    approved: Iterable[TxId] = (),
    sweep_anyone_can_spend: bool = False,
) -> Block:
    """Greedily pack fee-paying bundles from ``mempool`` into one valid block.

    A bundle is a run of consecutive-nonce transactions of one sender ending at
    the first transaction that pays a fee or is authorized for this miner
    (``approved`` ids, e.g. channel-paid tx0s). Fee-less transactions are
    therefore only mined together with the transaction that pays for them. Bundles are tried in order of native fee, then meta fee;
    one that does not fit or does not apply blocks its sender for this block.
    """
    cfg = cfg or ledger.config
    approved = frozenset(approved)
    me = miner.miner_id
    capacity = cfg.block_gas_limit // cfg.base_tx_gas

    by_sender: dict[Address, dict[int, list[Transaction]]] = {}
    seen: set[TxId] = set()
    for tx in mempool:
        txid = tx_id(tx)
        if txid in seen or ledger.is_mined(txid) or tx.payload is Payload.RELAYER_REIMBURSE:
            continue
        seen.add(txid)
        by_sender.setdefault(tx.sender, {}).setdefault(tx.nonce, []).append(tx)
    for per_nonce in by_sender.values():
        for options in per_nonce.values():
            options.sort(
                key=lambda t: (
                    not _authorized(t, me, approved),
                    -t.fee_native,
                    -t.fee_meta,
                    tx_id(t).digest,
                )
            )

    state = _State(ledger, me)
    selected: list[Transaction] = []
    blocked: set[Address] = set()

    def next_bundle(sender: Address) -> Optional[list[Transaction]]:
        per_nonce = by_sender[sender]
        n = state.nonces.get(sender, 0)
        bundle = []
        while n in per_nonce:
            tx = per_nonce[n][0]
            bundle.append(tx)
            if _closes_bundle(tx, me, approved):
                return bundle
            n += 1
        return None

    while True:
        candidates = []
        for sender in sorted(by_sender):
            if sender in blocked:
                continue
            bundle = next_bundle(sender)
            if bundle is None or not _acceptable(bundle, miner, approved):
                blocked.add(sender)
                continue
            candidates.append(bundle)
        if not candidates:
            break
        candidates.sort(
            key=lambda b: (
                -sum(t.fee_native for t in b),
                -sum(t.fee_meta for t in b) if miner.accepts_meta_fees else 0,
                tx_id(b[0]).digest,
            )
        )
        progressed = False
        for bundle in candidates:
            full = _expand(bundle)
            if len(selected) + len(full) > capacity:
                blocked.add(bundle[0].sender)
                continue
            snap = state.snapshot()
            try:
                state.apply_sequence(full)
            except InvalidBlock:
                state.restore(snap)
                blocked.add(bundle[0].sender)
                continue
            selected.extend(full)
            progressed = True
            break
        if not progressed:
            break

    if sweep_anyone_can_spend and len(selected) < capacity:
        balance = state.meta.get(ANYONE_CAN_SPEND, 0)
        if balance > 0:
            claim = Transaction(
                sender=ANYONE_CAN_SPEND,
                receiver=me,
                amount=balance,
                nonce=state.nonces.get(ANYONE_CAN_SPEND, 0),
                payload=Payload.CLAIM_ANYONE_CAN_SPEND,
            )
            snap = state.snapshot()
            try:
                state.apply_sequence([claim])
                selected.append(claim)
            except InvalidBlock:
                state.restore(snap)

    return _seal(ledger, me, selected)
