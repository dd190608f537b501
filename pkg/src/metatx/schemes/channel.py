"""Payment-channel-based metatransactions over unidirectional channels.

Lifecycle: the sender opens a channel to a miner by locking collateral in C*.
For every fee-less ``tx0`` the sender signs an aggregation transaction raising
the miner's cumulative balance. The miner only mines ``tx0``s it holds a paying
aggregation for, and settles by publishing the latest aggregation it can back
with inclusion proofs (or the sender's acknowledgement). If the miner has not
settled by the timeout height, the sender takes the collateral back.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from ..chainsim.contracts import (
    AggregationTx,
    Channel,
    ChannelPhase,
    InclusionProof,
    derive_channel_id,
    encode_open,
    encode_settlement,
    verify_settlement,
)
from ..chainsim.errors import ChannelNotOpen, NotYetExpired, ProofInvalid
from ..chainsim.ledger import Ledger
from ..chainsim.merkle import merkle_prove
from ..core import Address, Currency, MetaTxError, Payload, Transaction, TxId, channel_address, tx_id


class InsufficientCollateral(MetaTxError):
    pass


class ChannelDepleted(MetaTxError):
    pass


class InvalidChannelFee(MetaTxError, ValueError):
    pass


@dataclass(frozen=True)
class ChannelEvent:
    """Structured record of a channel lifecycle step, for CSV export."""

    height: int
    kind: str  # open | pay | close | refund
    channel_id: bytes
    sender: Address
    miner: Address
    amount: int
    seq: int

    def to_row(self) -> dict:
        return {
            "height": self.height,
            "event": self.kind,
            "channel_id": self.channel_id.hex(),
            "sender": self.sender.id.hex(),
            "miner": self.miner.id.hex(),
            "amount": self.amount,
            "seq": self.seq,
        }


def channel_open(
    sender: Address,
    miner: Address,
    collateral: int,
    timeout_blocks: int,
    ledger: Ledger,
    *,
    fee_native: int = 0,
    fee_meta: int = 0,
    nonce: Optional[int] = None,
) -> tuple[Channel, Transaction]:
    if collateral <= 0:
        raise InsufficientCollateral("channel collateral must be positive")
    held = ledger.balance(sender, Currency.META)
    if held < collateral + fee_meta:
        raise InsufficientCollateral(f"sender holds {held} in C*, needs {collateral + fee_meta}")
    n = ledger.nonce(sender) if nonce is None else nonce
    opened_at = ledger.height
    timeout_at = opened_at + timeout_blocks
    cid = derive_channel_id(sender, miner, opened_at, n)
    tx = Transaction(
        sender=sender,
        receiver=channel_address(cid),
        amount=collateral,
        fee_native=fee_native,
        fee_meta=fee_meta,
        nonce=n,
        payload=Payload.CHANNEL_OPEN,
        data=encode_open(miner, opened_at, timeout_at),
    )
    ch = Channel(
        channel_id=cid,
        sender=sender,
        miner=miner,
        collateral=collateral,
        sender_balance=collateral,
        miner_balance=0,
        seq=0,
        opened_at=opened_at,
        timeout_at=timeout_at,
    )
    return ch, tx


def channel_pay(ch: Channel, fee: int, tx0: Transaction) -> AggregationTx:
    """Sign the next aggregation paying ``fee`` for ``tx0``.

    The payment only becomes valid once ``tx0`` is mined by the channel's
    miner; the sender then advances its view with ``commit_payment``.
    """
    if ch.phase is not ChannelPhase.OPEN:
        raise ChannelNotOpen(f"channel is {ch.phase.value}")
    if fee <= 0:
        raise InvalidChannelFee("fee must be positive")
    if ch.sender_balance < fee:
        raise ChannelDepleted(f"{ch.sender_balance} left, fee is {fee}")
    return AggregationTx(
        channel_id=ch.channel_id,
        index=ch.seq + 1,
        cumulative_miner_balance=ch.miner_balance + fee,
        referenced_tx0_ids=ch.tx0_ids + (tx_id(tx0),),
    )


def commit_payment(ch: Channel, agg: AggregationTx) -> Channel:
    if agg.channel_id != ch.channel_id or agg.index != ch.seq + 1:
        raise ValueError("aggregation does not extend this channel state")
    return replace(
        ch,
        seq=agg.index,
        miner_balance=agg.cumulative_miner_balance,
        sender_balance=ch.collateral - agg.cumulative_miner_balance,
        tx0_ids=agg.referenced_tx0_ids,
    )


def miner_policy_channel(
    mempool: Iterable[Transaction],
    channels: Mapping[bytes, Channel],
    pending_aggs: Iterable[AggregationTx],
    miner: Address,
    height: Optional[int] = None,
) -> list[Transaction]:
    """Fee-less transactions this miner is paid for through an open channel.

    With ``height`` given, channels that would already be past their timeout
    are ignored since the payment could no longer be settled.
    """
    paid: set[TxId] = set()
    for agg in pending_aggs:
        ch = channels.get(agg.channel_id)
        if ch is None or ch.miner != miner or ch.phase is not ChannelPhase.OPEN:
            continue
        if height is not None and height > ch.timeout_at:
            continue
        if not agg.sender_signature_present:
            continue
        if not 0 < agg.cumulative_miner_balance <= ch.collateral:
            continue
        paid.update(agg.referenced_tx0_ids)
    return [
        tx for tx in mempool
        if tx.fee_native == 0 and tx.fee_meta == 0 and tx_id(tx) in paid
    ]


def prove_inclusion(ledger: Ledger, txid: TxId) -> InclusionProof:
    try:
        height = ledger.mined[txid]
    except KeyError:
        raise ProofInvalid(f"{txid!r} is not mined") from None
    ids = ledger.chain[height].tx_ids
    return InclusionProof(height, merkle_prove(ids, ids.index(txid)))


def proofs_for(ledger: Ledger, agg: AggregationTx) -> list[InclusionProof]:
    return [prove_inclusion(ledger, r) for r in agg.referenced_tx0_ids]


def valid_for_miner(agg: AggregationTx, miner: Address, ledger: Ledger) -> bool:
    """True if every tx0 referenced by ``agg`` is in a block mined by ``miner``."""
    for ref in agg.referenced_tx0_ids:
        height = ledger.mined.get(ref)
        if height is None or ledger.chain[height].miner != miner or ref in ledger.claimed_refs:
            return False
    return True


def best_aggregation(
    aggs: Iterable[AggregationTx], miner: Address, ledger: Ledger
) -> Optional[AggregationTx]:
    """The aggregation a rational miner publishes: highest payout it can prove."""
    valid = [a for a in aggs if valid_for_miner(a, miner, ledger)]
    if not valid:
        return None
    return max(valid, key=lambda a: (a.cumulative_miner_balance, a.index))


def channel_close_by_miner(
    ch: Channel,
    final_agg: AggregationTx,
    ledger: Ledger,
    proofs: Optional[Sequence[InclusionProof]] = None,
    sender_ack: bool = False,
    *,
    fee_native: int = 0,
    fee_meta: int = 0,
    nonce: Optional[int] = None,
) -> Transaction:
    """Settlement transaction for ``final_agg``; raises if it would be rejected."""
    onchain = ledger.channel(ch.channel_id)
    verify_settlement(
        onchain, final_agg, proofs, sender_ack, ledger.chain, ledger.claimed_refs, ledger.height
    )
    return Transaction(
        sender=onchain.miner,
        receiver=onchain.address,
        fee_native=fee_native,
        fee_meta=fee_meta,
        nonce=ledger.nonce(onchain.miner) if nonce is None else nonce,
        payload=Payload.CHANNEL_SETTLE,
        data=encode_settlement(final_agg, proofs, sender_ack),
    )


def channel_expire_refund(
    ch: Channel,
    current_height: int,
    ledger: Ledger,
    *,
    fee_native: int = 0,
    fee_meta: int = 0,
    nonce: Optional[int] = None,
) -> Transaction:
    """Refund of the full collateral; valid strictly after the timeout height."""
    onchain = ledger.channel(ch.channel_id)
    if onchain.phase is not ChannelPhase.OPEN:
        raise ChannelNotOpen(f"channel is {onchain.phase.value}")
    if current_height <= onchain.timeout_at:
        raise NotYetExpired(f"height {current_height} <= timeout {onchain.timeout_at}")
    return Transaction(
        sender=onchain.sender,
        receiver=onchain.address,
        fee_native=fee_native,
        fee_meta=fee_meta,
        nonce=ledger.nonce(onchain.sender) if nonce is None else nonce,
        payload=Payload.CHANNEL_REFUND,
    )
