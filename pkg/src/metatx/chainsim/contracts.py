"""On-chain logic executed by the ledger for channel and relayer payloads.

The channel contract holds a sender's collateral in the non-native currency.
The miner settles by publishing an aggregation together with evidence that
every referenced ``tx0`` sits in a block it mined (Merkle proofs against the
stored block roots) or with the sender's acknowledgement. After the timeout
height has passed, only the sender can close, recovering the full collateral.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from ..core import (
    HASH_SIZE,
    Address,
    DecodeError,
    Payload,
    Reader,
    Transaction,
    TxId,
    Writer,
    channel_address,
    sha256,
    tx_id,
)
from .errors import (
    ChannelExpired,
    ChannelNotOpen,
    ProofInvalid,
    ReferenceAlreadyClaimed,
    WrongMinerForProvenBlock,
)
from .merkle import MerkleProof, Side, merkle_verify

if TYPE_CHECKING:
    from .ledger import Block


class ChannelPhase(enum.Enum):
    OPEN = "open"
    CLOSED_BY_MINER = "closed_by_miner"
    REFUNDED_AFTER_TIMEOUT = "refunded_after_timeout"


@dataclass(frozen=True)
class Channel:
    channel_id: bytes
    sender: Address
    miner: Address
    collateral: int
    sender_balance: int
    miner_balance: int
    seq: int
    opened_at: int
    timeout_at: int
    phase: ChannelPhase = ChannelPhase.OPEN
    # ids of the tx0s paid for so far, in payment order (sender-side view)
    tx0_ids: tuple[TxId, ...] = ()

    def __post_init__(self) -> None:
        if self.sender_balance < 0 or self.miner_balance < 0:
            raise ValueError("channel balances must be non-negative")
        if self.sender_balance + self.miner_balance != self.collateral:
            raise ValueError("channel balances must add up to the collateral")

    @property
    def address(self) -> Address:
        return channel_address(self.channel_id)

    def to_dict(self) -> dict:
        return {
            "channel_id": self.channel_id.hex(),
            "sender": self.sender.id.hex(),
            "miner": self.miner.id.hex(),
            "collateral": self.collateral,
            "sender_balance": self.sender_balance,
            "miner_balance": self.miner_balance,
            "seq": self.seq,
            "opened_at": self.opened_at,
            "timeout_at": self.timeout_at,
            "phase": self.phase.value,
        }


@dataclass(frozen=True)
class AggregationTx:
    """Sender-signed cumulative balance update after the ``index``-th payment."""

    channel_id: bytes
    index: int
    cumulative_miner_balance: int
    referenced_tx0_ids: tuple[TxId, ...]
    sender_signature_present: bool = True

    def __post_init__(self) -> None:
        if self.index < 1 or len(self.referenced_tx0_ids) != self.index:
            raise ValueError("aggregation index must equal the number of referenced tx0s")


@dataclass(frozen=True)
class InclusionProof:
    """Merkle proof that a transaction id is committed in block ``height``."""

    height: int
    proof: MerkleProof


def derive_channel_id(sender: Address, miner: Address, opened_at: int, nonce: int) -> bytes:
    return sha256(
        Writer()
        .raw(b"metatx/channel")
        .address(sender)
        .address(miner)
        .u64(opened_at)
        .u64(nonce)
        .getvalue()
    )


def encode_open(miner: Address, opened_at: int, timeout_at: int) -> bytes:
    return Writer().address(miner).u64(opened_at).u64(timeout_at).getvalue()


def decode_open(data: bytes) -> tuple[Address, int, int]:
    r = Reader(data)
    out = (r.address(), r.u64(), r.u64())
    r.done()
    return out


def encode_settlement(
    agg: AggregationTx, proofs: Optional[Sequence[InclusionProof]], sender_ack: bool
) -> bytes:
    w = (
        Writer()
        .raw(agg.channel_id)
        .u64(agg.index)
        .u128(agg.cumulative_miner_balance)
        .u8(1 if agg.sender_signature_present else 0)
        .u32(len(agg.referenced_tx0_ids))
    )
    for ref in agg.referenced_tx0_ids:
        w.raw(ref.digest)
    w.u8(1 if sender_ack else 0)
    proofs = proofs or ()
    w.u32(len(proofs))
    for ip in proofs:
        w.u64(ip.height).blob(ip.proof.leaf).raw(ip.proof.root).u32(len(ip.proof.path))
        for sibling, side in ip.proof.path:
            w.blob(sibling).u8(int(side))
    return w.getvalue()


def decode_settlement(data: bytes) -> tuple[AggregationTx, tuple[InclusionProof, ...], bool]:
    r = Reader(data)
    channel_id = r.raw(HASH_SIZE)
    index = r.u64()
    cumulative = r.u128()
    signed = r.u8() == 1
    refs = tuple(TxId(r.raw(HASH_SIZE)) for _ in range(r.u32()))
    sender_ack = r.u8() == 1
    proofs = []
    for _ in range(r.u32()):
        height = r.u64()
        leaf = r.blob()
        root = r.raw(HASH_SIZE)
        path = []
        for _ in range(r.u32()):
            sibling = r.blob()
            side = r.u8()
            if side not in (0, 1):
                raise DecodeError(f"bad proof side {side}")
            path.append((sibling, Side(side)))
        proofs.append(InclusionProof(height, MerkleProof(leaf, tuple(path), root)))
    r.done()
    try:
        agg = AggregationTx(channel_id, index, cumulative, refs, signed)
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    return agg, tuple(proofs), sender_ack


def verify_settlement(
    ch: Channel,
    agg: AggregationTx,
    proofs: Optional[Sequence[InclusionProof]],
    sender_ack: bool,
    chain: Sequence["Block"],
    claimed: Iterable[TxId],
    height: int,
) -> None:
    """Raise unless ``agg`` may be finalized on ``ch`` in a block at ``height``.

    Every referenced tx0 must have been mined by the channel's miner; a tx0
    already used in an earlier settlement on any channel cannot be reused.
    """
    if ch.phase is not ChannelPhase.OPEN:
        raise ChannelNotOpen(f"channel is {ch.phase.value}")
    if height > ch.timeout_at:
        raise ChannelExpired(f"height {height} is past the timeout {ch.timeout_at}")
    if agg.channel_id != ch.channel_id:
        raise ProofInvalid("aggregation belongs to another channel")
    if not agg.sender_signature_present:
        raise ProofInvalid("aggregation is not signed by the sender")
    if not 0 < agg.cumulative_miner_balance <= ch.collateral:
        raise ProofInvalid("aggregated balance outside (0, collateral]")
    refs = agg.referenced_tx0_ids
    if len(set(refs)) != len(refs):
        raise ProofInvalid("aggregation references a tx0 twice")
    claimed = set(claimed)
    reused = [r for r in refs if r in claimed]
    if reused:
        raise ReferenceAlreadyClaimed(f"{reused[0]!r} was already settled")
    if sender_ack:
        return
    proofs = tuple(proofs or ())
    if len(proofs) != len(refs):
        raise ProofInvalid(f"{len(refs)} references but {len(proofs)} proofs")
    for ref, ip in zip(refs, proofs):
        if ip.proof.leaf != ref.digest:
            raise ProofInvalid(f"proof is for a different leaf than {ref!r}")
        if not 0 <= ip.height < len(chain):
            raise ProofInvalid(f"no block at height {ip.height}")
        block = chain[ip.height]
        if ip.proof.root != block.merkle_root or not merkle_verify(ip.proof):
            raise ProofInvalid(f"inclusion proof for {ref!r} does not verify")
        if block.miner != ch.miner:
            raise WrongMinerForProvenBlock(
                f"{ref!r} was mined by {block.miner!r}, not the channel miner"
            )


def settled(ch: Channel, agg: AggregationTx) -> Channel:
    paid = agg.cumulative_miner_balance
    return replace(
        ch,
        sender_balance=ch.collateral - paid,
        miner_balance=paid,
        seq=agg.index,
        phase=ChannelPhase.CLOSED_BY_MINER,
        tx0_ids=agg.referenced_tx0_ids,
    )


def refunded(ch: Channel) -> Channel:
    return replace(
        ch,
        sender_balance=ch.collateral,
        miner_balance=0,
        phase=ChannelPhase.REFUNDED_AFTER_TIMEOUT,
    )


# -- relayer forwarder ------------------------------------------------------

RELAYABLE = (Payload.TRANSFER_NATIVE, Payload.TRANSFER_META, Payload.NOOP)


@dataclass(frozen=True)
class RelayedCall:
    origin: Address
    action: Payload
    fee_payer: Address
    meta_fee: int


def encode_relayed(call: RelayedCall) -> bytes:
    return (
        Writer()
        .address(call.origin)
        .u8(int(call.action))
        .address(call.fee_payer)
        .u128(call.meta_fee)
        .getvalue()
    )


def decode_relayed(data: bytes) -> RelayedCall:
    r = Reader(data)
    origin = r.address()
    try:
        action = Payload(r.u8())
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    call = RelayedCall(origin, action, r.address(), r.u128())
    r.done()
    if action not in RELAYABLE:
        raise DecodeError(f"{action.name} cannot be relayed")
    return call


def derive_reimbursement(tx_c: Transaction) -> Transaction:
    """The internal transaction triggered by executing a relayed call."""
    call = decode_relayed(tx_c.data)
    return Transaction(
        sender=call.fee_payer,
        receiver=tx_c.sender,
        amount=call.meta_fee,
        delta=tx_id(tx_c),
        payload=Payload.RELAYER_REIMBURSE,
    )
