"""Transactions, metatransactions and their canonical byte encoding.

A transaction carries fees in two currencies: the chain's native currency and
one non-native currency (``Currency.META``). A metatransaction is a pair
``(tx0, tx1)`` where only ``tx1`` pays, in the non-native currency, and ``tx1``
depends on ``tx0`` through ``delta``.

Byte layout of a serialized transaction (all integers big-endian)::

    version      u8     (0x01)
    sender       u8 kind | 32 bytes id
    receiver     u8 kind | 32 bytes id
    amount       u128
    fee_native   u128
    fee_meta     u128
    delta        u8 tag (0x00 absent, 0x01 present) [| 32 bytes]
    nonce        u64
    payload      u8
    data         u32 length | bytes
"""

from __future__ import annotations

import enum
import functools
import hashlib
import struct
from dataclasses import dataclass
from typing import Optional

HASH_SIZE = 32
SERIAL_VERSION = 1
_U64_MAX = (1 << 64) - 1
_U128_MAX = (1 << 128) - 1


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class MetaTxError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(MetaTxError, ValueError):
    pass


class Currency(enum.Enum):
    NATIVE = "native"
    META = "meta"


class AddressKind(enum.IntEnum):
    NORMAL = 0
    ANYONE_CAN_SPEND = 1
    CHANNEL_CONTRACT = 2
    # resolved to the miner of the including block at apply time
    CURRENT_MINER = 3


@dataclass(frozen=True, order=True)
class Address:
    id: bytes
    kind: AddressKind = AddressKind.NORMAL

    def __post_init__(self) -> None:
        if len(self.id) != HASH_SIZE:
            raise ValueError(f"address id must be {HASH_SIZE} bytes, got {len(self.id)}")

    @classmethod
    def from_pubkey(cls, pubkey: bytes) -> "Address":
        return cls(sha256(pubkey))

    @classmethod
    def named(cls, label: str) -> "Address":
        """Deterministic test/simulation address for a human-readable label."""
        return cls.from_pubkey(b"metatx/named:" + label.encode())

    def short(self) -> str:
        return self.id.hex()[:12]

    def __repr__(self) -> str:
        return f"Address({self.kind.name}:{self.short()})"


# Compressed secp256k1 generator point; its secret key is 1, so anyone can spend.
_SECP256K1_G = bytes.fromhex(
    "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
)
ANYONE_CAN_SPEND = Address(sha256(_SECP256K1_G), AddressKind.ANYONE_CAN_SPEND)
CURRENT_MINER = Address(sha256(b"metatx/current-miner"), AddressKind.CURRENT_MINER)
ZERO_HASH = bytes(HASH_SIZE)


def channel_address(channel_id: bytes) -> Address:
    return Address(channel_id, AddressKind.CHANNEL_CONTRACT)


@dataclass(frozen=True, order=True)
class TxId:
    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != HASH_SIZE:
            raise ValueError("tx id must be 32 bytes")

    def hex(self) -> str:
        return self.digest.hex()

    def __bytes__(self) -> bytes:
        return self.digest

    def __repr__(self) -> str:
        return f"TxId({self.digest.hex()[:12]})"


class Payload(enum.IntEnum):
    TRANSFER_NATIVE = 0
    TRANSFER_META = 1
    CHANNEL_OPEN = 2
    CHANNEL_SETTLE = 3
    CHANNEL_REFUND = 4
    CLAIM_ANYONE_CAN_SPEND = 5
    NOOP = 6
    # relayer fee delegation: the forwarded call and its internal reimbursement
    RELAYED_CALL = 7
    RELAYER_REIMBURSE = 8


@dataclass(frozen=True)
class Transaction:
    sender: Address
    receiver: Address
    amount: int = 0
    fee_native: int = 0
    fee_meta: int = 0
    delta: Optional[TxId] = None
    nonce: int = 0
    payload: Payload = Payload.NOOP
    data: bytes = b""

    def __post_init__(self) -> None:
        for name in ("amount", "fee_native", "fee_meta"):
            value = getattr(self, name)
            if not 0 <= value <= _U128_MAX:
                raise ValueError(f"{name} out of range: {value}")
        if not 0 <= self.nonce <= _U64_MAX:
            raise ValueError(f"nonce out of range: {self.nonce}")

    @property
    def id(self) -> TxId:
        return tx_id(self)

    def to_dict(self) -> dict:
        """JSON-compatible rendering for dumps and debugging."""
        return {
            "id": self.id.hex(),
            "sender": self.sender.id.hex(),
            "sender_kind": self.sender.kind.name,
            "receiver": self.receiver.id.hex(),
            "receiver_kind": self.receiver.kind.name,
            "amount": self.amount,
            "fee_native": self.fee_native,
            "fee_meta": self.fee_meta,
            "delta": self.delta.hex() if self.delta else None,
            "nonce": self.nonce,
            "payload": self.payload.name,
            "data": self.data.hex(),
        }


class Writer:
    """Append-only builder for the canonical encoding."""

    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">B", v))
        return self

    def u32(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">I", v))
        return self

    def u64(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">Q", v))
        return self

    def u128(self, v: int) -> "Writer":
        self._parts.append(v.to_bytes(16, "big"))
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(b)
        return self

    def blob(self, b: bytes) -> "Writer":
        return self.u32(len(b)).raw(b)

    def address(self, a: Address) -> "Writer":
        return self.u8(int(a.kind)).raw(a.id)

    def option_hash(self, h: Optional[bytes]) -> "Writer":
        if h is None:
            return self.u8(0)
        return self.u8(1).raw(h)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def u128(self) -> int:
        return int.from_bytes(self._take(16), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def address(self) -> Address:
        kind = self.u8()
        try:
            return Address(self._take(HASH_SIZE), AddressKind(kind))
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc

    def option_hash(self) -> Optional[bytes]:
        tag = self.u8()
        if tag == 0:
            return None
        if tag != 1:
            raise DecodeError(f"bad option tag {tag}")
        return self._take(HASH_SIZE)

    def done(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError("trailing bytes")


def serialize(tx: Transaction) -> bytes:
    return (
        Writer()
        .u8(SERIAL_VERSION)
        .address(tx.sender)
        .address(tx.receiver)
        .u128(tx.amount)
        .u128(tx.fee_native)
        .u128(tx.fee_meta)
        .option_hash(tx.delta.digest if tx.delta else None)
        .u64(tx.nonce)
        .u8(int(tx.payload))
        .blob(tx.data)
        .getvalue()
    )


def deserialize(data: bytes) -> Transaction:
    r = Reader(data)
    version = r.u8()
    if version != SERIAL_VERSION:
        raise DecodeError(f"unsupported version {version}")
    sender = r.address()
    receiver = r.address()
    amount = r.u128()
    fee_native = r.u128()
    fee_meta = r.u128()
    delta = r.option_hash()
    nonce = r.u64()
    try:
        payload = Payload(r.u8())
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    blob = r.blob()
    r.done()
    return Transaction(
        sender=sender,
        receiver=receiver,
        amount=amount,
        fee_native=fee_native,
        fee_meta=fee_meta,
        delta=TxId(delta) if delta is not None else None,
        nonce=nonce,
        payload=payload,
        data=blob,
    )


@functools.lru_cache(maxsize=1 << 16)
def tx_id(tx: Transaction) -> TxId:
    """SHA-256 of the canonical serialization."""
    return TxId(sha256(serialize(tx)))


@dataclass(frozen=True)
class Metatransaction:
    tx1: Transaction
    tx0: Optional[Transaction] = None

    def transactions(self) -> list[Transaction]:
        return [self.tx1] if self.tx0 is None else [self.tx0, self.tx1]


class MetaTxCheck(enum.Enum):
    OK = "ok"
    NON_ZERO_FEE_IN_TX0 = "non-zero-fee-in-tx0"
    NATIVE_FEE_IN_TX1 = "native-fee-in-tx1"
    ZERO_META_FEE = "zero-meta-fee"
    DANGLING_DELTA = "dangling-delta"

    def __bool__(self) -> bool:
        return self is MetaTxCheck.OK


def validate_metatx(m: Metatransaction) -> MetaTxCheck:
    """Check the pair constraints; the first violated constraint is reported."""
    tx0, tx1 = m.tx0, m.tx1
    if tx0 is not None and (tx0.fee_native != 0 or tx0.fee_meta != 0):
        return MetaTxCheck.NON_ZERO_FEE_IN_TX0
    if tx1.fee_native != 0:
        return MetaTxCheck.NATIVE_FEE_IN_TX1
    if tx1.fee_meta == 0:
        return MetaTxCheck.ZERO_META_FEE
    if tx0 is not None and tx1.delta != tx_id(tx0):
        return MetaTxCheck.DANGLING_DELTA
    return MetaTxCheck.OK


__all__ = [
    "ANYONE_CAN_SPEND",
    "CURRENT_MINER",
    "HASH_SIZE",
    "ZERO_HASH",
    "Address",
    "AddressKind",
    "Currency",
    "DecodeError",
    "MetaTxCheck",
    "MetaTxError",
    "Metatransaction",
    "Payload",
    "Reader",
    "Transaction",
    "TxId",
    "Writer",
    "channel_address",
    "deserialize",
    "serialize",
    "sha256",
    "tx_id",
    "validate_metatx",
]
