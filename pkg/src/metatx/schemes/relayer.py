"""Relayer fee delegation.

The sender signs a message off-chain; the relayer wraps it in an on-chain call
paying the native fee. Executing the call triggers an internal transaction
that reimburses the relayer in the non-native currency, paid by the sender or
by the receiver. Both execute in the same block or not at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..chainsim.contracts import RELAYABLE, RelayedCall, derive_reimbursement, encode_relayed
from ..chainsim.ledger import Ledger
from ..core import Address, Currency, MetaTxError, Payload, Transaction


class RelayerInsufficientNativeFunds(MetaTxError):
    pass


class FeePayerInsufficientMetaFunds(MetaTxError):
    pass


class FeePayer(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


@dataclass(frozen=True)
class SignedMessage:
    target: Address
    action: Payload
    amount: int
    meta_fee_offered: int
    fee_payer: FeePayer = FeePayer.RECEIVER

    def __post_init__(self) -> None:
        if self.meta_fee_offered <= 0:
            raise ValueError("the relayer must be offered a positive fee")
        if self.action not in RELAYABLE:
            raise ValueError(f"{self.action.name} cannot be relayed")


@dataclass(frozen=True)
class RelayerRequest:
    sender: Address
    message: SignedMessage


def relayer_submit(
    req: RelayerRequest,
    relayer: Address,
    honest: bool,
    ledger: Ledger,
    fee_native: int,
    nonce: Optional[int] = None,
) -> Optional[tuple[Transaction, Transaction]]:
    """Wrap ``req`` into ``(tx_c, tx_cstar)``, or return None if the relayer censors.

    Only ``tx_c`` needs to reach the mempool; block builders append the
    derived reimbursement ``tx_cstar`` right after it.
    """
    if not honest:
        return None
    msg = req.message
    if ledger.balance(relayer, Currency.NATIVE) < fee_native:
        raise RelayerInsufficientNativeFunds(
            f"relayer holds {ledger.balance(relayer)} native, fee is {fee_native}"
        )
    payer = req.sender if msg.fee_payer is FeePayer.SENDER else msg.target
    available = ledger.balance(payer, Currency.META)
    if msg.action is Payload.TRANSFER_META:
        # the action settles before the reimbursement inside the same call
        if payer == msg.target:
            available += msg.amount
        if payer == req.sender:
            available -= msg.amount
    if available < msg.meta_fee_offered:
        raise FeePayerInsufficientMetaFunds(
            f"fee payer can cover {available}, relayer asks {msg.meta_fee_offered}"
        )
    tx_c = Transaction(
        sender=relayer,
        receiver=msg.target,
        amount=msg.amount,
        fee_native=fee_native,
        nonce=ledger.nonce(relayer) if nonce is None else nonce,
        payload=Payload.RELAYED_CALL,
        data=encode_relayed(RelayedCall(req.sender, msg.action, payer, msg.meta_fee_offered)),
    )
    return tx_c, derive_reimbursement(tx_c)
