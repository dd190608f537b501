"""Miner-based metatransactions.

``tx0`` performs the sender's action with zero fees; ``tx1`` carries the fee
in the non-native currency, either to the anyone-can-spend address (swept by
whoever mines the block) or to the ``CURRENT_MINER`` sentinel on chains whose
VM exposes the block's miner. Consecutive nonces plus the dependency of ``tx1``
on ``tx0`` keep the pair atomic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..chainsim.ledger import Ledger
from ..core import (
    ANYONE_CAN_SPEND,
    CURRENT_MINER,
    Address,
    Currency,
    Metatransaction,
    MetaTxError,
    Payload,
    Transaction,
    tx_id,
)


class InsufficientMetaBalance(MetaTxError):
    pass


class BatchExceedsBlockCapacity(MetaTxError):
    pass


@dataclass(frozen=True)
class Action:
    """What ``tx0`` does on the sender's behalf."""

    target: Address
    payload: Payload = Payload.NOOP
    amount: int = 0


def _fee_receiver(direct_to_miner: bool) -> Address:
    return CURRENT_MINER if direct_to_miner else ANYONE_CAN_SPEND


def _check_funds(sender: Address, actions: Sequence[Action], meta_fee: int, ledger: Ledger) -> None:
    if meta_fee <= 0:
        raise ValueError("a metatransaction fee must be positive")
    needed = meta_fee + sum(a.amount for a in actions if a.payload is Payload.TRANSFER_META)
    held = ledger.balance(sender, Currency.META)
    if held < needed:
        raise InsufficientMetaBalance(f"sender holds {held} in C*, needs {needed}")


def _tx0(sender: Address, action: Action, nonce: int, after: Optional[Transaction] = None) -> Transaction:
    return Transaction(
        sender=sender,
        receiver=action.target,
        amount=action.amount,
        nonce=nonce,
        payload=action.payload,
        delta=None if after is None else tx_id(after),
    )


def miner_metatx_issue(
    sender: Address,
    action: Action,
    meta_fee: int,
    direct_to_miner: bool,
    ledger: Ledger,
    nonce: Optional[int] = None,
) -> Metatransaction:
    _check_funds(sender, [action], meta_fee, ledger)
    n = ledger.nonce(sender) if nonce is None else nonce
    tx0 = _tx0(sender, action, n)
    tx1 = Transaction(
        sender=sender,
        receiver=_fee_receiver(direct_to_miner),
        fee_meta=meta_fee,
        delta=tx_id(tx0),
        nonce=n + 1,
        payload=Payload.TRANSFER_META,
    )
    return Metatransaction(tx1=tx1, tx0=tx0)


def miner_metatx_batch(
    sender: Address,
    actions: Sequence[Action],
    meta_fee: int,
    ledger: Ledger,
    direct_to_miner: bool = False,
    nonce: Optional[int] = None,
) -> tuple[list[Transaction], Transaction]:
    """``k`` fee-less tx0s with consecutive nonces and one tx1 paying for all.

    Each tx0 after the first depends on its predecessor, so a miner that
    includes part of the batch without tx1 strands the rest of it.
    """
    if not actions:
        raise ValueError("a batch needs at least one action")
    cfg = ledger.config
    if (len(actions) + 1) * cfg.base_tx_gas > cfg.block_gas_limit:
        raise BatchExceedsBlockCapacity(
            f"{len(actions)} actions plus the fee transaction exceed one block"
        )
    _check_funds(sender, actions, meta_fee, ledger)
    n = ledger.nonce(sender) if nonce is None else nonce
    tx0s: list[Transaction] = []
    for i, a in enumerate(actions):
        tx0s.append(_tx0(sender, a, n + i, tx0s[-1] if tx0s else None))
    tx1 = Transaction(
        sender=sender,
        receiver=_fee_receiver(direct_to_miner),
        fee_meta=meta_fee,
        delta=tx_id(tx0s[-1]),
        nonce=n + len(actions),
        payload=Payload.TRANSFER_META,
    )
    return tx0s, tx1
