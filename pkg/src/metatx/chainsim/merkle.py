"""Binary Merkle tree over transaction ids with inclusion proofs.

Leaves are ``H(0x00 || id)`` and internal nodes ``H(0x01 || left || right)``,
so a node hash can never be replayed as a leaf. A level with an odd number of
nodes is padded with the all-zero sentinel. The empty tree has the all-zero
root.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Sequence

from ..core import HASH_SIZE, ZERO_HASH, MetaTxError, TxId, sha256

LEAF_TAG = b"\x00"
NODE_TAG = b"\x01"


class IndexOutOfRange(MetaTxError, IndexError):
    pass


class Side(enum.IntEnum):
    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class MerkleProof:
    leaf: bytes
    path: tuple[tuple[bytes, Side], ...]
    root: bytes


def _as_bytes(item: TxId | bytes) -> bytes:
    return item.digest if isinstance(item, TxId) else bytes(item)


def hash_leaf(leaf: bytes) -> bytes:
    return sha256(LEAF_TAG + leaf)


def hash_node(left: bytes, right: bytes) -> bytes:
    return sha256(NODE_TAG + left + right)


def _levels(ids: Sequence[TxId | bytes]) -> list[list[bytes]]:
    level = [hash_leaf(_as_bytes(i)) for i in ids]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [ZERO_HASH]
            levels[-1] = level
        level = [hash_node(level[j], level[j + 1]) for j in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_root(ids: Sequence[TxId | bytes]) -> bytes:
    if not ids:
        return ZERO_HASH
    return _levels(ids)[-1][0]


def merkle_prove(ids: Sequence[TxId | bytes], index: int) -> MerkleProof:
    if not 0 <= index < len(ids):
        raise IndexOutOfRange(f"index {index} outside [0, {len(ids)})")
    levels = _levels(ids)
    path = []
    pos = index
    for level in levels[:-1]:
        sibling = pos ^ 1
        side = Side.LEFT if sibling < pos else Side.RIGHT
        path.append((level[sibling], side))
        pos //= 2
    return MerkleProof(leaf=_as_bytes(ids[index]), path=tuple(path), root=levels[-1][0])


def merkle_verify(proof: MerkleProof) -> bool:
    # hashlib directly: this is the hot loop of proof-heavy settlement checks
    h = hashlib.sha256
    node = h(LEAF_TAG + proof.leaf).digest()
    for sibling, side in proof.path:
        if len(sibling) != HASH_SIZE:
            return False
        pair = sibling + node if side == Side.LEFT else node + sibling
        node = h(NODE_TAG + pair).digest()
    return node == proof.root
