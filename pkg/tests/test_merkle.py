import random

import pytest

from metatx.chainsim.merkle import (
    IndexOutOfRange,
    MerkleProof,
    Side,
    hash_leaf,
    hash_node,
    merkle_prove,
    merkle_root,
    merkle_verify,
)
from metatx.core import ZERO_HASH, sha256

IDS4 = [sha256(f"leaf-{i}".encode()) for i in range(4)]
GOLDEN_ROOT4 = "3c83971924586eff51ef0248eb89b444439bad1cf54802638da4b099b91a8f6f"
GOLDEN_ROOT3 = "6eed288288d9a39cc97125ba05be5f6ca19e550f60a3035c1c947eb8bd188354"


def test_empty_root_is_zero():
    assert merkle_root([]) == ZERO_HASH


def test_single_leaf_root():
    assert merkle_root(IDS4[:1]) == sha256(b"\x00" + IDS4[0])
    assert merkle_root(IDS4[:1]).hex() == "3f16c0c2cd28088814f15c300b46158e83203cde690169a74602ca926fa2a8bc"


def test_golden_roots():
    assert merkle_root(IDS4).hex() == GOLDEN_ROOT4
    assert merkle_root(IDS4[:3]).hex() == GOLDEN_ROOT3


def test_order_sensitive():
    assert merkle_root(IDS4) != merkle_root(list(reversed(IDS4)))


def test_round_trip_every_index():
    for n in range(1, 12):
        ids = [sha256(bytes([n, i])) for i in range(n)]
        for i in range(n):
            proof = merkle_prove(ids, i)
            assert merkle_verify(proof)
            assert proof.root == merkle_root(ids)


def test_path_length_is_depth():
    ids = [sha256(bytes([i])) for i in range(5)]
    assert len(merkle_prove(ids, 0).path) == 3


def test_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        merkle_prove(IDS4, 4)
    with pytest.raises(IndexOutOfRange):
        merkle_prove([], 0)


def test_sibling_bit_flip_fails():
    proof = merkle_prove(IDS4, 2)
    sib, side = proof.path[0]
    bad = bytes([sib[0] ^ 1]) + sib[1:]
    assert not merkle_verify(MerkleProof(proof.leaf, ((bad, side),) + proof.path[1:], proof.root))


def test_side_flip_fails():
    proof = merkle_prove(IDS4, 1)
    path = tuple((s, Side.RIGHT if d is Side.LEFT else Side.LEFT) for s, d in proof.path)
    assert not merkle_verify(MerkleProof(proof.leaf, path, proof.root))


def test_internal_node_never_verifies_as_leaf():
    left = hash_node(hash_leaf(IDS4[0]), hash_leaf(IDS4[1]))
    right = hash_node(hash_leaf(IDS4[2]), hash_leaf(IDS4[3]))
    forged = MerkleProof(leaf=left, path=((right, Side.RIGHT),), root=merkle_root(IDS4))
    assert not merkle_verify(forged)


def test_cross_tree_proofs_fail():
    rng = random.Random(5)
    for _ in range(1000):
        a = [rng.randbytes(32) for _ in range(rng.randint(1, 9))]
        b = [rng.randbytes(32) for _ in range(rng.randint(1, 9))]
        proof = merkle_prove(a, rng.randrange(len(a)))
        assert not merkle_verify(MerkleProof(proof.leaf, proof.path, merkle_root(b)))
