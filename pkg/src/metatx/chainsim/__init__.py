"""Deterministic single-process blockchain simulator."""

from .config import MinerProfile, SimConfig, check_shares
from .contracts import AggregationTx, Channel, ChannelPhase, InclusionProof
from .errors import *  # noqa: F401,F403
from .ledger import (
    Block,
    Ledger,
    apply_block,
    build_block,
    claim_anyone_can_spend,
    elect_miner,
)
from .merkle import MerkleProof, Side, merkle_prove, merkle_root, merkle_verify

__all__ = [
    "AggregationTx",
    "Block",
    "Channel",
    "ChannelPhase",
    "InclusionProof",
    "Ledger",
    "MerkleProof",
    "MinerProfile",
    "Side",
    "SimConfig",
    "apply_block",
    "build_block",
    "check_shares",
    "claim_anyone_can_spend",
    "elect_miner",
    "merkle_prove",
    "merkle_root",
    "merkle_verify",
]
