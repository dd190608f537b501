"""The three fee-payment protocols, driving the chain simulator."""

from ..chainsim.contracts import AggregationTx, Channel, ChannelPhase, InclusionProof
from .channel import (
    ChannelDepleted,
    ChannelEvent,
    InsufficientCollateral,
    InvalidChannelFee,
    best_aggregation,
    channel_close_by_miner,
    channel_expire_refund,
    channel_open,
    channel_pay,
    commit_payment,
    miner_policy_channel,
    prove_inclusion,
    proofs_for,
    valid_for_miner,
)
from .miner import (
    Action,
    BatchExceedsBlockCapacity,
    InsufficientMetaBalance,
    miner_metatx_batch,
    miner_metatx_issue,
)
from .relayer import (
    FeePayer,
    FeePayerInsufficientMetaFunds,
    RelayerInsufficientNativeFunds,
    RelayerRequest,
    SignedMessage,
    relayer_submit,
)

__all__ = [
    "Action",
    "AggregationTx",
    "BatchExceedsBlockCapacity",
    "Channel",
    "ChannelDepleted",
    "ChannelEvent",
    "ChannelPhase",
    "FeePayer",
    "FeePayerInsufficientMetaFunds",
    "InclusionProof",
    "InsufficientCollateral",
    "InsufficientMetaBalance",
    "InvalidChannelFee",
    "RelayerInsufficientNativeFunds",
    "RelayerRequest",
    "SignedMessage",
    "best_aggregation",
    "channel_close_by_miner",
    "channel_expire_refund",
    "channel_open",
    "channel_pay",
    "commit_payment",
    "miner_metatx_batch",
    "miner_metatx_issue",
    "miner_policy_channel",
    "proofs_for",
    "prove_inclusion",
    "relayer_submit",
    "valid_for_miner",
]
