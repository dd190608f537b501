from __future__ import annotations

from ..core import MetaTxError


class EmptyMinerSet(MetaTxError):
    pass


class NothingToClaim(MetaTxError):
    pass


class InvalidBlock(MetaTxError):
    """A block failed validation; nothing from it is applied."""


class InsufficientBalance(InvalidBlock):
    pass


class NonceGap(InvalidBlock):
    pass


class DependencyUnsatisfied(InvalidBlock):
    pass


class DuplicateTransaction(InvalidBlock):
    pass


class UnauthorizedSender(InvalidBlock):
    pass


class ClaimNotByBlockMiner(UnauthorizedSender):
    pass


class EmptyClaim(InvalidBlock, NothingToClaim):
    pass


# Channel contract failures. They reject the including block, and the
# off-chain helpers raise the same classes before a transaction is built.
class ChannelError(InvalidBlock):
    pass


class UnknownChannel(ChannelError):
    pass


class ChannelNotOpen(ChannelError):
    pass


class ChannelExpired(ChannelError):
    pass


class NotYetExpired(ChannelError):
    pass


class ProofInvalid(ChannelError):
    pass


class WrongMinerForProvenBlock(ChannelError):
    pass


class ReferenceAlreadyClaimed(ChannelError):
    pass
