"""Metatransactions: paying blockchain fees in a non-native currency.

Subpackages:

- ``metatx.core``: transaction and metatransaction types, ids, validation
- ``metatx.chainsim``: ledger, block building, Merkle proofs
- ``metatx.schemes``: relayer, miner-based and payment-channel fee schemes
- ``metatx.econ``: throughput, break-even, inclusion and takeover calculators
- ``metatx.secmdp``: double-spending MDP with constant fees
- ``metatx.cli``: scenario runner and analysis commands
"""

__version__ = "0.1.0"
