"""pqchain: a UTXO blockchain with pluggable post-quantum signatures."""

from .chain import (
    Block, Blockchain, ChainReport, Polarity, PowConfig, canonical_block_bytes, load_chain,
    mine_block, pow_search, save_chain, target_predicate, validate_chain, verify_block,
)
from .ledger import (
    Transaction, TxInput, TxOutput, UtxoSet, Verdict, apply_transaction, build_transaction,
    coinbase_transaction, compute_txid, sign_transaction, utxo_balance, verify_transaction,
)
from .schemes import (
    Family, KeyPair, SchemeDescriptor, SignatureBytes, generate_keypair, get_scheme, scheme_from_id,
    list_schemes, sign, verify,
)
from .stats import chi_square_uniform
from .wallet import Address, Wallet, create_wallet, derive_address

__version__ = "0.1.0"
