"""Blocks, iterated-hash proof of work, and whole-chain validation.

Proof of work here does not search over a nonce input. The block content
``b`` is hashed once, and the digest is re-hashed until its first ``L`` bits
match the target polarity. The number of hashes ``r`` is stored as the
block's nonce and ``Hash^r(b)`` as its block hash. Because ``r`` is fully
determined by ``b``, independent searches need distinct content (in practice
a different generation time).

Canonical block content::

    prev_hash(32) | u32 n_tx | n_tx x transaction encoding | u64 generation_time

Nonce and block hash are PoW outputs and are not part of the content.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .encoding import Reader, u32, u64
from .errors import (
    DecodeError, DoubleSpend, EmptyBlock, InvalidTransaction, IterationCapExceeded,
    UnsupportedScheme,
)
from .ledger import (
    Transaction, TxInput, TxOutput, UtxoSet, Verdict, VALID, apply_transaction,
)
from . import schemes
from .wallet import Address

ZERO_HASH = bytes(32)
MAX_DIFFICULTY = 64
CHAIN_FORMAT = "pqchain-chain/1"


class Polarity(str, Enum):
    ZEROS = "zeros"
    ONES = "ones"


@dataclass(frozen=True)
class PowConfig:
    difficulty_bits: int = 8
    polarity: Polarity = Polarity.ZEROS
    max_iterations: Optional[int] = None  # defaults to 2**(L+8)

    def __post_init__(self):
        if not 0 <= self.difficulty_bits <= MAX_DIFFICULTY:
            raise ValueError(f"difficulty must be in [0, {MAX_DIFFICULTY}]")
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if self.max_iterations is None:
            object.__setattr__(self, "max_iterations", 2 ** (self.difficulty_bits + 8))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def target_predicate(digest: bytes, difficulty_bits: int, polarity: Polarity = Polarity.ZEROS) -> bool:
    """True iff the first ``difficulty_bits`` bits (MSB first) all equal the polarity bit."""
    if difficulty_bits == 0:
        return True
    prefix = int.from_bytes(digest[:8], "big") >> (64 - difficulty_bits)
    if Polarity(polarity) is Polarity.ZEROS:
        return prefix == 0
    return prefix == (1 << difficulty_bits) - 1


def hash_iterate(b: bytes, rounds: int) -> bytes:
    """SHA-256 applied ``rounds`` times, starting from ``b``."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    sha = hashlib.sha256
    d = sha(b).digest()
    for _ in range(rounds - 1):
        d = sha(d).digest()
    return d


def pow_search(b: bytes, config: PowConfig) -> tuple[int, bytes]:
    """Smallest ``r >= 1`` such that ``Hash^r(b)`` meets the target, and that digest."""
    if not b:
        raise ValueError("block content must be non-empty")
    L = config.difficulty_bits
    cap = config.max_iterations
    sha = hashlib.sha256
    d = sha(b).digest()
    if L == 0:
        return 1, d
    shift = 64 - L
    want = 0 if config.polarity is Polarity.ZEROS else (1 << L) - 1
    from_bytes = int.from_bytes
    r = 1
    while from_bytes(d[:8], "big") >> shift != want:
        if r >= cap:
            raise IterationCapExceeded(f"no qualifying digest within {cap} iterations at L={L}")
        d = sha(d).digest()
        r += 1
    return r, d


def canonical_block_bytes(prev_hash: bytes, transactions: Sequence[Transaction],
                          generation_time: int) -> bytes:
    if not transactions:
        raise EmptyBlock("a block needs at least one transaction")
    if len(prev_hash) != 32:
        raise ValueError("prev_hash must be 32 bytes")
    return (
        prev_hash
        + u32(len(transactions))
        + b"".join(tx.encode() for tx in transactions)
        + u64(generation_time)
    )


@dataclass(frozen=True)
class Block:
    prev_hash: bytes
    transactions: tuple[Transaction, ...]
    generation_time: int
    nonce: int
    block_hash: bytes

    def content(self) -> bytes:
        return canonical_block_bytes(self.prev_hash, self.transactions, self.generation_time)

    def to_bytes(self) -> bytes:
        """Storage form: block_hash | u64 nonce | canonical content."""
        return self.block_hash + u64(self.nonce) + self.content()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        r = Reader(data)
        block_hash = r.take(32)
        nonce = r.u64()
        prev = r.take(32)
        txs = tuple(Transaction.read(r) for _ in range(r.u32()))
        time = r.u64()
        r.finish()
        return cls(prev, txs, time, nonce, block_hash)


@dataclass
class Blockchain:
    pow: PowConfig = field(default_factory=PowConfig)
    blocks: list[Block] = field(default_factory=list)
    utxos: UtxoSet = field(default_factory=UtxoSet)

    @property
    def tip_hash(self) -> bytes:
        return self.blocks[-1].block_hash if self.blocks else ZERO_HASH

    def __len__(self) -> int:
        return len(self.blocks)


def _replay(utxos: UtxoSet, transactions: Iterable[Transaction], genesis: bool) -> UtxoSet:
    for tx in transactions:
        if genesis and not tx.is_coinbase:
            raise InvalidTransaction("genesis block may only hold coinbase transactions")
        if not genesis and tx.is_coinbase:
            raise InvalidTransaction("coinbase transactions are only allowed in genesis")
        utxos = apply_transaction(utxos, tx)
    return utxos


def mine_block(chain: Blockchain, transactions: Sequence[Transaction], generation_time: int) -> Block:
    """Validate ``transactions`` against the chain state, run PoW and append the block."""
    transactions = tuple(transactions)
    if not transactions:
        raise EmptyBlock("a block needs at least one transaction")
    utxos = _replay(chain.utxos, transactions, genesis=not chain.blocks)

    content = canonical_block_bytes(chain.tip_hash, transactions, generation_time)
    nonce, digest = pow_search(content, chain.pow)
    block = Block(chain.tip_hash, transactions, generation_time, nonce, digest)
    chain.blocks.append(block)
    chain.utxos = utxos
    return block


def verify_block(block: Block, config: PowConfig) -> Verdict:
    if not block.transactions:
        return Verdict(False, "empty block")
    if not 1 <= block.nonce <= config.max_iterations:
        return Verdict(False, "nonce out of range")
    if hash_iterate(block.content(), block.nonce) != block.block_hash:
        return Verdict(False, "hash mismatch")
    if not target_predicate(block.block_hash, config.difficulty_bits, config.polarity):
        return Verdict(False, "target not met")
    return VALID


@dataclass(frozen=True)
class ChainReport:
    valid: bool
    index: Optional[int] = None
    reason: str = "valid"

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return f"invalid at block {self.index}: {self.reason}"


def validate_chain(chain: Blockchain) -> ChainReport:
    """Check linkage, every block's PoW, and replay all transactions from genesis."""
    utxos = UtxoSet()
    prev = ZERO_HASH
    for i, block in enumerate(chain.blocks):
        if block.prev_hash != prev:
            return ChainReport(False, i, "broken link")
        verdict = verify_block(block, chain.pow)
        if not verdict:
            return ChainReport(False, i, verdict.reason)
        try:
            utxos = _replay(utxos, block.transactions, genesis=i == 0)
        except DoubleSpend as exc:
            return ChainReport(False, i, f"double spend: {exc}")
        except InvalidTransaction as exc:
            return ChainReport(False, i, f"invalid transaction: {exc}")
        prev = block.block_hash
    return ChainReport(True)


def rebuild_utxos(chain: Blockchain) -> UtxoSet:
    """Replay every block from genesis; raises on the first invalid transaction."""
    utxos = UtxoSet()
    for i, block in enumerate(chain.blocks):
        utxos = _replay(utxos, block.transactions, genesis=i == 0)
    return utxos


# --------------------------------------------------------------------------
# chain file (JSON, hex-encoded byte fields)
# --------------------------------------------------------------------------

def _tx_to_obj(tx: Transaction) -> dict:
    return {
        "txid": tx.txid.hex(),
        "generation_time": tx.generation_time,
        "inputs": [
            {
                "prev_txid": i.prev_txid.hex(),
                "prev_output_index": i.prev_output_index,
                "scheme": i.scheme.scheme_id,
                "public_key": i.public_key.hex(),
                "signature": i.signature.hex(),
            }
            for i in tx.inputs
        ],
        "outputs": [{"value": o.value, "recipient": o.recipient.hex()} for o in tx.outputs],
    }


def _hex(obj: dict, key: str, length: Optional[int] = None) -> bytes:
    value = obj[key]
    if not isinstance(value, str):
        raise DecodeError(f"{key} must be a hex string")
    raw = bytes.fromhex(value)
    if length is not None and len(raw) != length:
        raise DecodeError(f"{key} must be {length} bytes")
    return raw


def _int(obj: dict, key: str) -> int:
    value = obj[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise DecodeError(f"{key} must be a non-negative integer")
    return value


def _tx_from_obj(obj: dict) -> Transaction:
    inputs = tuple(
        TxInput(
            _hex(i, "prev_txid", 32),
            _int(i, "prev_output_index"),
            schemes.scheme_from_id(i["scheme"]),
            _hex(i, "public_key"),
            _hex(i, "signature"),
        )
        for i in obj["inputs"]
    )
    outputs = tuple(
        TxOutput(_int(o, "value"), Address(_hex(o, "recipient", 32))) for o in obj["outputs"]
    )
    # keep the stored txid so that validation can flag a mismatch
    return Transaction(inputs, outputs, _int(obj, "generation_time"), _hex(obj, "txid", 32))


def chain_to_obj(chain: Blockchain) -> dict:
    return {
        "format": CHAIN_FORMAT,
        "pow": {
            "difficulty_bits": chain.pow.difficulty_bits,
            "polarity": chain.pow.polarity.value,
            "max_iterations": chain.pow.max_iterations,
        },
        "blocks": [
            {
                "index": n,
                "block_hash": b.block_hash.hex(),
                "prev_hash": b.prev_hash.hex(),
                "generation_time": b.generation_time,
                "nonce": b.nonce,
                "transactions": [_tx_to_obj(tx) for tx in b.transactions],
            }
            for n, b in enumerate(chain.blocks)
        ],
    }


def dumps_chain(chain: Blockchain) -> str:
    return json.dumps(chain_to_obj(chain), indent=2) + "\n"


def loads_chain(text: str) -> Blockchain:
    """Parse a chain file. Structural problems raise DecodeError; nothing is validated."""
    try:
        obj = json.loads(text)
        if obj.get("format") != CHAIN_FORMAT:
            raise DecodeError(f"unknown chain format {obj.get('format')!r}")
        p = obj["pow"]
        config = PowConfig(_int(p, "difficulty_bits"), Polarity(p["polarity"]),
                           _int(p, "max_iterations"))
        blocks = []
        for n, b in enumerate(obj["blocks"]):
            if b.get("index") != n:
                raise DecodeError(f"block {n} has index {b.get('index')!r}")
            blocks.append(Block(
                _hex(b, "prev_hash", 32),
                tuple(_tx_from_obj(t) for t in b["transactions"]),
                _int(b, "generation_time"),
                _int(b, "nonce"),
                _hex(b, "block_hash", 32),
            ))
    except DecodeError:
        raise
    except (ValueError, KeyError, TypeError, AttributeError, UnsupportedScheme) as exc:
        raise DecodeError(f"malformed chain file: {exc}") from exc
    chain = Blockchain(config, blocks)
    if validate_chain(chain):
        chain.utxos = rebuild_utxos(chain)
    return chain


def save_chain(chain: Blockchain, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_chain(chain))


def load_chain(path: Union[str, Path]) -> Blockchain:
    return loads_chain(Path(path).read_text())
