"""Transactions, per-input signatures and unspent-output accounting.

Canonical transaction encoding (all integers big-endian)::

    u32 n_inputs
      n_inputs x [ prev_txid(32) | u32 prev_output_index
                   | u32 len | signature | u32 len | public_key
                   | u32 len | scheme_id (utf-8) ]
    u32 n_outputs
      n_outputs x [ u64 value | recipient(32) ]
    u64 generation_time (ms since epoch)

The txid is SHA-256 of that encoding with every signature replaced by the
empty string. Input ``i`` is signed over the same signature-blanked encoding
(public keys filled in), followed by ``u32 i`` and the encoding of the output
it spends.
"""

from __future__ import annotations

import dataclasses
import hashlib
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from . import schemes
from .encoding import Reader, u32, u64, var_bytes
from .errors import (
    DecodeError, DoubleSpend, ForeignInput, InsufficientFunds, InvalidTransaction,
    UnresolvedInput, UnsupportedScheme, ZeroAmount,
)
from .schemes import SchemeDescriptor
from .wallet import Address, Wallet, derive_address

OutPoint = tuple[bytes, int]
Resolver = Callable[[bytes, int], Optional["TxOutput"]]


@dataclass(frozen=True)
class Verdict:
    """Outcome of a verification; falsy when a check failed."""

    ok: bool
    reason: str = "valid"
    index: Optional[int] = None

    def __bool__(self) -> bool:
        return self.ok


VALID = Verdict(True)


@dataclass(frozen=True)
class TxOutput:
    value: int
    recipient: Address

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("output value must be non-negative")

    def encode(self) -> bytes:
        return u64(self.value) + self.recipient.digest


@dataclass(frozen=True)
class TxInput:
    prev_txid: bytes
    prev_output_index: int
    scheme: SchemeDescriptor
    public_key: bytes = b""
    signature: bytes = b""

    def __post_init__(self):
        if len(self.prev_txid) != 32:
            raise ValueError("prev_txid must be 32 bytes")

    @property
    def outpoint(self) -> OutPoint:
        return (self.prev_txid, self.prev_output_index)

    def encode(self, *, blank_signature: bool = False) -> bytes:
        sig = b"" if blank_signature else self.signature
        return (
            self.prev_txid
            + u32(self.prev_output_index)
            + var_bytes(sig)
            + var_bytes(self.public_key)
            + var_bytes(self.scheme.scheme_id.encode("utf-8"))
        )


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    generation_time: int
    txid: bytes = field(default=b"")

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.txid:
            object.__setattr__(self, "txid", compute_txid(self))

    @property
    def is_coinbase(self) -> bool:
        return not self.inputs

    def encode(self, *, blank_signatures: bool = False) -> bytes:
        parts = [u32(len(self.inputs))]
        parts += [i.encode(blank_signature=blank_signatures) for i in self.inputs]
        parts.append(u32(len(self.outputs)))
        parts += [o.encode() for o in self.outputs]
        parts.append(u64(self.generation_time))
        return b"".join(parts)

    @classmethod
    def read(cls, r: Reader) -> "Transaction":
        inputs = []
        for _ in range(r.u32()):
            prev = r.take(32)
            idx = r.u32()
            sig = r.var_bytes()
            pk = r.var_bytes()
            raw_scheme = r.var_bytes()
            try:
                scheme = schemes.scheme_from_id(raw_scheme.decode("utf-8"))
            except (UnicodeDecodeError, UnsupportedScheme) as exc:
                raise DecodeError(f"unknown scheme id {raw_scheme[:40]!r}") from exc
            inputs.append(TxInput(prev, idx, scheme, pk, sig))
        outputs = []
        for _ in range(r.u32()):
            value = r.u64()
            outputs.append(TxOutput(value, Address(r.take(32))))
        return cls(tuple(inputs), tuple(outputs), r.u64())

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        r = Reader(data)
        tx = cls.read(r)
        r.finish()
        return tx

    def with_inputs(self, inputs) -> "Transaction":
        """Copy with new inputs and a freshly computed txid."""
        return Transaction(tuple(inputs), self.outputs, self.generation_time)


def compute_txid(tx: Transaction) -> bytes:
    return hashlib.sha256(tx.encode(blank_signatures=True)).digest()


def signing_payload(tx: Transaction, index: int, spent: TxOutput) -> bytes:
    return tx.encode(blank_signatures=True) + u32(index) + spent.encode()


class UtxoSet(Mapping):
    """Immutable map from ``(txid, output_index)`` to the unspent :class:`TxOutput`."""

    def __init__(self, entries: Optional[Mapping[OutPoint, TxOutput]] = None):
        self._entries: dict[OutPoint, TxOutput] = dict(entries or {})

    def __getitem__(self, key: OutPoint) -> TxOutput:
        return self._entries[key]

    def __iter__(self) -> Iterator[OutPoint]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"UtxoSet({len(self)} outputs, total={self.total()})"

    def resolve(self, txid: bytes, index: int) -> Optional[TxOutput]:
        return self._entries.get((txid, index))

    def owned_by(self, who: Address) -> list[tuple[OutPoint, TxOutput]]:
        return sorted((k, v) for k, v in self._entries.items() if v.recipient == who)

    def total(self) -> int:
        return sum(o.value for o in self._entries.values())


def utxo_balance(utxos: Mapping[OutPoint, TxOutput], who: Address) -> int:
    return sum(o.value for o in utxos.values() if o.recipient == who)


def coinbase_transaction(recipient: Address, amount: int, time: int) -> Transaction:
    if amount <= 0:
        raise ZeroAmount("coinbase amount must be positive")
    return Transaction((), (TxOutput(amount, recipient),), time)


def build_transaction(sender: Wallet, utxos: UtxoSet, recipient: Address, amount: int,
                      time: int, *, keep_zero_change: bool = False) -> Transaction:
    """Unsigned transfer of ``amount`` from ``sender`` to ``recipient``.

    Sender-owned outputs are consumed in ascending ``(txid, index)`` order
    until they cover ``amount``. Change goes back to the sender as the first
    output; a zero change output is only emitted with ``keep_zero_change``.
    """
    if amount <= 0:
        raise ZeroAmount("transfer amount must be positive")
    owned = [(k, v) for k, v in utxos.owned_by(sender.address) if v.value > 0]
    available = sum(v.value for _, v in owned)
    if available < amount:
        raise InsufficientFunds(available, amount)

    picked, covered = [], 0
    for (txid, index), out in owned:
        if covered >= amount:
            break
        picked.append(TxInput(txid, index, sender.scheme))
        covered += out.value

    change = covered - amount
    outputs = []
    if change > 0 or keep_zero_change:
        outputs.append(TxOutput(change, sender.address))
    outputs.append(TxOutput(amount, recipient))
    return Transaction(tuple(picked), tuple(outputs), time)


def sign_transaction(sender: Wallet, tx: Transaction, resolver: Resolver) -> Transaction:
    spent = []
    for inp in tx.inputs:
        out = resolver(inp.prev_txid, inp.prev_output_index)
        if out is None:
            raise UnresolvedInput(f"no output {inp.prev_txid.hex()}:{inp.prev_output_index}")
        if out.recipient != sender.address:
            raise ForeignInput(
                f"output {inp.prev_txid.hex()[:16]}:{inp.prev_output_index} is not owned by the signer")
        if inp.scheme != sender.scheme:
            raise InvalidTransaction(f"input scheme {inp.scheme} != wallet scheme {sender.scheme}")
        spent.append(out)

    base = tx.with_inputs(
        dataclasses.replace(i, public_key=sender.public_key, signature=b"") for i in tx.inputs
    )
    signed = [
        dataclasses.replace(inp, signature=schemes.sign(sender.keypair, signing_payload(base, i, out)).data)
        for i, (inp, out) in enumerate(zip(base.inputs, spent))
    ]
    return base.with_inputs(signed)


def verify_transaction(tx: Transaction, resolver: Resolver) -> Verdict:
    """Check a transaction; the verdict's reason names the first failed check.

    Checks run in order: txid, input ownership (address), signatures, and
    value conservation. Coinbase transactions only get the structural checks.
    """
    if not tx.outputs:
        return Verdict(False, "no outputs")
    if compute_txid(tx) != tx.txid:
        return Verdict(False, "txid mismatch")
    if tx.is_coinbase:
        return VALID
    if len({i.outpoint for i in tx.inputs}) != len(tx.inputs):
        return Verdict(False, "duplicate input")

    spent = []
    for n, inp in enumerate(tx.inputs):
        out = resolver(inp.prev_txid, inp.prev_output_index)
        if out is None:
            return Verdict(False, "unresolved input", n)
        spent.append(out)
    for n, (inp, out) in enumerate(zip(tx.inputs, spent)):
        if not inp.public_key or derive_address(inp.public_key) != out.recipient:
            return Verdict(False, "address mismatch", n)
    for n, (inp, out) in enumerate(zip(tx.inputs, spent)):
        try:
            ok = schemes.verify(inp.public_key, inp.scheme, signing_payload(tx, n, out), inp.signature)
        except UnsupportedScheme:
            return Verdict(False, "unsupported scheme", n)
        if not ok:
            return Verdict(False, "signature invalid", n)
    if sum(o.value for o in spent) != sum(o.value for o in tx.outputs):
        return Verdict(False, "value not conserved")
    return VALID


def apply_transaction(utxos: UtxoSet, tx: Transaction) -> UtxoSet:
    """Return a new set with ``tx``'s inputs spent and its outputs added."""
    seen = set()
    for inp in tx.inputs:
        if inp.outpoint not in utxos or inp.outpoint in seen:
            raise DoubleSpend(f"output {inp.prev_txid.hex()[:16]}:{inp.prev_output_index} is not unspent")
        seen.add(inp.outpoint)
    verdict = verify_transaction(tx, utxos.resolve)
    if not verdict:
        raise InvalidTransaction(verdict.reason)

    if any((tx.txid, i) in utxos for i in range(len(tx.outputs))):
        raise InvalidTransaction("duplicate txid")

    entries = dict(utxos.items())
    for key in seen:
        del entries[key]
    for index, out in enumerate(tx.outputs):
        entries[(tx.txid, index)] = out
    return UtxoSet(entries)
