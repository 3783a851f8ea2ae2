import dataclasses
import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from pqchain import schemes
from pqchain.errors import (
    DecodeError, DoubleSpend, ForeignInput, InsufficientFunds, InvalidTransaction,
    UnresolvedInput, ZeroAmount,
)
from pqchain.ledger import (
    Transaction, TxInput, TxOutput, UtxoSet, apply_transaction, build_transaction,
    coinbase_transaction, compute_txid, sign_transaction, utxo_balance, verify_transaction,
)
from pqchain.wallet import Address, create_wallet

from conftest import available_ids
from sha256_ref import sha256

T0 = 1_700_000_000_000


def golden_tx(dilithium2):
    inp = TxInput(bytes(32), 0, dilithium2, public_key=b"\x01\x02")
    return Transaction((inp,), (TxOutput(5, Address(b"\xaa" * 32)),), T0)


def test_golden_encoding_and_txid(golden, dilithium2):
    tx = golden_tx(dilithium2)
    assert tx.encode().hex() == golden["tx_bytes"]
    assert tx.txid.hex() == golden["txid"]
    assert compute_txid(tx) == sha256(bytes.fromhex(golden["tx_bytes"]))


def test_txid_ignores_signatures(dilithium2):
    tx = golden_tx(dilithium2)
    signed = tx.with_inputs([dataclasses.replace(tx.inputs[0], signature=b"sig!")])
    assert signed.txid == tx.txid
    assert signed.encode() != tx.encode()


def test_txid_changes_with_value(dilithium2):
    tx = golden_tx(dilithium2)
    other = Transaction(tx.inputs, (TxOutput(6, Address(b"\xaa" * 32)),), T0)
    assert other.txid != tx.txid


def test_decode_roundtrip(case_study):
    for tx in case_study.transactions.values():
        back = Transaction.decode(tx.encode())
        assert back == tx
        assert back.encode() == tx.encode()


def test_decode_rejects_garbage(golden):
    raw = bytes.fromhex(golden["tx_bytes"])
    with pytest.raises(DecodeError):
        Transaction.decode(raw[:-1])
    with pytest.raises(DecodeError):
        Transaction.decode(raw + b"\x00")


def test_coinbase():
    addr = Address(b"\x01" * 32)
    tx = coinbase_transaction(addr, 5, T0)
    assert tx.is_coinbase and tx.outputs == (TxOutput(5, addr),)
    assert verify_transaction(tx, lambda *_: None)
    with pytest.raises(ZeroAmount):
        coinbase_transaction(addr, 0, T0)


@pytest.fixture(scope="module")
def people():
    scheme = schemes.get_scheme("dilithium2")
    rng = random.Random(11)
    return {n: create_wallet(scheme, rng) for n in ("Alice", "Bob", "Cara", "David")}


@pytest.fixture
def funded(people):
    utxos = UtxoSet()
    for name, amount in (("Alice", 5), ("Cara", 7)):
        utxos = apply_transaction(utxos, coinbase_transaction(people[name].address, amount, T0))
    return utxos


def transfer(utxos, sender, recipient, amount, t, **kw):
    tx = build_transaction(sender, utxos, recipient.address, amount, t, **kw)
    return sign_transaction(sender, tx, utxos.resolve)


def test_initial_balances(people, funded):
    bal = {n: utxo_balance(funded, w.address) for n, w in people.items()}
    assert bal == {"Alice": 5, "Bob": 0, "Cara": 7, "David": 0}
    assert utxo_balance(UtxoSet(), people["Alice"].address) == 0


def test_case_study_sequence(people, funded):
    a, b, c, d = (people[n] for n in ("Alice", "Bob", "Cara", "David"))
    t_j = transfer(funded, a, b, 5, T0 + 1)
    assert len(t_j.inputs) == 1 and t_j.outputs == (TxOutput(5, b.address),)
    assert verify_transaction(t_j, funded.resolve)
    u1 = apply_transaction(funded, t_j)
    t_j1 = transfer(u1, c, b, 7, T0 + 2)
    u2 = apply_transaction(u1, t_j1)
    t_j2 = transfer(u2, b, d, 12, T0 + 3)
    assert len(t_j2.inputs) == 2
    assert t_j2.outputs == (TxOutput(12, d.address),)
    for inp in t_j2.inputs:
        assert inp.public_key == b.public_key
    assert verify_transaction(t_j2, u2.resolve)
    u3 = apply_transaction(u2, t_j2)
    bal = {n: utxo_balance(u3, w.address) for n, w in people.items()}
    assert bal == {"Alice": 0, "Bob": 0, "Cara": 0, "David": 12}
    assert u3.total() == funded.total()


def test_explicit_zero_change(people, funded):
    tx = transfer(funded, people["Alice"], people["Bob"], 5, T0, keep_zero_change=True)
    assert tx.outputs == (TxOutput(0, people["Alice"].address), TxOutput(5, people["Bob"].address))
    assert verify_transaction(tx, funded.resolve)


def test_partial_spend_has_change(people, funded):
    tx = transfer(funded, people["Cara"], people["David"], 3, T0)
    assert tx.outputs == (TxOutput(4, people["Cara"].address), TxOutput(3, people["David"].address))


def test_insufficient_funds(people, funded):
    with pytest.raises(InsufficientFunds) as exc:
        build_transaction(people["Alice"], funded, people["Bob"].address, 6, T0)
    assert (exc.value.available, exc.value.requested) == (5, 6)
    with pytest.raises(ZeroAmount):
        build_transaction(people["Alice"], funded, people["Bob"].address, 0, T0)


def test_foreign_and_unresolved_inputs(people, funded):
    tx = build_transaction(people["Alice"], funded, people["Bob"].address, 5, T0)
    with pytest.raises(ForeignInput):
        sign_transaction(people["David"], tx, funded.resolve)
    with pytest.raises(UnresolvedInput):
        sign_transaction(people["Alice"], tx, UtxoSet().resolve)


def test_scheme_mismatch_rejected(people, funded, p256):
    tx = build_transaction(people["Alice"], funded, people["Bob"].address, 5, T0)
    bad = tx.with_inputs([dataclasses.replace(i, scheme=p256) for i in tx.inputs])
    with pytest.raises(InvalidTransaction):
        sign_transaction(people["Alice"], bad, funded.resolve)


def test_verify_tamper_reasons(people, funded):
    a, b, c, d = (people[n] for n in ("Alice", "Bob", "Cara", "David"))
    u = apply_transaction(funded, transfer(funded, a, b, 5, T0))
    u = apply_transaction(u, transfer(u, c, b, 7, T0))
    tx = transfer(u, b, d, 12, T0 + 5)

    bumped = dataclasses.replace(tx, outputs=(TxOutput(13, d.address),))
    v = verify_transaction(bumped, u.resolve)
    assert not v and v.reason == "txid mismatch"

    swapped = tx.with_inputs([dataclasses.replace(tx.inputs[0], public_key=a.public_key),
                              tx.inputs[1]])
    v = verify_transaction(swapped, u.resolve)
    assert not v and v.reason == "address mismatch" and v.index == 0

    sigs_swapped = tx.with_inputs([
        dataclasses.replace(tx.inputs[0], signature=tx.inputs[1].signature),
        dataclasses.replace(tx.inputs[1], signature=tx.inputs[0].signature),
    ])
    v = verify_transaction(sigs_swapped, u.resolve)
    assert not v and v.reason == "signature invalid"

    v = verify_transaction(tx, UtxoSet().resolve)
    assert not v and v.reason == "unresolved input"


def test_inflation_rejected(people, funded):
    a, b = people["Alice"], people["Bob"]
    tx = build_transaction(a, funded, b.address, 5, T0)
    inflated = Transaction(tx.inputs, (TxOutput(9, b.address),), T0)
    signed = sign_transaction(a, inflated, funded.resolve)
    v = verify_transaction(signed, funded.resolve)
    assert not v and v.reason == "value not conserved"
    with pytest.raises(InvalidTransaction):
        apply_transaction(funded, signed)


def test_double_spend(people, funded):
    tx = transfer(funded, people["Alice"], people["Bob"], 5, T0)
    after = apply_transaction(funded, tx)
    with pytest.raises(DoubleSpend):
        apply_transaction(after, tx)
    dup = tx.with_inputs([tx.inputs[0], tx.inputs[0]])
    with pytest.raises(DoubleSpend):
        apply_transaction(funded, dup)


def test_out_of_order_application(people, funded):
    a, b, c, d = (people[n] for n in ("Alice", "Bob", "Cara", "David"))
    u1 = apply_transaction(funded, transfer(funded, a, b, 5, T0))
    u2 = apply_transaction(u1, transfer(u1, c, b, 7, T0))
    t_j2 = transfer(u2, b, d, 12, T0)
    with pytest.raises(DoubleSpend):
        apply_transaction(funded, t_j2)


def test_signature_not_replayable_across_inputs(people):
    """Two equal-valued outputs: a signature for input 0 must not verify as input 1."""
    a, b = people["Alice"], people["Bob"]
    u = UtxoSet()
    for t in (T0, T0 + 1):
        u = apply_transaction(u, coinbase_transaction(a.address, 4, t))
    tx = transfer(u, a, b, 8, T0 + 2)
    crossed = tx.with_inputs([
        tx.inputs[0], dataclasses.replace(tx.inputs[1], signature=tx.inputs[0].signature)])
    assert not verify_transaction(crossed, u.resolve)


@pytest.mark.parametrize("param", available_ids())
def test_sign_verify_closure_every_scheme(param):
    scheme = schemes.get_scheme(param)
    a, b = create_wallet(scheme), create_wallet(scheme)
    u = apply_transaction(UtxoSet(), coinbase_transaction(a.address, 10, T0))
    tx = transfer(u, a, b, 4, T0 + 1)
    assert verify_transaction(tx, u.resolve)
    assert Transaction.decode(tx.encode()).txid == tx.txid


@settings(max_examples=40, deadline=None)
@given(amounts=st.lists(st.integers(min_value=1, max_value=1000), min_size=1, max_size=6),
       data=st.data())
def test_property_conservation(people, amounts, data):
    a, b = people["Alice"], people["Bob"]
    u = UtxoSet()
    for n, amt in enumerate(amounts):
        u = apply_transaction(u, coinbase_transaction(a.address, amt, T0 + n))
    total = u.total()
    pay = data.draw(st.integers(min_value=1, max_value=sum(amounts)))
    tx = transfer(u, a, b, pay, T0 + 99)
    after = apply_transaction(u, tx)
    assert after.total() == total
    assert utxo_balance(after, b.address) == pay
    assert utxo_balance(after, a.address) == sum(amounts) - pay
    spent = {i.outpoint for i in tx.inputs}
    assert not spent & set(after)


def test_decode_rejects_non_canonical_scheme_id(golden):
    raw = bytes.fromhex(golden["tx_bytes"])
    assert b"Dilithium/dilithium2" in raw
    for variant in (b"dilithium/dilithium2", b"Dilithium/Dilithium2", b"DILITHIUM/DILITHIUM2"):
        with pytest.raises(DecodeError):
            Transaction.decode(raw.replace(b"Dilithium/dilithium2", variant))
