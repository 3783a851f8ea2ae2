"""Four-party transfer scenario: Alice and Cara fund Bob, who pays David.

Starting state: Alice holds 5, Cara holds 7, Bob and David hold nothing.
Transfers, each mined into its own block after a coinbase-only genesis:

    t_j    Alice -> Bob   5
    t_j+1  Cara  -> Bob   7
    t_j+2  Bob   -> David 12   (spends both of Bob's outputs)

Spenders keep an explicit zero-valued change output, so every transfer has
two outputs: the sender's remaining balance first, then the payment.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .chain import Blockchain, Block, ChainReport, PowConfig, mine_block, validate_chain
from .ledger import (
    Transaction, build_transaction, coinbase_transaction, sign_transaction, utxo_balance,
)
from .schemes import SchemeDescriptor
from .wallet import Wallet, create_wallet

PARTIES = ("Alice", "Bob", "Cara", "David")
INITIAL_FUNDS = (("Alice", 5), ("Cara", 7))
TRANSFERS = (("t_j", "Alice", "Bob", 5), ("t_j+1", "Cara", "Bob", 7), ("t_j+2", "Bob", "David", 12))

# fixed epoch for seeded runs, ms
SEEDED_EPOCH_MS = 1_700_000_000_000


def wall_clock_ms() -> int:
    return time.time_ns() // 1_000_000


def logical_clock(start: int = SEEDED_EPOCH_MS, step: int = 1000) -> Callable[[], int]:
    now = start - step

    def tick() -> int:
        nonlocal now
        now += step
        return now
    return tick


@dataclass
class CaseStudy:
    wallets: dict[str, Wallet]
    chain: Blockchain
    transactions: dict[str, Transaction] = field(default_factory=dict)
    report: Optional[ChainReport] = None

    def balances(self) -> dict[str, int]:
        return {name: utxo_balance(self.chain.utxos, w.address) for name, w in self.wallets.items()}

    def owner(self, address) -> str:
        for name, w in self.wallets.items():
            if w.address == address:
                return name
        return address.hex()[:16]


def run_case_study(scheme: SchemeDescriptor, pow_config: PowConfig = PowConfig(),
                   rng: Optional[random.Random] = None,
                   clock: Callable[[], int] = wall_clock_ms,
                   on_block: Optional[Callable[[str, Block], None]] = None) -> CaseStudy:
    wallets = {name: create_wallet(scheme, rng) for name in PARTIES}
    study = CaseStudy(wallets, Blockchain(pow_config))

    coinbases = []
    for (name, amount), label in zip(INITIAL_FUNDS, ("t_a", "t_c")):
        tx = coinbase_transaction(wallets[name].address, amount, clock())
        study.transactions[label] = tx
        coinbases.append(tx)
    block = mine_block(study.chain, coinbases, clock())
    if on_block:
        on_block("genesis", block)

    for label, sender, recipient, amount in TRANSFERS:
        w = wallets[sender]
        tx = build_transaction(w, study.chain.utxos, wallets[recipient].address, amount, clock(),
                               keep_zero_change=True)
        tx = sign_transaction(w, tx, study.chain.utxos.resolve)
        study.transactions[label] = tx
        block = mine_block(study.chain, [tx], clock())
        if on_block:
            on_block(label, block)

    study.report = validate_chain(study.chain)
    return study
