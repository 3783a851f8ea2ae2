"""Command-line entry point.

Exit codes: 0 success / valid chain, 1 domain failure (invalid chain,
failed verification, insufficient funds...), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench, schemes
from .chain import (
    Blockchain, PowConfig, load_chain, mine_block, save_chain, validate_chain,
)
from .demo import logical_clock, run_case_study, wall_clock_ms
from .errors import DecodeError, PqchainError, UnsupportedScheme
from .ledger import build_transaction, coinbase_transaction, sign_transaction, utxo_balance
from .wallet import Address, Wallet, create_wallet

log = logging.getLogger("pqchain")

DEFAULT_CHAIN = "chain.json"
DEFAULT_WALLET = "wallet.key"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _scheme_arg(text: str) -> schemes.SchemeDescriptor:
    try:
        return schemes.get_scheme(text)
    except UnsupportedScheme:
        known = ", ".join(s.param_id for s in schemes.registered_schemes())
        raise argparse.ArgumentTypeError(f"unknown scheme {text!r} (known: {known})")


def _difficulty_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(not 0 <= v <= 64 for v in values):
        raise argparse.ArgumentTypeError("difficulties must be integers in [0, 64]")
    return values


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _default_chain() -> str:
    return os.environ.get("PQCHAIN_CHAIN", DEFAULT_CHAIN)


def _rng(args) -> Optional[random.Random]:
    return random.Random(args.seed) if args.seed is not None else None


def _warn_if_vulnerable(scheme: schemes.SchemeDescriptor) -> None:
    if not scheme.quantum_safe:
        print(f"warning: {scheme.scheme_id} is quantum-vulnerable (security level: insecure)",
              file=sys.stderr)


def _emit(text: str, out: Optional[str], suffix: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.suffix in (".csv", ".json"):
        path = path.with_suffix("")
    target = path.with_name(path.name + suffix)
    target.write_text(text)
    print(f"wrote {target}", file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_keygen(args) -> int:
    wallet = create_wallet(args.scheme, _rng(args))
    out = args.out or args.wallet or DEFAULT_WALLET
    wallet.save(out)
    _warn_if_vulnerable(args.scheme)
    print(wallet.address.hex())
    return EXIT_OK


def cmd_demo(args) -> int:
    _warn_if_vulnerable(args.scheme)
    rng = _rng(args)
    if rng is not None and not schemes.seeds_keygen(args.scheme):
        print(f"note: {args.scheme.param_id} key generation ignores --seed", file=sys.stderr)
    elif rng is not None and not schemes.signs_deterministically(args.scheme):
        print(f"note: {args.scheme.param_id} signatures are randomized; wallets and txids "
              "repeat under --seed but later block hashes do not", file=sys.stderr)
    clock = logical_clock() if args.seed is not None else wall_clock_ms
    config = PowConfig(args.difficulty, args.polarity)

    def show_block(label, block):
        print(f"  block {label}: nonce r={block.nonce} hash={block.block_hash.hex()}")

    print(f"scheme {args.scheme.scheme_id} (level {args.scheme.security_level}), "
          f"difficulty L={config.difficulty_bits} ({config.polarity.value})")
    study = run_case_study(args.scheme, config, rng, clock, on_block=show_block)

    print("wallets:")
    for name, w in study.wallets.items():
        print(f"  {name:<6} {w.address.hex()}")
    print("transactions:")
    for label, tx in study.transactions.items():
        outs = ", ".join(f"#{n + 1} {study.owner(o.recipient)}={o.value}"
                         for n, o in enumerate(tx.outputs))
        print(f"  {label:<6} txid={tx.txid.hex()} inputs={len(tx.inputs)} outputs: {outs}")
    print(f"chain: {len(study.chain)} blocks, {study.report}")
    print("balances: " + ", ".join(f"{k} {v}" for k, v in study.balances().items()))

    chain_path = args.chain or _default_chain()
    save_chain(study.chain, chain_path)
    print(f"chain written to {chain_path}", file=sys.stderr)
    return EXIT_OK if study.report else EXIT_FAIL


def cmd_mine(args) -> int:
    wallet = Wallet.load(args.wallet or DEFAULT_WALLET)
    chain_path = Path(args.chain or _default_chain())
    now = wall_clock_ms()
    if not chain_path.exists():
        amount = args.amount if args.amount is not None else 50
        chain = Blockchain(PowConfig(args.difficulty, args.polarity))
        block = mine_block(chain, [coinbase_transaction(wallet.address, amount, now)], now)
        print(f"genesis: {amount} to {wallet.address.hex()}")
    else:
        chain = load_chain(chain_path)
        report = validate_chain(chain)
        if not report:
            print(f"refusing to extend an invalid chain: {report}", file=sys.stderr)
            return EXIT_FAIL
        if args.to is None or args.amount is None:
            raise UsageError("extending a chain needs --to and --amount")
        recipient = Address.from_hex(args.to)
        tx = build_transaction(wallet, chain.utxos, recipient, args.amount, now)
        tx = sign_transaction(wallet, tx, chain.utxos.resolve)
        block = mine_block(chain, [tx], now)
        print(f"txid {tx.txid.hex()}")
    save_chain(chain, chain_path)
    print(f"block {len(chain) - 1}: nonce r={block.nonce} hash={block.block_hash.hex()}")
    print(f"balance {wallet.address.hex()[:16]}...: {utxo_balance(chain.utxos, wallet.address)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    chain = load_chain(args.chain or _default_chain())
    report = validate_chain(chain)
    print(f"{len(chain)} blocks: {report}")
    return EXIT_OK if report else EXIT_FAIL


def cmd_bench(args) -> int:
    rng = _rng(args)
    if args.suite == "schemes":
        selected = args.scheme or None
        rows = bench.bench_schemes(selected, args.iters, args.warmup, args.message_size, rng)
        text_csv, text_json = bench.schemes_csv(rows), bench.schemes_json(rows)
    elif args.suite == "pow":
        rows = bench.bench_pow(args.difficulty_list, args.polarity, args.trials,
                               allow_large=args.allow_large, rng=rng)
        text_csv, text_json = bench.pow_csv(rows), bench.pow_json(rows)
    else:
        rep = bench.prefix_distribution(args.trials, rng)
        text_csv, text_json = bench.distribution_csv(rep), bench.distribution_json(rep)

    if args.out:
        _emit(text_csv, args.out, ".csv")
        _emit(text_json, args.out, ".json")
    else:
        _emit(text_json if args.format == "json" else text_csv, None, "")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pqchain",
                                description="Post-quantum signature blockchain toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, scheme_default="dilithium2"):
        sp.add_argument("--seed", type=int, default=None, help="seed keygen/content randomness")
        if scheme_default is not None:
            sp.add_argument("--scheme", type=_scheme_arg, default=_scheme_arg(scheme_default))

    def pow_flags(sp, default_l=8):
        sp.add_argument("--difficulty", "-L", type=_nonneg, default=default_l)
        sp.add_argument("--polarity", choices=("zeros", "ones"), default="zeros")

    sp = sub.add_parser("keygen", help="create a wallet file and print its address")
    common(sp)
    sp.add_argument("--out")
    sp.add_argument("--wallet")
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("demo", help="run the Alice/Bob/Cara/David transfer scenario")
    common(sp)
    pow_flags(sp)
    sp.add_argument("--chain")
    sp.set_defaults(func=cmd_demo)

    sp = sub.add_parser("mine", help="create a chain (genesis) or mine a transfer into it")
    pow_flags(sp)
    sp.add_argument("--wallet")
    sp.add_argument("--chain")
    sp.add_argument("--to", help="recipient address (64 hex chars)")
    sp.add_argument("--amount", type=int)
    sp.set_defaults(func=cmd_mine)

    sp = sub.add_parser("validate", help="validate a chain file")
    sp.add_argument("--chain")
    sp.set_defaults(func=cmd_validate)

    bp = sub.add_parser("bench", help="run benchmarks")
    bsub = bp.add_subparsers(dest="suite", required=True)

    def bench_common(sp):
        common(sp, scheme_default=None)
        sp.add_argument("--out", help="write <out>.csv and <out>.json instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.set_defaults(func=cmd_bench)

    sp = bsub.add_parser("schemes", help="keygen/sign/verify timings per scheme")
    bench_common(sp)
    sp.add_argument("--scheme", type=_scheme_arg, action="append",
                    help="restrict to this scheme (repeatable)")
    sp.add_argument("--iters", type=int, default=100)
    sp.add_argument("--warmup", type=_nonneg, default=10)
    sp.add_argument("--message-size", type=_nonneg, default=256)

    sp = bsub.add_parser("pow", help="mean proof-of-work time per difficulty")
    bench_common(sp)
    sp.add_argument("--difficulty", "-L", "--L", dest="difficulty_list", type=_difficulty_list,
                    default=[4, 8, 12, 16, 20])
    sp.add_argument("--polarity", choices=("zeros", "ones"), default="zeros")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--allow-large", action="store_true", help="permit L > 24")

    sp = bsub.add_parser("dist", help="first-byte uniformity of single SHA-256 digests")
    bench_common(sp)
    sp.add_argument("--trials", type=int, default=10000)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PqchainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
