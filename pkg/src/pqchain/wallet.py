"""Wallets: a keypair plus the SHA-256 address of its public key."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from . import schemes
from .errors import DecodeError, EmptyKey
from .schemes import KeyPair, SchemeDescriptor


@dataclass(frozen=True, order=True)
class Address:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError(f"address must be 32 bytes, got {len(self.digest)}")

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise DecodeError(f"bad address hex: {text!r}") from exc
        if len(raw) != 32:
            raise DecodeError(f"address must be 64 hex chars, got {len(text.strip())}")
        return cls(raw)

    def hex(self) -> str:
        return self.digest.hex()

    def __bytes__(self) -> bytes:
        return self.digest

    def __str__(self) -> str:
        return self.hex()


def derive_address(public_key: bytes) -> Address:
    if not public_key:
        raise EmptyKey("cannot derive an address from an empty public key")
    return Address(hashlib.sha256(bytes(public_key)).digest())


class Wallet:
    """A keypair and its derived address.

    The address is computed from the public key on access, so the two can
    never drift apart.
    """

    def __init__(self, keypair: KeyPair):
        self.keypair = keypair

    @property
    def address(self) -> Address:
        return derive_address(self.keypair.public_key)

    @property
    def scheme(self) -> SchemeDescriptor:
        return self.keypair.scheme

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    def public_view(self) -> dict:
        """Fields safe to publish: scheme, public key and address."""
        return {
            "scheme": self.scheme.scheme_id,
            "public_key": self.public_key.hex(),
            "address": self.address.hex(),
        }

    def __repr__(self) -> str:
        return f"Wallet({self.scheme.scheme_id}, address={self.address.hex()[:16]}...)"

    # -- wallet file ------------------------------------------------------

    def dumps(self) -> str:
        return (
            f"scheme={self.scheme.scheme_id}\n"
            f"pk={self.public_key.hex()}\n"
            f"sk={bytes(self.keypair.private_key).hex()}\n"
        )

    @classmethod
    def loads(cls, text: str) -> "Wallet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) != 3:
            raise DecodeError("wallet file must have exactly 3 lines")
        fields = {}
        for expected, line in zip(("scheme", "pk", "sk"), lines):
            key, sep, value = line.partition("=")
            if not sep or key.strip() != expected:
                raise DecodeError(f"expected '{expected}=' line, got {line[:20]!r}")
            fields[expected] = value.strip()
        scheme = schemes.scheme_from_id(fields["scheme"])
        try:
            pk = bytes.fromhex(fields["pk"])
            sk = bytes.fromhex(fields["sk"])
        except ValueError as exc:
            raise DecodeError("wallet key fields must be hex") from exc
        if not pk or not sk:
            raise DecodeError("wallet keys must be non-empty")
        return cls(KeyPair(scheme, pk, bytearray(sk)))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Wallet":
        return cls.loads(Path(path).read_text())


def create_wallet(scheme: SchemeDescriptor, rng: Optional[random.Random] = None) -> Wallet:
    return Wallet(schemes.generate_keypair(scheme, rng))
