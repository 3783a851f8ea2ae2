"""Signature-scheme registry.

Every signature algorithm the chain can use is described by a
:class:`SchemeDescriptor` and driven through one small backend object with
``keygen`` / ``sign`` / ``verify``. Key and signature encodings are whatever
the backend produces; the rest of the package treats them as opaque bytes.

Backends:

* ECDSA (P-256/384/521) and ML-DSA (dilithium2/3/5) come from ``cryptography``.
* Falcon and SPHINCS+ come from ``pqcrypto`` (PQClean bindings) when it is
  installed. Without it those rows are simply absent from :func:`list_schemes`.
"""

from __future__ import annotations

import importlib
import logging
import random
import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Protocol

from .errors import BackendFailure, UnsupportedScheme

log = logging.getLogger(__name__)


class Family(str, Enum):
    ECDSA = "ECDSA"
    DILITHIUM = "Dilithium"
    FALCON = "Falcon"
    SPHINCS = "SPHINCSplus"


_FAMILY_ORDER = {f: i for i, f in enumerate(Family)}


@dataclass(frozen=True)
class SchemeDescriptor:
    family: Family
    param_id: str
    security_level: int
    aliases: tuple[str, ...] = field(default=(), compare=False, repr=False)

    @property
    def quantum_safe(self) -> bool:
        return self.security_level > 0

    @property
    def scheme_id(self) -> str:
        """Stable text identifier, ``<family>/<param_id>``."""
        return f"{self.family.value}/{self.param_id}"

    def __str__(self) -> str:
        return self.scheme_id


@dataclass(eq=False)
class KeyPair:
    scheme: SchemeDescriptor
    public_key: bytes
    private_key: bytearray = field(repr=False)

    def __post_init__(self):
        self.public_key = bytes(self.public_key)
        self.private_key = bytearray(self.private_key)

    def wipe(self) -> None:
        """Zero the private key buffer in place."""
        for i in range(len(self.private_key)):
            self.private_key[i] = 0

    def __del__(self):
        try:
            self.wipe()
        except Exception:
            pass


@dataclass(frozen=True)
class SignatureBytes:
    scheme: SchemeDescriptor
    data: bytes

    def __bytes__(self) -> bytes:
        return self.data

    def __len__(self) -> int:
        return len(self.data)


class Backend(Protocol):
    deterministic_signing: bool

    def keygen(self, rng: Optional[random.Random]) -> tuple[bytes, bytes]: ...
    def sign(self, private_key: bytes, message: bytes) -> bytes: ...
    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool: ...


# --------------------------------------------------------------------------
# backends
# --------------------------------------------------------------------------

class _EcdsaBackend:
    def __init__(self, curve_name: str, hash_name: str):
        from cryptography.hazmat.backends.openssl import backend as ossl
        from cryptography.hazmat.primitives import hashes
        from cryptography.hazmat.primitives.asymmetric import ec

        self._ec = ec
        self._curve = getattr(ec, curve_name)()
        self._hash = getattr(hashes, hash_name)
        self.deterministic_signing = ossl.ecdsa_deterministic_supported()
        self._scalar_len = (self._curve.key_size + 7) // 8
        self._order = _CURVE_ORDERS[curve_name]

    def _algorithm(self):
        if self.deterministic_signing:
            return self._ec.ECDSA(self._hash(), deterministic_signing=True)
        return self._ec.ECDSA(self._hash())

    def keygen(self, rng):
        from cryptography.hazmat.primitives import serialization

        if rng is None:
            sk = self._ec.generate_private_key(self._curve)
        else:
            sk = self._ec.derive_private_key(rng.randrange(1, self._order), self._curve)
        pk = sk.public_key().public_bytes(
            serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
        )
        scalar = sk.private_numbers().private_value.to_bytes(self._scalar_len, "big")
        return pk, scalar

    def sign(self, private_key, message):
        sk = self._ec.derive_private_key(int.from_bytes(private_key, "big"), self._curve)
        return sk.sign(message, self._algorithm())

    def verify(self, public_key, message, signature):
        pk = self._ec.EllipticCurvePublicKey.from_encoded_point(self._curve, public_key)
        pk.verify(signature, message, self._algorithm())
        return True


# group orders, needed only to draw a seeded scalar in range
_CURVE_ORDERS = {
    "SECP256R1": 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
    "SECP384R1": int(
        "FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFC7634D81F4372DDF"
        "581A0DB248B0A77AECEC196ACCC52973", 16),
    "SECP521R1": int(
        "01FF" + "F" * 56 + "FFFFFFFA"
        "51868783BF2F966B7FCC0148F709A5D03BB5C9B8899C47AEBB6FB71E91386409", 16),
}


class _MlDsaBackend:
    # the OpenSSL binding only offers hedged signing
    deterministic_signing = False

    def __init__(self, class_prefix: str):
        from cryptography.hazmat.backends.openssl import backend as ossl
        from cryptography.hazmat.primitives.asymmetric import mldsa

        if not ossl.mldsa_supported():
            raise UnsupportedScheme(f"{class_prefix} not supported by OpenSSL build")
        self._priv = getattr(mldsa, class_prefix + "PrivateKey")
        self._pub = getattr(mldsa, class_prefix + "PublicKey")

    def keygen(self, rng):
        seed = rng.randbytes(32) if rng is not None else secrets.token_bytes(32)
        sk = self._priv.from_seed_bytes(seed)
        return sk.public_key().public_bytes_raw(), sk.private_bytes_raw()

    def sign(self, private_key, message):
        return self._priv.from_seed_bytes(bytes(private_key)).sign(message)

    def verify(self, public_key, message, signature):
        self._pub.from_public_bytes(public_key).verify(signature, message)
        return True


class _PqcryptoBackend:
    """PQClean reference code via ``pqcrypto``. Key generation cannot be seeded."""

    deterministic_signing = False

    def __init__(self, *module_names: str):
        last: Exception | None = None
        for name in module_names:
            try:
                self._mod = importlib.import_module(f"pqcrypto.sign.{name}")
                break
            except ImportError as exc:
                last = exc
        else:
            raise UnsupportedScheme(f"pqcrypto module unavailable: {module_names}") from last

    def keygen(self, rng):
        if rng is not None:
            log.debug("pqcrypto keygen ignores the seeded rng")
        pk, sk = self._mod.generate_keypair()
        return bytes(pk), bytes(sk)

    def sign(self, private_key, message):
        return bytes(self._mod.sign(bytes(private_key), message))

    def verify(self, public_key, message, signature):
        # older releases raise on failure instead of returning False
        return bool(self._mod.verify(public_key, message, signature))


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------

def _d(family, param_id, level, *aliases):
    return SchemeDescriptor(family, param_id, level, tuple(aliases))


_REGISTRY: list[tuple[SchemeDescriptor, Callable[[], Backend]]] = [
    (_d(Family.ECDSA, "P-256", 0, "ecdsa-p256", "secp256r1"),
     lambda: _EcdsaBackend("SECP256R1", "SHA256")),
    (_d(Family.ECDSA, "P-384", 0, "ecdsa-p384", "secp384r1"),
     lambda: _EcdsaBackend("SECP384R1", "SHA384")),
    (_d(Family.ECDSA, "P-521", 0, "ecdsa-p521", "secp521r1"),
     lambda: _EcdsaBackend("SECP521R1", "SHA512")),
    (_d(Family.DILITHIUM, "dilithium2", 2, "dilithium2_aes", "ml-dsa-44"),
     lambda: _MlDsaBackend("MLDSA44")),
    (_d(Family.DILITHIUM, "dilithium3", 3, "dilithium3_aes", "ml-dsa-65"),
     lambda: _MlDsaBackend("MLDSA65")),
    (_d(Family.DILITHIUM, "dilithium5", 5, "dilithium5_aes", "ml-dsa-87"),
     lambda: _MlDsaBackend("MLDSA87")),
    (_d(Family.FALCON, "falcon_512", 1, "falcon-512"),
     lambda: _PqcryptoBackend("falcon_512")),
    (_d(Family.FALCON, "falcon_1024", 5, "falcon-1024"),
     lambda: _PqcryptoBackend("falcon_1024")),
    (_d(Family.SPHINCS, "shake_128f", 1, "sphincs-shake-128f", "slh-dsa-shake-128f"),
     lambda: _PqcryptoBackend("sphincs_shake_128f_simple", "sphincs_shake_128f")),
    (_d(Family.SPHINCS, "shake_192f", 3, "sphincs-shake-192f", "slh-dsa-shake-192f"),
     lambda: _PqcryptoBackend("sphincs_shake_192f_simple", "sphincs_shake_192f")),
    (_d(Family.SPHINCS, "shake_256f", 5, "sphincs-shake-256f", "slh-dsa-shake-256f"),
     lambda: _PqcryptoBackend("sphincs_shake_256f_simple", "sphincs_shake_256f")),
]

_FACTORIES = {desc: factory for desc, factory in _REGISTRY}
_backends: dict[SchemeDescriptor, Optional[Backend]] = {}


def _sort_key(s: SchemeDescriptor):
    return (_FAMILY_ORDER[s.family], s.security_level, s.param_id)


def _backend(scheme: SchemeDescriptor) -> Backend:
    if scheme not in _FACTORIES:
        raise UnsupportedScheme(f"unregistered scheme {scheme}")
    if scheme not in _backends:
        try:
            _backends[scheme] = _FACTORIES[scheme]()
        except (UnsupportedScheme, ImportError, AttributeError) as exc:
            log.info("backend for %s unavailable: %s", scheme, exc)
            _backends[scheme] = None
    backend = _backends[scheme]
    if backend is None:
        raise UnsupportedScheme(f"no backend for {scheme} in this build")
    return backend


def registered_schemes() -> list[SchemeDescriptor]:
    """Every registry row, available or not."""
    return sorted(_FACTORIES, key=_sort_key)


def is_available(scheme: SchemeDescriptor) -> bool:
    try:
        _backend(scheme)
    except UnsupportedScheme:
        return False
    return True


def signs_deterministically(scheme: SchemeDescriptor) -> bool:
    """Whether equal keys and messages always produce equal signature bytes."""
    return _backend(scheme).deterministic_signing


def seeds_keygen(scheme: SchemeDescriptor) -> bool:
    return not isinstance(_backend(scheme), _PqcryptoBackend)


def list_schemes() -> list[SchemeDescriptor]:
    """Registered schemes whose backend can be loaded, ordered by family then level."""
    return [s for s in registered_schemes() if is_available(s)]


def get_scheme(name: str) -> SchemeDescriptor:
    """Look a scheme up by param id, alias or ``family/param_id`` (case-insensitive)."""
    key = name.strip().lower()
    for s in _FACTORIES:
        names = {s.param_id.lower(), s.scheme_id.lower(), *(a.lower() for a in s.aliases)}
        if key in names:
            return s
    raise UnsupportedScheme(f"unknown scheme {name!r}")


def scheme_from_id(scheme_id: str) -> SchemeDescriptor:
    """Exact ``family/param_id`` lookup used when decoding; no aliases, no case folding."""
    for s in _FACTORIES:
        if s.scheme_id == scheme_id:
            return s
    raise UnsupportedScheme(f"unknown scheme id {scheme_id!r}")


def generate_keypair(scheme: SchemeDescriptor, rng: Optional[random.Random] = None) -> KeyPair:
    backend = _backend(scheme)
    try:
        pk, sk = backend.keygen(rng)
    except Exception as exc:
        raise BackendFailure(f"{scheme} keygen failed: {exc}") from exc
    return KeyPair(scheme, pk, bytearray(sk))


def sign(keypair: KeyPair, message: bytes) -> SignatureBytes:
    backend = _backend(keypair.scheme)
    try:
        sig = backend.sign(bytes(keypair.private_key), bytes(message))
    except Exception as exc:
        raise BackendFailure(f"{keypair.scheme} signing failed: {exc}") from exc
    if not sig:
        raise BackendFailure(f"{keypair.scheme} produced an empty signature")
    return SignatureBytes(keypair.scheme, bytes(sig))


def verify(public_key: bytes, scheme: SchemeDescriptor, message: bytes,
           signature: SignatureBytes | bytes) -> bool:
    """True iff ``signature`` is valid. Malformed input of any kind yields False."""
    backend = _backend(scheme)
    if isinstance(signature, SignatureBytes):
        if signature.scheme != scheme:
            return False
        signature = signature.data
    if not signature or not public_key:
        return False
    try:
        return backend.verify(bytes(public_key), bytes(message), bytes(signature))
    except Exception:
        return False
