"""Timing harness for signature schemes and proof of work, plus hash-prefix statistics.

Timings use ``time.perf_counter_ns`` around each individual operation and are
reported as arithmetic means in milliseconds. Loops are single-threaded on
purpose; run rows in separate processes if you want parallelism.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

from . import schemes
from .chain import PowConfig, Polarity, ZERO_HASH, canonical_block_bytes, pow_search
from .encoding import u64
from .errors import BackendFailure, IterationCapExceeded
from .ledger import coinbase_transaction
from .schemes import SchemeDescriptor
from .stats import chi_square_uniform
from .wallet import Address

MIN_ITERATIONS = 30
MAX_DEFAULT_DIFFICULTY = 24

SCHEME_COLUMNS = ("scheme", "param", "security_level", "keygen_ms", "sign_ms", "verify_ms")
POW_COLUMNS = ("L", "mean_ms", "mean_iterations")


@dataclass(frozen=True)
class Timing:
    mean_ms: float
    min_ms: float
    max_ms: float
    samples: int

    @classmethod
    def from_ns(cls, samples: Sequence[int]) -> "Timing":
        return cls(sum(samples) / len(samples) / 1e6, min(samples) / 1e6, max(samples) / 1e6,
                   len(samples))


@dataclass
class SchemeBenchRow:
    scheme: SchemeDescriptor
    iterations: int
    warmup: int
    available: bool
    keygen: Optional[Timing] = None
    sign: Optional[Timing] = None
    verify: Optional[Timing] = None

    @property
    def keygen_ms(self) -> Optional[float]:
        return self.keygen.mean_ms if self.keygen else None

    @property
    def sign_ms(self) -> Optional[float]:
        return self.sign.mean_ms if self.sign else None

    @property
    def verify_ms(self) -> Optional[float]:
        return self.verify.mean_ms if self.verify else None

    def as_row(self) -> dict:
        def ms(v):
            return round(v, 4) if v is not None else "unavailable"

        return {
            "scheme": self.scheme.family.value,
            "param": self.scheme.param_id,
            "security_level": self.scheme.security_level,
            "keygen_ms": ms(self.keygen_ms),
            "sign_ms": ms(self.sign_ms),
            "verify_ms": ms(self.verify_ms),
        }


@dataclass
class PowBenchRow:
    difficulty_bits: int
    polarity: Polarity
    mean_ms: float
    mean_iterations: float
    trials: int
    failures: int = 0

    def as_row(self) -> dict:
        return {
            "L": self.difficulty_bits,
            "mean_ms": round(self.mean_ms, 4),
            "mean_iterations": round(self.mean_iterations, 2),
        }


@dataclass
class DistributionReport:
    trials: int
    bucket_counts: list[int]
    chi_square: float
    p_value: float
    all_zeros_freq_L4: float
    all_ones_freq_L4: float
    all_zeros_freq_L8: float
    all_ones_freq_L8: float
    stderr_L4: float = field(init=False)
    stderr_L8: float = field(init=False)

    def __post_init__(self):
        self.stderr_L4 = binomial_stderr(1 / 16, self.trials)
        self.stderr_L8 = binomial_stderr(1 / 256, self.trials)


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


# --------------------------------------------------------------------------
# signature schemes
# --------------------------------------------------------------------------

def bench_scheme(scheme: SchemeDescriptor, iterations: int = 100, warmup: int = 10,
                 message_size: int = 256, rng: Optional[random.Random] = None) -> SchemeBenchRow:
    """Mean keygen / sign / verify time over ``iterations`` fresh keys and messages."""
    if iterations < MIN_ITERATIONS:
        raise ValueError(f"iterations must be >= {MIN_ITERATIONS}")
    if not schemes.is_available(scheme):
        return SchemeBenchRow(scheme, iterations, warmup, available=False)
    rng = rng or random.Random()
    clock = time.perf_counter_ns

    for _ in range(warmup):
        kp = schemes.generate_keypair(scheme)
        msg = rng.randbytes(message_size)
        schemes.verify(kp.public_key, scheme, msg, schemes.sign(kp, msg))

    keygen, sign, verify = [], [], []
    for _ in range(iterations):
        msg = rng.randbytes(message_size)
        t0 = clock()
        kp = schemes.generate_keypair(scheme)
        t1 = clock()
        sig = schemes.sign(kp, msg)
        t2 = clock()
        ok = schemes.verify(kp.public_key, scheme, msg, sig)
        t3 = clock()
        if not ok:
            raise BackendFailure(f"{scheme}: fresh signature failed to verify")
        keygen.append(t1 - t0)
        sign.append(t2 - t1)
        verify.append(t3 - t2)
    return SchemeBenchRow(scheme, iterations, warmup, True,
                          Timing.from_ns(keygen), Timing.from_ns(sign), Timing.from_ns(verify))


def bench_schemes(selected: Optional[Iterable[SchemeDescriptor]] = None, iterations: int = 100,
                  warmup: int = 10, message_size: int = 256,
                  rng: Optional[random.Random] = None) -> list[SchemeBenchRow]:
    """One row per registry entry; rows without a backend are marked unavailable."""
    selected = list(selected) if selected is not None else schemes.registered_schemes()
    return [bench_scheme(s, iterations, warmup, message_size, rng) for s in selected]


# --------------------------------------------------------------------------
# proof of work
# --------------------------------------------------------------------------

def _bench_content_prefix(rng: random.Random) -> bytes:
    """Block content minus its trailing generation time (a single coinbase)."""
    tx = coinbase_transaction(Address(rng.randbytes(32)), 50, rng.getrandbits(40))
    content = canonical_block_bytes(ZERO_HASH, [tx], 0)
    return content[:-8]


def bench_pow(difficulties: Sequence[int], polarity: Polarity = Polarity.ZEROS, trials: int = 100,
              allow_large: bool = False, rng: Optional[random.Random] = None) -> list[PowBenchRow]:
    """Mine ``trials`` blocks per difficulty, each with a distinct generation time."""
    if trials < MIN_ITERATIONS:
        raise ValueError(f"trials must be >= {MIN_ITERATIONS}")
    for L in difficulties:
        if L > MAX_DEFAULT_DIFFICULTY and not allow_large:
            raise ValueError(f"L={L} exceeds {MAX_DEFAULT_DIFFICULTY}; pass allow_large to run it")
    rng = rng or random.Random()
    polarity = Polarity(polarity)
    rows = []
    for L in difficulties:
        config = PowConfig(L, polarity)
        prefix = _bench_content_prefix(rng)
        start = rng.getrandbits(40)
        elapsed, iters, failures = [], [], 0
        for n in range(trials):
            b = prefix + u64(start + n)
            t0 = time.perf_counter_ns()
            try:
                r, _ = pow_search(b, config)
            except IterationCapExceeded:
                failures += 1
                continue
            elapsed.append(time.perf_counter_ns() - t0)
            iters.append(r)
        done = len(iters)
        rows.append(PowBenchRow(
            L, polarity,
            sum(elapsed) / done / 1e6 if done else math.nan,
            sum(iters) / done if done else math.nan,
            trials, failures,
        ))
    return rows


# --------------------------------------------------------------------------
# prefix uniformity
# --------------------------------------------------------------------------

def prefix_distribution(trials: int = 10000, rng: Optional[random.Random] = None) -> DistributionReport:
    """Hash ``trials`` distinct random contents once each and tally the first byte."""
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    rng = rng or random.Random()
    counts = [0] * 256
    sha = hashlib.sha256
    for n in range(trials):
        # counter suffix keeps every content distinct
        counts[sha(rng.randbytes(56) + u64(n)).digest()[0]] += 1

    statistic, p_value = chi_square_uniform(counts)
    zeros_l4 = sum(counts[:16])
    ones_l4 = sum(counts[240:])
    return DistributionReport(
        trials, counts, statistic, p_value,
        zeros_l4 / trials, ones_l4 / trials, counts[0] / trials, counts[255] / trials,
    )


# --------------------------------------------------------------------------
# report rendering
# --------------------------------------------------------------------------

def _csv(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def schemes_csv(rows: Sequence[SchemeBenchRow]) -> str:
    return _csv(SCHEME_COLUMNS, (r.as_row() for r in rows))


def schemes_json(rows: Sequence[SchemeBenchRow]) -> str:
    doc = {
        "columns": list(SCHEME_COLUMNS),
        "rows": [r.as_row() for r in rows],
        "samples": [
            {"param": r.scheme.param_id, "iterations": r.iterations, "warmup": r.warmup,
             "available": r.available,
             "timings": {k: asdict(t) for k, t in
                         (("keygen", r.keygen), ("sign", r.sign), ("verify", r.verify)) if t}}
            for r in rows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def pow_csv(rows: Sequence[PowBenchRow]) -> str:
    return _csv(POW_COLUMNS, (r.as_row() for r in rows))


def pow_json(rows: Sequence[PowBenchRow]) -> str:
    doc = {
        "columns": list(POW_COLUMNS),
        "rows": [r.as_row() for r in rows],
        "polarity": rows[0].polarity.value if rows else None,
        "trials": [{"L": r.difficulty_bits, "trials": r.trials, "failures": r.failures} for r in rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def _distribution_fields(rep: DistributionReport) -> dict:
    return {
        "trials": rep.trials,
        "chi_square": rep.chi_square,
        "p_value": rep.p_value,
        "all_zeros_freq_L4": rep.all_zeros_freq_L4,
        "all_ones_freq_L4": rep.all_ones_freq_L4,
        "all_zeros_freq_L8": rep.all_zeros_freq_L8,
        "all_ones_freq_L8": rep.all_ones_freq_L8,
        "stderr_L4": rep.stderr_L4,
        "stderr_L8": rep.stderr_L8,
    }


def distribution_csv(rep: DistributionReport) -> str:
    rows = [{"field": k, "value": v} for k, v in _distribution_fields(rep).items()]
    rows += [{"field": f"bucket_{i:02x}", "value": c} for i, c in enumerate(rep.bucket_counts)]
    return _csv(("field", "value"), rows)


def distribution_json(rep: DistributionReport) -> str:
    doc = _distribution_fields(rep)
    doc["buckets"] = {f"{i:02x}": c for i, c in enumerate(rep.bucket_counts)}
    return json.dumps(doc, indent=2) + "\n"
