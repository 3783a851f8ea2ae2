"""Pearson chi-square goodness of fit against the uniform distribution.

The p-value comes from the regularized upper incomplete gamma function,
evaluated with the power series for ``x < a + 1`` and a modified-Lentz
continued fraction otherwise.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DegenerateInput

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 100_000


def _gamma_p_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_fraction(a, x)


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x == 0:
        return 0.0
    if 0 < x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - gamma_q(a, x)


def chi_square_sf(statistic: float, df: int) -> float:
    """Survival function of the chi-square distribution with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if statistic <= 0:
        return 1.0
    return gamma_q(df / 2.0, statistic / 2.0)


def chi_square_uniform(counts: Sequence[int]) -> tuple[float, float]:
    """Pearson statistic of ``counts`` against equal expected counts, and its p-value."""
    if len(counts) < 2:
        raise DegenerateInput("need at least two buckets")
    if any(c < 0 for c in counts):
        raise DegenerateInput("counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise DegenerateInput("all counts are zero")
    k = len(counts)
    # exact integer numerator: sum (k*O - N)^2 / (k*N)
    num = sum((k * c - total) ** 2 for c in counts)
    statistic = num / (k * total)
    return statistic, chi_square_sf(statistic, k - 1)
