"""Exponentially scaled modified Bessel functions of the first kind.

``i0e(x) = exp(-|x|) I0(x)`` and ``i1e(x) = exp(-|x|) I1(x)`` for real ``x``.
The ascending power series is used below ``SERIES_CUTOFF`` and the
Hankel asymptotic expansion above it. At the cutoff the smallest asymptotic
term is of order ``exp(-2 * SERIES_CUTOFF)``, i.e. well below double
precision, while the series (all terms positive) loses nothing to
cancellation.
"""

from __future__ import annotations

import math

SERIES_CUTOFF = 20.0
_MAX_TERMS = 200


def _series(nu: int, x: float) -> float:
    # I_nu(x) = sum_k (x/2)^(2k+nu) / (k! (k+nu)!)
    half = 0.5 * x
    q = half * half
    term = half**nu / math.factorial(nu)
    total = term
    for k in range(1, _MAX_TERMS):
        term *= q / (k * (k + nu))
        total += term
        if term < 1e-17 * total:
            break
    return total


def _asymptotic(nu: int, x: float) -> float:
    # exp(-x) I_nu(x) ~ (2 pi x)^(-1/2) sum_k (-1)^k a_k(nu) / x^k
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    for k in range(1, _MAX_TERMS):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _scaled(nu: int, x: float) -> float:
    ax = abs(x)
    if ax < SERIES_CUTOFF:
        val = _series(nu, ax) * math.exp(-ax)
    else:
        val = _asymptotic(nu, ax)
    # I1 is odd, I0 even
    if nu % 2 and x < 0:
        val = -val
    return val


def i0e(x: float) -> float:
    """Return ``exp(-|x|) * I0(x)``."""
    return _scaled(0, float(x))


def i1e(x: float) -> float:
    """Return ``exp(-|x|) * I1(x)``."""
    return _scaled(1, float(x))


def i0(x: float) -> float:
    return i0e(x) * math.exp(abs(x))


def i1(x: float) -> float:
    return i1e(x) * math.exp(abs(x))
