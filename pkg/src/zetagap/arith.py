"""Divisor functions, prime sieves and truncated Euler products."""

from __future__ import annotations

import math

import mpmath
import numpy as np

__all__ = [
    "divisor_d",
    "factorize",
    "primes_up_to",
    "smallest_prime_factors",
    "divisor_table",
    "dirichlet_convolve",
    "euler_a",
]


def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise ValueError("n must be positive")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisor_d(r: int, n: int) -> int:
    """Number of ordered r-tuples of positive integers with product n."""
    if r < 1 or n < 1:
        raise ValueError("r and n must be positive")
    result = 1
    for k in factorize(n).values():
        result *= math.comb(k + r - 1, r - 1)
    return result


def smallest_prime_factors(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.arange(limit + 1)
    unset = spf == 0
    spf[unset] = idx[unset]
    return spf


def primes_up_to(limit: int) -> list[int]:
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).tolist()


def divisor_table(r: int, limit: int) -> np.ndarray:
    """``d_r(n)`` for ``0 <= n <= limit`` (entry 0 is 0), via a smallest-prime-factor sieve."""
    if r < 1:
        raise ValueError("r must be positive")
    spf = smallest_prime_factors(limit)
    d = np.zeros(limit + 1, dtype=np.int64)
    if limit >= 1:
        d[1] = 1
    # d(n) = d(m) * C(k+r-1, r-1) / C(k+r-2, r-1) where n = p*m and p^k || n
    expo = np.zeros(limit + 1, dtype=np.int64)
    for n in range(2, limit + 1):
        p = spf[n]
        m = n // p
        if m % p == 0:
            expo[n] = expo[m] + 1
        else:
            expo[n] = 1
        k = expo[n]
        d[n] = d[m] // math.comb(k + r - 2, r - 1) * math.comb(k + r - 1, r - 1)
    return d


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Dirichlet convolution of two arithmetic functions on ``0..N`` (index 0 unused)."""
    n = len(f) - 1
    out = np.zeros(n + 1, dtype=np.int64)
    for a in range(1, n + 1):
        if f[a]:
            out[a :: a] += f[a] * g[1 : n // a + 1]
    return out


def euler_a(r: int, prime_cutoff: int, dps: int = 50) -> mpmath.mpf:
    """Product over primes ``p <= prime_cutoff`` of ``(1-1/p)^(r^2) * sum_j d_r(p^j)^2 / p^j``.

    Each local series is summed until the next term falls below ``1e-20``
    times the partial sum.
    """
    if r < 1:
        raise ValueError("r must be positive")
    if prime_cutoff < 2:
        raise ValueError("prime_cutoff must be at least 2")
    with mpmath.workdps(dps):
        tol = mpmath.mpf("1e-20")
        total = mpmath.mpf(1)
        for p in primes_up_to(prime_cutoff):
            x = mpmath.mpf(1) / p
            series = mpmath.mpf(0)
            j = 0
            while True:
                term = math.comb(j + r - 1, r - 1) ** 2 * x**j
                series += term
                if j > 0 and term < tol * series:
                    break
                j += 1
            total *= (1 - x) ** (r * r) * series
        return +total
