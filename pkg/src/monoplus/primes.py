"""Small number-theory helpers: deterministic 64-bit primality, prime sampling, NTT roots."""

from __future__ import annotations

import random

# these bases make Miller-Rabin deterministic below 3.3e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_in(lo: int, hi: int) -> list[int]:
    return [q for q in range(max(lo, 2), hi + 1) if is_prime(q)]


def random_prime(lo: int, hi: int, rng: random.Random, max_tries: int = 10_000) -> int | None:
    """Uniform prime in [lo, hi] by rejection sampling; None if the range has no prime."""
    lo = max(lo, 2)
    if hi < lo:
        return None
    for _ in range(max_tries):
        cand = rng.randint(lo, hi)
        if is_prime(cand):
            return cand
    # tiny or prime-poor range: enumerate to decide emptiness, keep uniformity
    pool = primes_in(lo, hi)
    return rng.choice(pool) if pool else None


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(q: int) -> int:
    """Smallest generator of the multiplicative group mod prime q."""
    factors = _prime_factors(q - 1)
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in factors):
            return g
    raise ValueError(f"no primitive root for {q}")
