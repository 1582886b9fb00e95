"""GCDs, factorization and pairwise GCD extremes for batches of big integers."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DomainError

SPF_LIMIT = 10**6
_TRIAL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)
# Deterministic for n < 3.3e24 (Sorenson & Webster).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_LIMIT = 3317044064679887385961981
_MR_RANDOM_ROUNDS = 64  # error < 4^-64 = 2^-128

_spf: np.ndarray | None = None


def _smallest_prime_factors() -> np.ndarray:
    global _spf
    if _spf is None:
        spf = np.zeros(SPF_LIMIT + 1, dtype=np.int32)
        for p in range(2, SPF_LIMIT + 1):
            if spf[p] == 0:
                spf[p::p][spf[p::p] == 0] = p
                if p * p > SPF_LIMIT:
                    # remaining zeros are primes
                    rest = np.flatnonzero(spf == 0)
                    spf[rest] = rest
                    spf[0] = spf[1] = 0
                    break
        _spf = spf
    return _spf


def gcd(a: int, b: int) -> int:
    """Greatest common divisor of two naturals, not both zero."""
    if a < 0 or b < 0:
        raise DomainError("gcd is defined here for non-negative integers")
    if a == 0 and b == 0:
        raise DomainError("gcd(0, 0) is undefined")
    return math.gcd(a, b)


def _miller_rabin(n: int, bases) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in bases:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int) -> bool:
    """Primality test: exact below 3.3e24, error below 2^-128 above."""
    if n < 2:
        return False
    for p in _TRIAL_PRIMES:
        if n % p == 0:
            return n == p
    if n <= SPF_LIMIT:
        return int(_smallest_prime_factors()[n]) == n
    if n < _MR_DETERMINISTIC_LIMIT:
        return _miller_rabin(n, _MR_BASES)
    rnd = random.Random(n)
    return _miller_rabin(n, [rnd.randrange(2, n - 1) for _ in range(_MR_RANDOM_ROUNDS)])


def _brent(n: int, seed: int) -> int:
    """One Pollard-rho run with Brent's cycle detection; may return n on failure."""
    rnd = random.Random(seed)
    y, c, m = rnd.randrange(1, n), rnd.randrange(1, n), 128
    g = r = q = 1
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = math.gcd(q, n)
            k += m
        r *= 2
    if g == n:
        while True:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            if g > 1:
                break
    return g


def pollard_brent(n: int) -> int:
    """A nontrivial factor of a composite ``n``, restarting on failed runs."""
    if n % 2 == 0:
        return 2
    for attempt in range(1000):
        d = _brent(n, seed=n * 1000 + attempt)
        if 1 < d < n:
            return d
    raise RuntimeError(f"Pollard-Brent failed to split {n}")


def _factor_into(n: int, acc: dict[int, int]) -> None:
    if n == 1:
        return
    if n <= SPF_LIMIT:
        spf = _smallest_prime_factors()
        while n > 1:
            p = int(spf[n])
            acc[p] = acc.get(p, 0) + 1
            n //= p
        return
    for p in _TRIAL_PRIMES:
        while n % p == 0:
            acc[p] = acc.get(p, 0) + 1
            n //= p
    if n == 1:
        return
    if n <= SPF_LIMIT:
        _factor_into(n, acc)
    elif is_prime(n):
        acc[n] = acc.get(n, 0) + 1
    else:
        d = pollard_brent(n)
        _factor_into(d, acc)
        _factor_into(n // d, acc)


@dataclass(frozen=True)
class Factorization:
    """Prime factorization as ascending ``(prime, exponent)`` pairs."""

    factors: tuple[tuple[int, int], ...]

    def value(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> Factorization:
    """Complete prime factorization; ``factorize(1)`` is empty.

    Small values use a smallest-prime-factor table up to 10^6; larger ones
    strip small primes, then alternate a primality test with Pollard-Brent.
    """
    if n < 1:
        raise DomainError(f"cannot factorize {n}")
    acc: dict[int, int] = {}
    _factor_into(n, acc)
    return Factorization(tuple(sorted(acc.items())))


def radical(n: int) -> int:
    """Product of the distinct primes dividing ``n``; ``radical(1) == 1``."""
    if n < 1:
        raise DomainError(f"radical needs n >= 1, got {n}")
    return math.prod(factorize(n).primes)


def largest_prime_factor(n: int) -> int:
    """Largest prime dividing ``n``, or 1 for ``n == 1``."""
    if n < 1:
        raise DomainError(f"largest_prime_factor needs n >= 1, got {n}")
    f = factorize(n).factors
    return f[-1][0] if f else 1


@dataclass(frozen=True)
class PairExtremes:
    """Maxima over all unordered pairs of a batch.

    ``max_common_prime`` is 1 when every pair is coprime. Argmax pairs are
    0-based ``(j, k)`` with ``j < k``, the first pair in lexicographic order
    attaining the maximum.
    """

    max_gcd: int
    max_common_prime: int
    max_radical: int
    gcd_pair: tuple[int, int]
    common_prime_pair: tuple[int, int]
    radical_pair: tuple[int, int]
    extra: dict = field(default_factory=dict, compare=False, repr=False)


def pair_extremes(batch: Sequence[int]) -> PairExtremes:
    """Exact Gamma*, Lambda* and rad* over all pairs of ``batch``.

    Radicals and largest prime factors are only computed for GCDs that could
    beat the running maximum, since both are bounded by the GCD itself.
    """
    if len(batch) < 2:
        raise DomainError("pair_extremes needs at least two values")
    best_g, best_l, best_r = 0, 1, 0
    pg = pl = pr = (0, 1)
    vals = [int(v) for v in batch]
    for (j, a), (k, b) in combinations(enumerate(vals), 2):
        g = math.gcd(a, b)
        if g > best_g:
            best_g, pg = g, (j, k)
        if g > best_r:
            rad = radical(g)
            if rad > best_r:
                best_r, pr = rad, (j, k)
        if g > best_l:
            lp = largest_prime_factor(g)
            if lp > best_l:
                best_l, pl = lp, (j, k)
    return PairExtremes(
        max_gcd=best_g,
        max_common_prime=best_l,
        max_radical=best_r,
        gcd_pair=pg,
        common_prime_pair=pl,
        radical_pair=pr,
    )
