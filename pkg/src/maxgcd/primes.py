"""Prime generation, prime windows and prime-counting diagnostics.

All enumeration goes through a segmented sieve of Eratosthenes so that memory
stays bounded (at most ``SEGMENT_SIZE`` flags live at once) even for limits
around 10^9.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DomainError, EmptyTableError

SEGMENT_SIZE = 1 << 22


class EmptyWindowWarning(UserWarning):
    """A sum over a prime window was requested but the window holds no primes."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _small_primes(limit: int) -> np.ndarray:
    """Plain sieve for the base primes; ``limit`` is at most ~sqrt(10^9)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for i in range(3, math.isqrt(limit) + 1, 2):
        if flags[i]:
            flags[i * i :: 2 * i] = False
    return np.flatnonzero(flags).astype(np.int64)


def iter_prime_segments(lo: int, hi: int, segment_size: int = SEGMENT_SIZE) -> Iterator[np.ndarray]:
    """Yield ascending arrays of the primes in ``[lo, hi]``, one per sieve segment.

    Segments that contain no primes are skipped.
    """
    lo = max(int(lo), 2)
    hi = int(hi)
    if hi < lo:
        return
    base = _small_primes(math.isqrt(hi))
    start = lo
    while start <= hi:
        stop = min(start + segment_size - 1, hi)
        flags = np.ones(stop - start + 1, dtype=bool)
        for p in base:
            p = int(p)
            if p * p > stop:
                break
            first = max(p * p, ((start + p - 1) // p) * p)
            if first > stop:
                continue
            flags[first - start :: p] = False
        found = np.flatnonzero(flags).astype(np.int64) + start
        if found.size:
            yield found
        start = stop + 1


def primes_between(lo: int, hi: int) -> np.ndarray:
    """All primes in the closed interval ``[lo, hi]`` as an int64 array."""
    parts = list(iter_prime_segments(lo, hi))
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(parts)


def prime_count(x: float) -> int:
    """pi(x): the number of primes not exceeding ``x``."""
    limit = math.floor(x)
    return sum(int(seg.size) for seg in iter_prime_segments(2, limit))


@dataclass(frozen=True)
class PrimeTable:
    """Every prime up to and including ``limit``, ascending."""

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def __iter__(self):
        return (int(p) for p in self.primes)

    def __contains__(self, p: object) -> bool:
        if not isinstance(p, (int, np.integer)):
            return False
        i = int(np.searchsorted(self.primes, p))
        return i < self.primes.size and int(self.primes[i]) == p

    def tolist(self) -> list[int]:
        return [int(p) for p in self.primes]


@dataclass(frozen=True)
class PrimeWindow:
    """The primes in the half-open interval ``(phi, 2*phi]``."""

    phi: float
    primes: np.ndarray

    @property
    def lower(self) -> int:
        """Smallest integer in the window interval."""
        return math.floor(self.phi) + 1

    @property
    def upper(self) -> int:
        """Largest integer in the window interval."""
        return math.floor(2 * self.phi)

    def __len__(self) -> int:
        return int(self.primes.size)

    def __iter__(self):
        return (int(p) for p in self.primes)

    def tolist(self) -> list[int]:
        return [int(p) for p in self.primes]


def primes_upto(x: int) -> PrimeTable:
    """Return the table of all primes ``<= x``.

    >>> primes_upto(10).tolist()
    [2, 3, 5, 7]
    """
    x = int(x)
    if x < 2:
        raise EmptyTableError(f"no primes below {x}; need x >= 2")
    return PrimeTable(limit=x, primes=_readonly(primes_between(2, x)))


def window(phi: float) -> PrimeWindow:
    """Primes p with ``phi < p <= 2*phi``, realised as ``[floor(phi)+1, floor(2*phi)]``."""
    if not phi > 1:
        raise DomainError(f"window needs phi > 1, got {phi}")
    lo = math.floor(phi) + 1
    hi = math.floor(2 * phi)
    return PrimeWindow(phi=float(phi), primes=_readonly(primes_between(lo, hi)))


def window_delta_sum(n: int, w: PrimeWindow) -> float:
    """Sum of ``n^2 / (2 p^2)`` over the window primes.

    An empty window gives 0.0 and emits :class:`EmptyWindowWarning`.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if len(w) == 0:
        warnings.warn(f"prime window above phi={w.phi} is empty", EmptyWindowWarning, stacklevel=2)
        return 0.0
    p = w.primes.astype(np.float64)
    return (n * n / 2.0) * math.fsum(1.0 / (p * p))


def pnt_ratio(x: float) -> float:
    """``x * exp(-x) * pi(exp(x))``; tends to 1 by the Prime Number Theorem."""
    if not x > math.log(2):
        raise DomainError(f"pnt_ratio needs x > ln 2, got {x}")
    return x * math.exp(-x) * prime_count(math.exp(x))
