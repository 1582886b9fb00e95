"""Exact uniform sampling of big integers and the conditional-divisibility check.

Random numbers come from Philox, a counter-based generator: a stream is
identified by its 128-bit key ``(master_seed, stream_index)`` and the draw
index is the Philox counter, so any trial can be replayed in isolation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from mpmath import iv, libmp

from .errors import DomainError, ResourceError

MASK64 = (1 << 64) - 1
DEFAULT_BIT_CAP = 1 << 20

_LOG_FORM = re.compile(
    r"^\s*(?:(?P<coef>[0-9.eE+-]+(?:/[0-9]+)?)\s*\*\s*)?"
    r"(?:ln|log)\(\s*(?P<base>[0-9]+)\s*\)"
    r"(?:\s*/\s*(?P<div>[0-9]+))?\s*$"
)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(master_seed, stream_index)``."""

    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at draw index 0 of this stream."""
        key = ((self.stream_index & MASK64) << 64) | (self.master_seed & MASK64)
        return np.random.Generator(np.random.Philox(key=key))


StreamLike = Union[RngStream, np.random.Generator]


def as_generator(stream: StreamLike) -> np.random.Generator:
    """Fresh generator for an :class:`RngStream`; a Generator is passed through.

    Passing a Generator lets a caller draw several quantities in sequence from
    one stream.
    """
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError(f"expected RngStream or numpy Generator, got {type(stream).__name__}")


@dataclass(frozen=True)
class Alpha:
    """Exact representation of alpha as ``coef`` or ``coef * ln(log_base)``."""

    coef: Fraction
    log_base: int | None = None

    def __float__(self) -> float:
        if self.log_base is None:
            return float(self.coef)
        return float(self.coef) * math.log(self.log_base)

    def __str__(self) -> str:
        if self.log_base is None:
            return str(self.coef)
        return f"{self.coef}*ln({self.log_base})"


def parse_alpha(alpha: Union[str, int, float, Fraction, Alpha]) -> Alpha:
    """Convert user input to an exact :class:`Alpha`.

    Decimal strings are read exactly (``"0.1"`` is 1/10, not the nearest
    double); floats are taken at their exact binary value. Strings of the form
    ``ln(k)``, ``c*ln(k)`` or ``ln(k)/d`` denote logarithms exactly.
    """
    if isinstance(alpha, Alpha):
        out = alpha
    elif isinstance(alpha, str):
        m = _LOG_FORM.match(alpha)
        if m:
            coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
            if m.group("div"):
                coef /= int(m.group("div"))
            base = int(m.group("base"))
            if base < 2:
                raise DomainError(f"logarithm base must be >= 2 in alpha={alpha!r}")
            out = Alpha(coef, base)
        else:
            try:
                out = Alpha(Fraction(alpha.strip()))
            except (ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"cannot parse alpha={alpha!r}") from exc
    elif isinstance(alpha, (int, Fraction)):
        out = Alpha(Fraction(alpha))
    elif isinstance(alpha, float):
        if not math.isfinite(alpha):
            raise DomainError(f"alpha must be finite, got {alpha}")
        out = Alpha(Fraction(alpha))
    else:
        raise TypeError(f"unsupported alpha type {type(alpha).__name__}")
    if out.coef <= 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    return out


def _iroot(x: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if x < 2:
        return x
    if x.bit_length() < 1000:
        r = int(round(x ** (1.0 / k))) + 1
    else:
        r = 1 << (x.bit_length() // k + 1)
    while r**k > x:
        r = ((k - 1) * r + x // r ** (k - 1)) // k
    while (r + 1) ** k <= x:
        r += 1
    return r


def _certified_floor_exp(exponent: Fraction, log_base: int | None, bit_cap: int) -> int:
    """Floor of ``exp(exponent)`` or ``log_base ** exponent`` by interval refinement."""
    log2_value = float(exponent) * (math.log2(log_base) if log_base else math.log2(math.e))
    if log2_value > bit_cap:
        raise ResourceError(f"range bound needs ~{log2_value:.0f} bits, above the cap of {bit_cap}")
    prec = max(int(log2_value), 0) + 64
    old = iv.prec
    try:
        for _ in range(32):
            iv.prec = prec
            x = iv.mpf(exponent.numerator) / iv.mpf(exponent.denominator)
            if log_base is not None:
                x = x * iv.log(iv.mpf(log_base))
            y = iv.exp(x)
            lo, hi = y._mpi_  # raw mpf endpoints; exact, unlike float conversion
            flo, fhi = int(libmp.to_int(lo, "f")), int(libmp.to_int(hi, "f"))
            if flo == fhi:
                return flo
            prec *= 2
    finally:
        iv.prec = old
    raise ResourceError("interval refinement did not separate exp from an integer")


def range_bound(alpha, n: int, bit_cap: int = DEFAULT_BIT_CAP) -> int:
    """Return ``M = floor(exp(alpha * n))`` exactly.

    >>> range_bound("ln(10)", 2)
    100
    >>> range_bound(1, 1)
    2
    """
    a = parse_alpha(alpha)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    exponent = a.coef * n
    if a.log_base is None:
        return _certified_floor_exp(exponent, None, bit_cap)
    # log form: M = floor(k ** (u/v)); rational powers of integers may be exact
    k, u, v = a.log_base, exponent.numerator, exponent.denominator
    if u * math.log2(k) / v > bit_cap:
        raise ResourceError(f"range bound exceeds the cap of {bit_cap} bits")
    if v == 1:
        return k**u
    ku = k**u
    r = _iroot(ku, v)
    if r**v == ku:
        return r
    return _certified_floor_exp(exponent, k, bit_cap)


@dataclass(frozen=True)
class SampleRange:
    """The sampling support ``{1, ..., bound}`` with ``bound = floor(e^(alpha*n))``."""

    alpha: Alpha
    n: int
    bound: int

    @classmethod
    def from_alpha(cls, alpha, n: int, bit_cap: int = DEFAULT_BIT_CAP) -> "SampleRange":
        a = parse_alpha(alpha)
        return cls(alpha=a, n=n, bound=range_bound(a, n, bit_cap))


def uniform_naturals(bound: int, count: int, stream: StreamLike) -> list[int]:
    """``count`` independent uniform draws from ``{1, ..., bound}``.

    Each candidate is a string of ``bitlen(bound - 1)`` random bits built from
    whole 64-bit Philox words; candidates ``>= bound`` are rejected, so fewer
    than two candidates per draw are needed on average.
    """
    if bound < 1:
        raise DomainError(f"bound must be >= 1, got {bound}")
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    gen = as_generator(stream)
    bits = (bound - 1).bit_length()
    if bits == 0:
        return [1] * count
    words = (bits + 63) // 64
    mask = (1 << bits) - 1
    raw = gen.bit_generator.random_raw
    if bound <= (1 << 63):
        out: list[int] = []
        need = count
        m = np.uint64(mask)
        while need > 0:
            cand = raw(need + need // 2 + 8) & m
            ok = cand[cand < np.uint64(bound)]
            out.extend(int(v) + 1 for v in ok[:need])
            need = count - len(out)
        return out
    out = []
    while len(out) < count:
        chunk = raw(words)
        v = 0
        for i, w in enumerate(chunk):
            v |= int(w) << (64 * i)
        v &= mask
        if v < bound:
            out.append(v + 1)
    return out


def draw_batch(rng: SampleRange, count: int, stream: StreamLike) -> list[int]:
    """Draw ``count`` values uniformly, with replacement, from ``{1, ..., rng.bound}``."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return uniform_naturals(rng.bound, count, stream)


def draw_batch_power(n: int, r: int, count: int, stream: StreamLike) -> list[int]:
    """Uniform draws from ``{1, ..., n**r}`` (polynomial-range sampling)."""
    if r < 2 or n < 2:
        raise DomainError(f"need n >= 2 and r >= 2, got n={n}, r={r}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return uniform_naturals(n**r, count, stream)


def _is_small_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    return all(p % d for d in range(3, math.isqrt(p) + 1, 2))


@dataclass(frozen=True)
class DominanceResult:
    ratio: Fraction
    bound: Fraction
    ok: bool


def dominance_ratio(M: int, r: int, p: int, m: int) -> DominanceResult:
    """Conditional probability that ``p^m | T`` given ``r | T``, for T uniform on ``[1, M]``.

    The ratio is ``floor(M / (r p^m)) / floor(M / r)``; ``ok`` records whether it
    is at most ``p^-m``.
    """
    if not _is_small_prime(p):
        raise DomainError(f"{p} is not prime")
    if r < 1 or r % p == 0:
        raise DomainError(f"r={r} must be a positive integer coprime to p={p}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if M < r:
        raise DomainError(f"need M >= r, got M={M}, r={r}")
    pm = p**m
    ratio = Fraction(M // (r * pm), M // r)
    bound = Fraction(1, pm)
    return DominanceResult(ratio=ratio, bound=bound, ok=ratio <= bound)


@dataclass(frozen=True)
class Condition5Report:
    checked: int
    violations: int
    worst: tuple[int, int, int, int] | None


def verify_condition5(max_M: int, max_r: int, max_p: int, max_m: int) -> Condition5Report:
    """Exhaustive dominance check over ``r <= M <= max_M``, ``r <= max_r``,
    primes ``p <= max_p`` coprime to r, ``1 <= m <= max_m``.

    Vectorised over M; the comparison is the integer form of
    ``floor(M/(r p^m)) / floor(M/r) <= p^-m``.
    """
    primes = [p for p in range(2, max_p + 1) if _is_small_prime(p)]
    checked = violations = 0
    worst = None
    for r in range(1, max_r + 1):
        M = np.arange(r, max_M + 1, dtype=np.int64)
        if M.size == 0:
            continue
        base = M // r
        for p in primes:
            if r % p == 0:
                continue
            for m in range(1, max_m + 1):
                pm = p**m
                bad = (M // (r * pm)) * pm > base
                checked += int(M.size)
                nbad = int(bad.sum())
                if nbad:
                    violations += nbad
                    if worst is None:
                        worst = (int(M[bad][0]), r, p, m)
    return Condition5Report(checked=checked, violations=violations, worst=worst)


def stream_bits(stream: StreamLike, count: int) -> np.ndarray:
    """``count`` raw 64-bit words from a stream (used for independence diagnostics)."""
    return as_generator(stream).bit_generator.random_raw(count)


def uniform_open01(gen: np.random.Generator, size=None) -> Union[float, np.ndarray]:
    """Uniform variates on ``(0, 1]``, safe to pass to ``log``."""
    return 1.0 - gen.random(size)


__all__: Sequence[str] = [
    "Alpha",
    "Condition5Report",
    "DominanceResult",
    "RngStream",
    "SampleRange",
    "as_generator",
    "dominance_ratio",
    "draw_batch",
    "draw_batch_power",
    "parse_alpha",
    "range_bound",
    "stream_bits",
    "uniform_naturals",
    "uniform_open01",
    "verify_condition5",
]
