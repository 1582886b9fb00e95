"""Arithmetical semigroups: unique factorization plus a multiplicative norm.

Two instances are provided. :class:`IntegerSemigroup` is the positive integers
with ``|a| = a``. :class:`PolynomialSemigroup` is the monic polynomials over
the prime field F_q with ``|f| = q^deg f``; its primes are the monic
irreducibles and the constant polynomial 1 is the identity.

The statistics in :func:`semigroup_pair_extremes` and :func:`window_counts`
only use the :class:`Semigroup` interface, so they run unchanged on either
instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Any, Iterable, Sequence

from . import arith
from .errors import DomainError
from .primes import pnt_ratio, primes_between
from .sampling import StreamLike, as_generator, uniform_naturals

# relative slack when turning a real norm bound into a degree bound
_NORM_SLACK = 1e-12


class Semigroup:
    """Interface of an arithmetical semigroup instance.

    Norms are exact integers for both shipped instances.
    """

    name: str = "abstract"
    identity: Any = None

    def norm(self, a) -> int:
        raise NotImplementedError

    def multiply(self, a, b):
        raise NotImplementedError

    def gcd(self, a, b):
        raise NotImplementedError

    def divides(self, d, a) -> bool:
        raise NotImplementedError

    def factorize(self, a) -> list[tuple[Any, int]]:
        """Prime factorization of ``a`` as ``(prime, exponent)`` pairs."""
        raise NotImplementedError

    def primes_upto(self, bound: float) -> list:
        """All primes of norm ``<= bound``."""
        raise NotImplementedError

    def prime_count(self, bound: float) -> int:
        return len(self.primes_upto(bound))

    def window_primes(self, phi: float) -> list:
        """Primes with ``phi < |p| <= 2 phi``."""
        raise NotImplementedError

    def sample_batch(self, norm_bound: int, count: int, stream: StreamLike) -> list:
        """``count`` uniform draws from the elements of norm ``<= norm_bound``."""
        raise NotImplementedError

    def radical(self, a):
        out = self.identity
        for p, _ in self.factorize(a):
            out = self.multiply(out, p)
        return out

    def largest_prime(self, a):
        """A prime factor of largest norm, or the identity for ``a == identity``."""
        best, best_norm = self.identity, 1
        for p, _ in self.factorize(a):
            n = self.norm(p)
            if n > best_norm:
                best, best_norm = p, n
        return best

    def describe(self) -> dict:
        return {"instance": self.name}


class IntegerSemigroup(Semigroup):
    name = "int"
    identity = 1

    def norm(self, a: int) -> int:
        return a

    def multiply(self, a: int, b: int) -> int:
        return a * b

    def gcd(self, a: int, b: int) -> int:
        return arith.gcd(a, b)

    def divides(self, d: int, a: int) -> bool:
        return a % d == 0

    def factorize(self, a: int) -> list[tuple[int, int]]:
        return list(arith.factorize(a).factors)

    def radical(self, a: int) -> int:
        return arith.radical(a)

    def largest_prime(self, a: int) -> int:
        return arith.largest_prime_factor(a)

    def primes_upto(self, bound: float) -> list[int]:
        return [int(p) for p in primes_between(2, math.floor(bound))]

    def prime_count(self, bound: float) -> int:
        return int(primes_between(2, math.floor(bound)).size)

    def window_primes(self, phi: float) -> list[int]:
        return [int(p) for p in primes_between(math.floor(phi) + 1, math.floor(2 * phi))]

    def sample_batch(self, norm_bound: int, count: int, stream: StreamLike) -> list[int]:
        return uniform_naturals(math.floor(norm_bound), count, stream)


# polynomials over F_q; coefficient tuples, lowest degree first, no trailing zeros


def _trim(c: list[int]) -> tuple[int, ...]:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


# over F_2 a polynomial packs into an int, bit i holding the x^i coefficient


def _to_bits(a: Sequence[int]) -> int:
    v = 0
    for i, c in enumerate(a):
        if c:
            v |= 1 << i
    return v


def _from_bits(v: int) -> tuple[int, ...]:
    return tuple((v >> i) & 1 for i in range(v.bit_length()))


def _gf2_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _gf2_divmod(a: int, b: int) -> tuple[int, int]:
    quo, db = 0, b.bit_length()
    while a.bit_length() >= db:
        shift = a.bit_length() - db
        quo |= 1 << shift
        a ^= b << shift
    return quo, a


def poly_mul(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    if not a or not b:
        return ()
    if q == 2:
        return _from_bits(_gf2_mul(_to_bits(a), _to_bits(b)))
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % q
    return _trim(out)


def poly_divmod(a: Sequence[int], b: Sequence[int], q: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if q == 2:
        quo, rem = _gf2_divmod(_to_bits(a), _to_bits(b))
        return _from_bits(quo), _from_bits(rem)
    r = list(a)
    db = len(b) - 1
    inv = pow(b[-1], q - 2, q) if q > 2 else 1
    if len(r) <= db:
        return (), tuple(r)
    quo = [0] * (len(r) - db)
    for i in range(len(r) - 1, db - 1, -1):
        c = r[i] * inv % q
        if c:
            quo[i - db] = c
            for j in range(db + 1):
                r[i - db + j] = (r[i - db + j] - c * b[j]) % q
    return _trim(quo), _trim(r[:db])


def poly_mod(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    return poly_divmod(a, b, q)[1]


def poly_monic(a: Sequence[int], q: int) -> tuple[int, ...]:
    if not a:
        return ()
    inv = pow(a[-1], q - 2, q) if q > 2 else 1
    return tuple(c * inv % q for c in a)


def poly_gcd(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    """Monic GCD by the Euclidean algorithm."""
    a, b = tuple(a), tuple(b)
    if not a and not b:
        raise DomainError("gcd of two zero polynomials is undefined")
    if q == 2:
        x, y = _to_bits(a), _to_bits(b)
        while y:
            x, y = y, _gf2_divmod(x, y)[1]
        return _from_bits(x)
    while b:
        a, b = b, poly_mod(a, b, q)
    return poly_monic(a, q)


def poly_sub(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % q for i in range(n)]
    return _trim(out)


def poly_powmod(base: Sequence[int], e: int, mod: Sequence[int], q: int) -> tuple[int, ...]:
    result: tuple[int, ...] = (1,)
    base = poly_mod(base, mod, q)
    while e:
        if e & 1:
            result = poly_mod(poly_mul(result, base, q), mod, q)
        base = poly_mod(poly_mul(base, base, q), mod, q)
        e >>= 1
    return result


def _prime_divisors(n: int) -> list[int]:
    return [p for p, _ in arith.factorize(n).factors] if n > 1 else []


def is_irreducible(f: Sequence[int], q: int) -> bool:
    """Rabin's test for a monic ``f`` of degree n over F_q.

    ``f`` is irreducible iff ``x^(q^n) == x (mod f)`` and
    ``gcd(x^(q^(n/r)) - x, f) == 1`` for every prime r dividing n.
    """
    n = len(f) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    x = (0, 1)
    for r in _prime_divisors(n):
        h = poly_sub(poly_powmod(x, q ** (n // r), f, q), x, q)
        if len(poly_gcd(f, h, q)) != 1:
            return False
    return poly_sub(poly_powmod(x, q**n, f, q), x, q) == ()


def _monics(q: int, d: int):
    """All monic polynomials of degree d, in index order."""
    for tail in product(range(q), repeat=d):
        yield tuple(reversed(tail)) + (1,)


@lru_cache(maxsize=None)
def irreducibles(q: int, d: int) -> tuple[tuple[int, ...], ...]:
    """All monic irreducibles of degree ``d`` over F_q, by Rabin's test."""
    if not arith.is_prime(q):
        raise DomainError(f"q={q} is not prime")
    if d < 1:
        return ()
    return tuple(f for f in _monics(q, d) if is_irreducible(f, q))


def _mobius(n: int) -> int:
    f = arith.factorize(n).factors
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def irreducible_count(q: int, d: int) -> int:
    """Number of monic irreducibles of degree ``d``: ``(1/d) sum_{k | d} mu(k) q^(d/k)``."""
    if d < 1:
        return 0
    total = sum(_mobius(k) * q ** (d // k) for k in range(1, d + 1) if d % k == 0)
    return total // d


@dataclass(frozen=True)
class PolyElement:
    """A polynomial over F_q, coefficients lowest degree first."""

    q: int
    coeffs: tuple[int, ...]

    @property
    def monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if c == 1 and mono:
                terms.append(mono)
            else:
                terms.append(f"{c}{mono}")
        return " + ".join(terms)


def poly(q: int, coeffs: Iterable[int]) -> PolyElement:
    return PolyElement(q, _trim([c % q for c in coeffs]))


class PolynomialSemigroup(Semigroup):
    """Monic polynomials over F_q under multiplication."""

    name = "poly"

    def __init__(self, q: int):
        if not arith.is_prime(q):
            raise DomainError(f"q={q} must be prime")
        self.q = q
        self.identity = PolyElement(q, (1,))

    def __repr__(self) -> str:
        return f"PolynomialSemigroup(q={self.q})"

    def __reduce__(self):
        return (PolynomialSemigroup, (self.q,))

    def describe(self) -> dict:
        return {"instance": self.name, "q": self.q}

    def _check(self, a: PolyElement) -> None:
        if a.q != self.q:
            raise DomainError(f"element over F_{a.q} used in F_{self.q}[x]")

    def norm(self, a: PolyElement) -> int:
        self._check(a)
        if not a.coeffs:
            raise DomainError("the zero polynomial has no norm")
        return self.q ** a.degree

    def multiply(self, a: PolyElement, b: PolyElement) -> PolyElement:
        return PolyElement(self.q, poly_mul(a.coeffs, b.coeffs, self.q))

    def gcd(self, a: PolyElement, b: PolyElement) -> PolyElement:
        self._check(a)
        self._check(b)
        return PolyElement(self.q, poly_gcd(a.coeffs, b.coeffs, self.q))

    def divides(self, d: PolyElement, a: PolyElement) -> bool:
        return poly_mod(a.coeffs, d.coeffs, self.q) == ()

    def max_degree(self, bound: float) -> int:
        """Largest d with ``q^d <= bound``."""
        if bound < 1:
            return -1
        if isinstance(bound, int):
            d = 0
            while self.q ** (d + 1) <= bound:
                d += 1
            return d
        return math.floor(math.log(bound) / math.log(self.q) * (1 + _NORM_SLACK) + _NORM_SLACK)

    def primes_of_degree(self, d: int) -> list[PolyElement]:
        return [PolyElement(self.q, f) for f in irreducibles(self.q, d)]

    def primes_upto(self, bound: float) -> list[PolyElement]:
        out: list[PolyElement] = []
        for d in range(1, self.max_degree(bound) + 1):
            out.extend(self.primes_of_degree(d))
        return out

    def prime_count(self, bound: float) -> int:
        return sum(irreducible_count(self.q, d) for d in range(1, self.max_degree(bound) + 1))

    def window_primes(self, phi: float) -> list[PolyElement]:
        out: list[PolyElement] = []
        d = 1
        while self.q**d <= 2 * phi:
            if self.q**d > phi:
                out.extend(self.primes_of_degree(d))
            d += 1
        return out

    def factorize(self, a: PolyElement) -> list[tuple[PolyElement, int]]:
        """Trial division by irreducibles of increasing degree."""
        self._check(a)
        if not a.monic:
            raise DomainError("only monic polynomials belong to the semigroup")
        rest = a.coeffs
        out: list[tuple[PolyElement, int]] = []
        d = 1
        while 2 * d <= len(rest) - 1:
            for f in irreducibles(self.q, d):
                e = 0
                while True:
                    quo, rem = poly_divmod(rest, f, self.q)
                    if rem:
                        break
                    rest, e = quo, e + 1
                if e:
                    out.append((PolyElement(self.q, f), e))
            d += 1
        if len(rest) > 1:
            out.append((PolyElement(self.q, rest), 1))
            out.sort(key=lambda pe: (len(pe[0].coeffs), tuple(reversed(pe[0].coeffs))))
        return out

    def element_count(self, norm_bound: int) -> int:
        """Number of monic polynomials (including 1) with norm ``<= norm_bound``."""
        d = self.max_degree(norm_bound)
        return sum(self.q**k for k in range(d + 1))

    def element_from_index(self, idx: int) -> PolyElement:
        """The idx-th monic polynomial (0-based) ordered by degree, then base-q tail."""
        d = 0
        while idx >= self.q**d:
            idx -= self.q**d
            d += 1
        coeffs = []
        for _ in range(d):
            idx, c = divmod(idx, self.q)
            coeffs.append(c)
        return PolyElement(self.q, tuple(coeffs) + (1,))

    def sample_batch(self, norm_bound: int, count: int, stream: StreamLike) -> list[PolyElement]:
        total = self.element_count(norm_bound)
        return [self.element_from_index(i - 1) for i in uniform_naturals(total, count, stream)]


def make_semigroup(instance: str, q: int | None = None) -> Semigroup:
    if instance in ("int", "integers"):
        return IntegerSemigroup()
    if instance == "poly":
        if q is None:
            raise DomainError("the polynomial instance needs a prime q")
        return PolynomialSemigroup(q)
    raise DomainError(f"unknown semigroup instance {instance!r}")


# thin functional surface


def sg_norm(G: Semigroup, a) -> int:
    return G.norm(a)


def sg_primes_upto(G: Semigroup, bound: float) -> list:
    if bound < 2:
        raise DomainError(f"bound must be >= 2, got {bound}")
    return G.primes_upto(bound)


def sg_gcd(G: Semigroup, a, b):
    return G.gcd(a, b)


def sg_sample(G: Semigroup, norm_bound: float, stream: StreamLike):
    if norm_bound < 1:
        raise DomainError(f"norm_bound must be >= 1, got {norm_bound}")
    return G.sample_batch(norm_bound, 1, stream)[0]


def sg_pnt_ratio(G: Semigroup, x: float) -> float:
    """``x e^-x |pi_G[x]|`` where ``pi_G[x]`` counts primes of norm ``<= e^x``."""
    if isinstance(G, IntegerSemigroup):
        return pnt_ratio(x)
    count = G.prime_count(math.exp(x))
    if count < 1:
        raise DomainError(f"no primes of norm <= e^{x}")
    return x * math.exp(-x) * count


# generic statistics


@dataclass(frozen=True)
class SemigroupExtremes:
    """Largest pairwise GCD, common prime and GCD radical, measured by norm."""

    max_gcd: Any
    max_common_prime: Any
    max_radical: Any
    max_gcd_norm: int
    max_common_prime_norm: int
    max_radical_norm: int
    gcd_pair: tuple[int, int]
    common_prime_pair: tuple[int, int]
    radical_pair: tuple[int, int]


def semigroup_pair_extremes(G: Semigroup, batch: Sequence) -> SemigroupExtremes:
    """Exact maxima over all unordered pairs, for any instance.

    Radicals and largest primes are computed only when the GCD's norm could
    beat the running maximum, since both have norm at most that of the GCD.
    """
    if len(batch) < 2:
        raise DomainError("need at least two elements")
    one = G.identity
    bg, bl, br = one, one, one
    ng, nl, nr = 0, 1, 0
    pg = pl = pr = (0, 1)
    for (j, a), (k, b) in combinations(enumerate(batch), 2):
        g = G.gcd(a, b)
        n = G.norm(g)
        if n > ng:
            bg, ng, pg = g, n, (j, k)
        if n > nr:
            r = G.radical(g)
            rn = G.norm(r)
            if rn > nr:
                br, nr, pr = r, rn, (j, k)
        if n > nl:
            lp = G.largest_prime(g)
            ln_ = G.norm(lp)
            if ln_ > nl:
                bl, nl, pl = lp, ln_, (j, k)
    return SemigroupExtremes(bg, bl, br, ng, nl, nr, pg, pl, pr)


def window_counts(G: Semigroup, batch: Sequence, window: Sequence) -> list[int]:
    """``D_p``: how many batch elements each window prime divides."""
    return [sum(1 for t in batch if G.divides(p, t)) for p in window]
