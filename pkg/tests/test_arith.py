import math
import random
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from maxgcd.arith import (
    factorize,
    gcd,
    is_prime,
    largest_prime_factor,
    pair_extremes,
    pollard_brent,
    radical,
)
from maxgcd.errors import DomainError


def euclid(a, b):
    while b:
        a, b = b, a % b
    return a


def trial_factor(n):
    out, d = [], 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def test_gcd_examples():
    assert gcd(12, 18) == 6
    assert gcd(12345, 1) == 1
    assert gcd(2**64 + 1, 274177) == 274177
    assert (2**64 + 1) % 274177 == 0
    assert gcd(0, 7) == 7
    with pytest.raises(DomainError):
        gcd(0, 0)


def test_gcd_matches_euclid_on_256_bit_pairs():
    rnd = random.Random(7)
    for _ in range(10**4):
        a, b = rnd.getrandbits(256), rnd.getrandbits(256)
        if a or b:
            assert gcd(a, b) == euclid(a, b)


def test_factorize_examples():
    assert factorize(12).factors == ((2, 2), (3, 1))
    assert factorize(5959).factors == ((59, 1), (101, 1))
    assert factorize(1000003).factors == ((1000003, 1),)
    assert factorize(1).factors == ()
    with pytest.raises(DomainError):
        factorize(0)


@given(st.integers(2, 10**7))
def test_factorize_matches_trial_division(n):
    assert list(factorize(n).factors) == trial_factor(n)


def test_factorize_big_semiprimes():
    p, q = 1000000007, 998244353
    assert factorize(p * q).factors == ((q, 1), (p, 1))
    n = (2**61 - 1) * (2**31 - 1) ** 2 * 3
    f = factorize(n)
    assert f.value() == n
    assert all(is_prime(p) for p in f.primes)
    d = pollard_brent(p * q)
    assert d in (p, q)


@given(st.integers(2, 2**64))
def test_factorize_round_trip(n):
    f = factorize(n)
    assert f.value() == n
    assert all(is_prime(p) for p in f.primes)
    assert list(f.primes) == sorted(f.primes)


def test_is_prime_against_sieve():
    from maxgcd.primes import primes_upto

    ps = set(primes_upto(20000).tolist())
    assert all(is_prime(n) == (n in ps) for n in range(20000))
    # strong pseudoprime to many small bases
    assert not is_prime(3825123056546413051)
    assert is_prime(2**89 - 1)
    assert not is_prime((2**89 - 1) * (2**61 - 1))


def test_radical_and_lpf_examples():
    assert radical(12) == 6
    assert radical(1) == 1
    assert radical(360) == 30
    assert largest_prime_factor(12) == 3
    assert largest_prime_factor(1) == 1
    assert largest_prime_factor(5959) == 101


@given(st.integers(2, 10**12))
def test_radical_properties(n):
    r = radical(n)
    assert largest_prime_factor(n) <= r <= n
    assert n % r == 0
    assert all(e == 1 for _, e in factorize(r).factors)


def brute_extremes(batch):
    g = l = rd = None
    for a, b in combinations(batch, 2):
        d = euclid(a, b)
        fac = trial_factor(d) if d > 1 else []
        lp = fac[-1][0] if fac else 1
        rr = math.prod(p for p, _ in fac)
        g = d if g is None else max(g, d)
        l = lp if l is None else max(l, lp)
        rd = rr if rd is None else max(rd, rr)
    return g, l, rd


def test_pair_extremes_examples():
    e = pair_extremes([6, 10, 15])
    assert (e.max_gcd, e.max_common_prime, e.max_radical) == (5, 5, 5)
    e = pair_extremes([7, 11, 13])
    assert (e.max_gcd, e.max_common_prime, e.max_radical) == (1, 1, 1)
    e = pair_extremes([12, 18, 8])
    assert (e.max_gcd, e.max_common_prime, e.max_radical) == (6, 3, 6)
    assert e.gcd_pair == (0, 1)
    with pytest.raises(DomainError):
        pair_extremes([5])


@given(st.lists(st.integers(1, 10**6), min_size=2, max_size=50))
def test_pair_extremes_brute_force(batch):
    e = pair_extremes(batch)
    assert (e.max_gcd, e.max_common_prime, e.max_radical) == brute_extremes(batch)
    j, k = e.gcd_pair
    assert euclid(batch[j], batch[k]) == e.max_gcd


@given(st.lists(st.integers(1, 10**6), min_size=2, max_size=30))
def test_lambda_star_is_max_lpf_of_gcds(batch):
    e = pair_extremes(batch)
    assert e.max_common_prime == max(largest_prime_factor(euclid(a, b)) for a, b in combinations(batch, 2))
