import math
import random
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxgcd.arith import gcd as int_gcd
from maxgcd.arith import pair_extremes
from maxgcd.errors import DomainError
from maxgcd.primes import pnt_ratio
from maxgcd.sampling import RngStream
from maxgcd.semigroup import (
    IntegerSemigroup,
    PolyElement,
    PolynomialSemigroup,
    irreducible_count,
    irreducibles,
    is_irreducible,
    poly,
    poly_divmod,
    poly_mul,
    semigroup_pair_extremes,
    sg_gcd,
    sg_norm,
    sg_pnt_ratio,
    sg_primes_upto,
    sg_sample,
)

F2 = PolynomialSemigroup(2)
F3 = PolynomialSemigroup(3)


def schoolbook_mul(a, b, q):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % q
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def monics(q, d):
    for tail in product(range(q), repeat=d):
        yield tuple(reversed(tail)) + (1,)


def sieve_irreducible_counts(q, max_d):
    """Irreducible counts per degree by crossing off every product of two lower-degree monics."""
    counts = {}
    for n in range(1, max_d + 1):
        reducible = set()
        for d in range(1, n // 2 + 1):
            for a in monics(q, d):
                for b in monics(q, n - d):
                    reducible.add(schoolbook_mul(a, b, q))
        counts[n] = q**n - len(reducible)
    return counts


def gf2_sieve_counts(max_d):
    # bit-packed version of the same sieve, fast enough for degree 12
    def mul(a, b):
        out = 0
        while b:
            if b & 1:
                out ^= a
            a <<= 1
            b >>= 1
        return out

    counts = {}
    for n in range(1, max_d + 1):
        reducible = set()
        for d in range(1, n // 2 + 1):
            for a in range(1 << d, 1 << (d + 1)):
                for b in range(1 << (n - d), 1 << (n - d + 1)):
                    reducible.add(mul(a, b))
        counts[n] = 2**n - len(reducible)
    return counts


def random_monic(q, d, rnd):
    return PolyElement(q, tuple(rnd.randrange(q) for _ in range(d)) + (1,))


def test_norm_examples():
    I = IntegerSemigroup()
    assert sg_norm(I, 12) == 12
    assert sg_norm(F2, poly(2, [1, 1, 0, 1])) == 8
    assert sg_norm(F2, F2.identity) == 1
    with pytest.raises(DomainError):
        sg_norm(F2, PolyElement(2, ()))


def test_primes_upto_examples():
    assert [str(p) for p in sg_primes_upto(F2, 8)] == ["x", "x + 1", "x^2 + x + 1", "x^3 + x + 1", "x^3 + x^2 + 1"]
    assert sg_primes_upto(IntegerSemigroup(), 10) == [2, 3, 5, 7]
    assert [p.coeffs for p in sg_primes_upto(F3, 3)] == [(0, 1), (1, 1), (2, 1)]
    assert F2.prime_count(8) == 5
    with pytest.raises(DomainError):
        sg_primes_upto(F2, 1.5)


def test_f2_primes_by_exhaustive_irreducibility():
    candidates = [f for d in range(1, 4) for f in monics(2, d)]
    assert len(candidates) == 14
    irr = [f for f in candidates if all(poly_divmod(f, g, 2)[1] for g in candidates if 0 < len(g) - 1 < len(f) - 1)]
    assert [p.coeffs for p in sg_primes_upto(F2, 8)] == irr


def test_gcd_examples():
    g = sg_gcd(F2, poly(2, [0, 1, 1]), poly(2, [1, 0, 1]))
    assert str(g) == "x + 1"
    assert poly_mul((1, 1), (1, 1), 2) == (1, 0, 1)
    assert sg_gcd(F3, poly(3, [2, 0, 1, 1]), F3.identity) == F3.identity
    assert sg_gcd(IntegerSemigroup(), 17, 1) == 1
    with pytest.raises(DomainError):
        sg_gcd(F2, PolyElement(2, ()), PolyElement(2, ()))


def test_integer_gcd_cross_module():
    rnd = random.Random(3)
    I = IntegerSemigroup()
    for _ in range(10**4):
        a, b = rnd.randrange(1, 2**64), rnd.randrange(1, 2**64)
        assert sg_gcd(I, a, b) == int_gcd(a, b) == math.gcd(a, b)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_poly_gcd_divides_both(q):
    rnd = random.Random(q)
    G = PolynomialSemigroup(q)
    for _ in range(200):
        common = random_monic(q, rnd.randrange(0, 4), rnd)
        a = G.multiply(common, random_monic(q, rnd.randrange(0, 8), rnd))
        b = G.multiply(common, random_monic(q, rnd.randrange(0, 8), rnd))
        g = G.gcd(a, b)
        assert g.monic and G.divides(g, a) and G.divides(g, b) and G.divides(common, g)


def test_poly_arith_matches_schoolbook_for_f2_fast_path():
    rnd = random.Random(0)
    for _ in range(500):
        a = tuple(rnd.randrange(2) for _ in range(rnd.randrange(1, 30))) + (1,)
        b = tuple(rnd.randrange(2) for _ in range(rnd.randrange(0, 12))) + (1,)
        assert poly_mul(a, b, 2) == schoolbook_mul(a, b, 2)
        quo, rem = poly_divmod(a, b, 2)
        prod = schoolbook_mul(quo, b, 2) if quo else ()
        back = [0] * max(len(prod), len(rem))
        for i, c in enumerate(prod):
            back[i] ^= c
        for i, c in enumerate(rem):
            back[i] ^= c
        assert tuple(back) == a and len(rem) < len(b)


def test_sample_support_and_determinism():
    vals = [sg_sample(F2, 8, RngStream(4, i)) for i in range(3000)]
    support = {v.coeffs for v in vals}
    expected = {(1,)} | {f for d in range(1, 4) for f in monics(2, d)}
    assert support == expected and len(expected) == 15
    assert sg_sample(F2, 8, RngStream(4, 0)) == vals[0]
    assert sg_sample(IntegerSemigroup(), 100, RngStream(9, 9)) == sg_sample(IntegerSemigroup(), 100, RngStream(9, 9))
    assert 1 <= sg_sample(IntegerSemigroup(), 100, RngStream(9, 9)) <= 100
    with pytest.raises(DomainError):
        sg_sample(F2, 0.5, RngStream(0, 0))


def test_sample_uniform_over_norm_ball():
    from scipy import stats

    batch = F3.sample_batch(27, 39000, RngStream(5, 0))
    counts = {}
    for f in batch:
        counts[f.coeffs] = counts.get(f.coeffs, 0) + 1
    assert len(counts) == 1 + 3 + 9 + 27
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


@pytest.mark.parametrize("G", [F2, F3, PolynomialSemigroup(5)], ids=["F2", "F3", "F5"])
def test_norm_multiplicative_and_unique_factorization(G):
    rnd = random.Random(G.q)
    for _ in range(150):
        a = random_monic(G.q, rnd.randrange(0, 9), rnd)
        b = random_monic(G.q, rnd.randrange(0, 9), rnd)
        assert G.norm(G.multiply(a, b)) == G.norm(a) * G.norm(b)
        assert G.multiply(a, G.identity) == a
        f = random_monic(G.q, rnd.randrange(0, 17 if G.q < 5 else 9), rnd)
        out = G.identity
        for p, e in G.factorize(f):
            assert is_irreducible(p.coeffs, G.q) and G.norm(p) > 1
            for _ in range(e):
                out = G.multiply(out, p)
        assert out == f


@settings(max_examples=50)
@given(st.integers(1, 2**64))
def test_integer_instance_factorization(n):
    I = IntegerSemigroup()
    assert math.prod(p**e for p, e in I.factorize(n)) == n


def test_irreducible_counts_f2_to_degree_12():
    sieve = gf2_sieve_counts(12)
    for d in range(1, 13):
        assert len(irreducibles(2, d)) == sieve[d] == irreducible_count(2, d)


def test_irreducible_counts_f3():
    sieve = sieve_irreducible_counts(3, 6)
    for d in range(1, 7):
        assert len(irreducibles(3, d)) == sieve[d] == irreducible_count(3, d)
    for d in range(7, 10):
        assert len(irreducibles(3, d)) == irreducible_count(3, d)


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_gauss_identity(q):
    # sum over d | n of d * I_q(d) equals q^n
    for n in range(1, 13):
        assert sum(d * irreducible_count(q, d) for d in range(1, n + 1) if n % d == 0) == q**n


def test_pnt_ratio_instances():
    assert sg_pnt_ratio(IntegerSemigroup(), math.log(10**6)) == pnt_ratio(math.log(10**6))
    for n in range(1, 13):
        x = n * math.log(2)
        count = sum(irreducible_count(2, d) for d in range(1, n + 1))
        r = sg_pnt_ratio(F2, x)
        assert r == pytest.approx(x * math.exp(-x) * count, rel=1e-12)
        assert 0 < r < math.inf


def test_pair_extremes_generic_matches_integers():
    rnd = random.Random(8)
    for _ in range(30):
        batch = [rnd.randrange(1, 10**6) for _ in range(rnd.randrange(2, 25))]
        a = pair_extremes(batch)
        b = semigroup_pair_extremes(IntegerSemigroup(), batch)
        assert (a.max_gcd, a.max_common_prime, a.max_radical) == (b.max_gcd, b.max_common_prime, b.max_radical)


def test_pair_extremes_polynomials_brute_force():
    batch = F2.sample_batch(2**10, 25, RngStream(6, 0))
    best_g = best_l = best_r = 0
    for a, b in combinations(batch, 2):
        g = F2.gcd(a, b)
        best_g = max(best_g, F2.norm(g))
        fac = F2.factorize(g)
        best_l = max([best_l] + [F2.norm(p) for p, _ in fac])
        best_r = max(best_r, math.prod(F2.norm(p) for p, _ in fac))
    ext = semigroup_pair_extremes(F2, batch)
    assert (ext.max_gcd_norm, ext.max_common_prime_norm, ext.max_radical_norm) == (best_g, max(best_l, 1), best_r)


def test_window_primes_f2():
    w = F2.window_primes(5.0)
    assert {p.degree for p in w} == {3}
    assert len(w) == irreducible_count(2, 3)
    assert F3.window_primes(10.0) == []


def test_nonprime_field_rejected():
    with pytest.raises(DomainError):
        PolynomialSemigroup(4)
    with pytest.raises(DomainError):
        irreducibles(6, 2)
