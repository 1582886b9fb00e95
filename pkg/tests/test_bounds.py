import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from maxgcd.bounds import (
    REFERENCE_CUTOFF,
    BoundParams,
    adaptive_simpson,
    collision_integral,
    cs_product,
    exact_min_moment,
    markov_threshold,
    phi_envelope_check,
    phi_solve,
    radical_product,
    tail_weight_bound,
)
from maxgcd.errors import DomainError, InfeasibleError
from maxgcd.primes import primes_upto


def series_min_moment(p, s, terms=400):
    # E[p^(s M)] with P[M = m] = (1 - p^-2) p^(-2m)
    return math.fsum((1 - p**-2.0) * float(p) ** ((s - 2.0) * m) for m in range(terms))


def test_exact_min_moment_examples():
    assert exact_min_moment(2, 0.999) == pytest.approx(1.49896, abs=1e-5)
    assert exact_min_moment(2, 0.5) == pytest.approx(1 + (math.sqrt(2) - 1) / (4 - math.sqrt(2)), rel=1e-14)
    assert exact_min_moment(2, 0.5) == pytest.approx(1.16018, abs=1e-5)
    assert exact_min_moment(97, 1e-9) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DomainError):
        exact_min_moment(2, 1.0)
    with pytest.raises(DomainError):
        exact_min_moment(2, 0.0)


@given(st.sampled_from([2, 3, 5, 7, 11, 101, 7919]), st.floats(0.01, 0.99))
def test_exact_min_moment_series_oracle(p, s):
    assert exact_min_moment(p, s) == pytest.approx(series_min_moment(p, s), rel=1e-12)
    assert exact_min_moment(p, s) < 1 + p ** (s - 2)


@given(st.floats(0.05, 0.99), st.integers(2, 20000))
def test_radical_factor_below_cs_factor(s, cutoff):
    for p in primes_upto(cutoff).tolist()[:50]:
        assert 1 - p**-2.0 + p ** (s - 2) <= exact_min_moment(p, s) + 1e-15


def test_product_one_term():
    assert cs_product(0.5, 2).value == pytest.approx(exact_min_moment(2, 0.5), rel=1e-15)
    assert radical_product(0.5, 2).value == pytest.approx(1 - 0.25 + 2**-1.5, rel=1e-15)
    assert round(radical_product(0.5, 2).value, 5) == 1.10355


def test_product_matches_direct_multiplication():
    ps = primes_upto(1000).tolist()
    direct = math.prod(exact_min_moment(p, 0.7) for p in ps)
    assert cs_product(0.7, 1000).value == pytest.approx(direct, rel=1e-12)
    assert cs_product(0.7, 1000).largest_prime == 997


def test_tail_bound_formula():
    r = cs_product(0.9, 10**8)
    assert r.log_tail_bound == pytest.approx((1e8) ** -0.1 / 0.1, rel=1e-12)
    assert math.isfinite(r.value) and r.value > 1


def test_bracket_contains_refined_value():
    coarse = cs_product(0.6, 10**4)
    fine = cs_product(0.6, 10**6)
    assert coarse.value <= fine.value <= coarse.upper
    assert coarse.log_upper == pytest.approx(math.log(coarse.upper))


@given(st.integers(2, 10**5), st.integers(2, 10**5))
def test_products_monotone_in_cutoff(c1, c2):
    lo, hi = sorted((c1, c2))
    assert cs_product(0.8, lo).value <= cs_product(0.8, hi).value
    assert radical_product(0.8, lo).value <= radical_product(0.8, hi).value


def test_ratio_truncation_robust():
    for c in (10**5, 10**6, 10**7):
        ratio = cs_product(0.999, c).value / radical_product(0.999, c).value
        assert ratio == pytest.approx(1.418, abs=0.005)


def test_reference_constants():
    cs = cs_product(0.999, REFERENCE_CUTOFF)
    rad = radical_product(0.999, REFERENCE_CUTOFF)
    assert cs.value == pytest.approx(17.64, abs=0.05)
    assert rad.value == pytest.approx(12.44, abs=0.05)


def test_upper_overflows_to_inf():
    r = cs_product(0.999, 10**4)
    assert r.upper == math.inf
    assert r.log_upper > 900


def test_markov_examples():
    assert markov_threshold(100, 0.8, 1) == 10**5
    assert markov_threshold(10, 0.9999, 1) == 101
    t = markov_threshold(100, 0.9, 5.0)
    assert t == math.ceil(100 ** (2 / 0.9) * 5.0 ** (1 / 0.9))


@given(st.integers(2, 10**4), st.sampled_from([0.5, 0.8, 0.9, 0.75]), st.floats(0.5, 50))
def test_markov_is_exact_ceiling(n, s, b):
    from fractions import Fraction

    t = markov_threshold(n, s, b)
    sf, bf = Fraction(repr(s)), Fraction(repr(b))
    # t^s >= n^2 b > (t-1)^s, in integers
    a, c = sf.numerator, sf.denominator
    rhs = (n * n * bf.numerator) ** c
    assert t**a * bf.denominator**c >= rhs
    assert (t - 1) ** a * bf.denominator**c < rhs


@given(st.integers(2, 1000), st.floats(1, 20))
def test_markov_b_scaling(n, b):
    s = 0.8
    t1 = markov_threshold(n, s, b)
    t2 = markov_threshold(n, s, b * 2**s)
    assert abs(t2 - 2 * t1) <= 2


def test_adaptive_simpson_against_quad():
    f = lambda x: math.exp(-x) * math.sin(5 * x)  # noqa: E731
    assert adaptive_simpson(f, 0, 3, 1e-12) == pytest.approx(integrate.quad(f, 0, 3, epsabs=1e-14)[0], abs=1e-11)


@given(st.floats(3, 1e9), st.integers(2, 10**6))
def test_collision_integral_against_quad(phi, n):
    exact = integrate.quad(lambda x: n * n / (2 * x * x * math.log(x)), phi, 2 * phi, epsabs=0, epsrel=1e-13)[0]
    assert collision_integral(phi, n) == pytest.approx(exact, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("n", [10**3, 10**4, 10**5, 10**6])
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_phi_residual(n, delta):
    sol = phi_solve(n, delta)
    assert sol.residual <= 1e-9 * delta
    exact = integrate.quad(lambda x: n * n / (2 * x * x * math.log(x)), sol.phi, 2 * sol.phi, epsrel=1e-13)[0]
    assert exact == pytest.approx(delta, rel=1e-9)
    env = phi_envelope_check(sol)
    assert env.lower_ok and env.upper_ok


def test_phi_examples():
    sol = phi_solve(10**6, 1)
    assert sol.phi == pytest.approx(1.08e10, rel=0.02)
    assert 0.24 <= phi_envelope_check(sol).ratio <= 0.26
    sol = phi_solve(2000, 1)
    assert sol.phi == pytest.approx(8.7e4, rel=0.03)
    assert sol.phi * math.log(sol.phi) == pytest.approx(2000**2 / 4, rel=0.03)


def test_phi_scaling_identity():
    # delta is linear in n^2, so (sqrt(2) n, 2 delta) has the same root
    n = 5000
    m = math.sqrt(2) * n
    a = phi_solve(n, 1.0).phi
    b = phi_solve(round(m), 2.0 * (round(m) / m) ** 2).phi
    assert b == pytest.approx(a, rel=1e-9)
    c = phi_solve(math.ceil(m), 2.0).phi
    assert c == pytest.approx(a, rel=1e-3)


@given(st.integers(20, 10**5))
def test_phi_decreasing_in_delta(n):
    try:
        small = phi_solve(n, 2.0).phi
    except InfeasibleError:
        return
    assert phi_solve(n, 0.5).phi > phi_solve(n, 1.0).phi > small


def test_phi_infeasible_and_domain():
    with pytest.raises(InfeasibleError):
        phi_solve(2, 1.0)
    with pytest.raises(DomainError):
        phi_solve(1, 1.0)
    with pytest.raises(DomainError):
        phi_solve(100, 0)
    with pytest.raises(DomainError):
        phi_envelope_check(phi_solve(10, 0.5))


def test_tail_weight_bound():
    assert tail_weight_bound(100) == pytest.approx((math.log(100) + 1) / 100)
    assert tail_weight_bound(100) <= 0.0561
    assert tail_weight_bound(10**6) <= 1.49e-5
    ps = primes_upto(10**6).primes.astype(float)
    tail = np.sum(np.log(ps[ps > 100]) / ps[ps > 100] ** 2)
    assert tail <= tail_weight_bound(100)
    assert tail_weight_bound(1000) < tail_weight_bound(100)


def test_bound_params_validation():
    BoundParams()
    with pytest.raises(DomainError):
        BoundParams(s=1.2)
    with pytest.raises(DomainError):
        BoundParams(b=0)
