"""Deterministic evaluation of the analytic bound constants.

Covers the Euler products over primes that control the exponential moment of
the log-GCD (and its radical analogue), the Markov/union-bound threshold for
the largest GCD, the implicit collision threshold ``phi_N[delta]`` together
with its elementary envelope, and tail bounds for the truncated products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from .errors import DomainError, InfeasibleError
from .primes import iter_prime_segments

# Cutoff at which the truncated products at s = 0.999 match 17.64 and 12.44
# simultaneously (recovered by scanning with locate_joint_cutoff).
REFERENCE_S = 0.999
REFERENCE_CUTOFF = 15_450_000
REFERENCE_CS = 17.64
REFERENCE_RADICAL = 12.44

PHI_RESIDUAL_RTOL = 1e-9
_EPS = np.finfo(float).eps


def _check_s(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")


def exact_min_moment(p: int, s: float) -> float:
    """``E[p^(s*min(X, X'))]`` for two independent geometrics with tail ``p^-m``.

    Equals ``1 + (p^s - 1) / (p^2 - p^s)``.
    """
    _check_s(s)
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    ps = float(p) ** s
    return 1.0 + (ps - 1.0) / (float(p) ** 2 - ps)


def _log_cs_factors(p: np.ndarray, s: float) -> np.ndarray:
    ps = p**s
    return np.log1p((ps - 1.0) / (p * p - ps))


def _log_radical_factors(p: np.ndarray, s: float) -> np.ndarray:
    return np.log1p(p ** (s - 2.0) - p**-2.0)


@dataclass(frozen=True)
class ProductResult:
    """A truncated Euler product with a rigorous bound on the omitted log-mass.

    ``cutoff`` is the requested prime cutoff X and ``largest_prime`` the
    largest prime actually included. The untruncated product lies in
    ``[value, value * exp(log_tail_bound)]``.
    """

    value: float
    cutoff: int
    largest_prime: int
    log_tail_bound: float
    s: float

    @property
    def log_upper(self) -> float:
        """Natural log of the upper end of the bracket."""
        return math.log(self.value) + self.log_tail_bound

    @property
    def upper(self) -> float:
        """Upper end of the bracket; ``inf`` when it overflows a double."""
        try:
            return self.value * math.exp(self.log_tail_bound)
        except OverflowError:
            return math.inf


def _euler_product(s: float, cutoff: int, log_factors: Callable[[np.ndarray, float], np.ndarray]) -> ProductResult:
    _check_s(s)
    cutoff = int(cutoff)
    if cutoff < 2:
        raise DomainError(f"cutoff must be >= 2, got {cutoff}")
    partials = []
    largest = 2
    for seg in iter_prime_segments(2, cutoff):
        partials.append(math.fsum(log_factors(seg.astype(np.float64), s)))
        largest = int(seg[-1])
    log_value = math.fsum(partials)
    # sum_{p > X} p^(s-2) <= int_X^inf x^(s-2) dx
    tail = cutoff ** (s - 1.0) / (1.0 - s)
    return ProductResult(value=math.exp(log_value), cutoff=cutoff, largest_prime=largest, log_tail_bound=tail, s=s)


def cs_product(s: float, cutoff: int) -> ProductResult:
    """Truncated ``C_s = prod_p (1 + (p^s - 1)/(p^2 - p^s))`` over primes ``<= cutoff``."""
    return _euler_product(s, cutoff, _log_cs_factors)


def radical_product(s: float, cutoff: int) -> ProductResult:
    """Truncated ``prod_p (1 - p^-2 + p^(s-2))`` over primes ``<= cutoff``."""
    return _euler_product(s, cutoff, _log_radical_factors)


@dataclass(frozen=True)
class JointCutoff:
    first: int
    last: int
    cs_at_first: float
    radical_at_first: float


def locate_joint_cutoff(
    s: float = REFERENCE_S,
    cs_target: float = REFERENCE_CS,
    radical_target: float = REFERENCE_RADICAL,
    tol: float = 0.05,
    search_limit: int = 30_000_000,
) -> JointCutoff | None:
    """Scan prime cutoffs for the range where both truncated products are within ``tol``.

    Returns the first and last prime cutoff of the (contiguous) matching range,
    or ``None`` if no cutoff up to ``search_limit`` matches.
    """
    _check_s(s)
    log_cs = log_rad = 0.0
    first = last = None
    at_first = (0.0, 0.0)
    for seg in iter_prime_segments(2, search_limit):
        p = seg.astype(np.float64)
        c = log_cs + np.cumsum(_log_cs_factors(p, s))
        r = log_rad + np.cumsum(_log_radical_factors(p, s))
        ok = (np.abs(np.exp(c) - cs_target) <= tol) & (np.abs(np.exp(r) - radical_target) <= tol)
        if ok.any():
            idx = np.flatnonzero(ok)
            if first is None:
                first = int(seg[idx[0]])
                at_first = (float(np.exp(c[idx[0]])), float(np.exp(r[idx[0]])))
            last = int(seg[idx[-1]])
        elif first is not None:
            break
        log_cs = float(c[-1])
        log_rad = float(r[-1])
    if first is None:
        return None
    return JointCutoff(first=first, last=last, cs_at_first=at_first[0], radical_at_first=at_first[1])


def _decimal_fraction(x: float) -> Fraction:
    """Read a float at its shortest decimal repr, so 0.8 means 4/5."""
    return Fraction(repr(float(x)))


def _power_ge(t: int, s: Fraction, n: int, b: Fraction) -> bool:
    """Exact test of ``t^s >= n^2 * b`` for rational s, b."""
    a, c = s.numerator, s.denominator
    lhs = t**a * b.denominator**c
    rhs = (n * n * b.numerator) ** c
    return lhs >= rhs


def markov_threshold(n: int, s: float, b: float) -> int:
    """``ceil(n^(2/s) * b^(1/s))`` as an exact integer.

    ``s`` and ``b`` are interpreted at their shortest decimal representation.
    """
    _check_s(s)
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not b > 0:
        raise DomainError(f"b must be positive, got {b}")
    sf, bf = _decimal_fraction(s), _decimal_fraction(b)
    log10_size = (2 * math.log10(n) + math.log10(b)) / s
    with mpmath.workdps(int(max(log10_size, 0)) + 30):
        approx = mpmath.power(n, mpmath.mpf(2) / mpmath.mpf(sf.numerator) * sf.denominator) * mpmath.power(
            mpmath.mpf(bf.numerator) / bf.denominator, mpmath.mpf(sf.denominator) / sf.numerator
        )
        t = int(mpmath.ceil(approx))
    if sf.denominator > 10**6:
        return max(t, 1)
    t = max(t, 1)
    # settle the ceiling exactly: smallest t with t^s >= n^2 b
    while t > 1 and _power_ge(t - 1, sf, n, bf):
        t -= 1
    while not _power_ge(t, sf, n, bf):
        t += 1
    return t


# adaptive Simpson quadrature


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float, max_depth: int = 60) -> float:
    """Integral of ``f`` over ``[a, b]`` to absolute tolerance ``tol`` (Richardson-corrected)."""
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    parts = []
    while stack:
        a0, b0, fa0, fm0, fb0, w, t, depth = stack.pop()
        m = (a0 + b0) / 2
        lm, rm = (a0 + m) / 2, (m + b0) / 2
        flm, frm = f(lm), f(rm)
        left = (m - a0) / 6 * (fa0 + 4 * flm + fm0)
        right = (b0 - m) / 6 * (fm0 + 4 * frm + fb0)
        err = left + right - w
        # below ~64 ulps of the panel value the error estimate is roundoff
        if depth >= max_depth or abs(err) <= max(15 * t, 64 * _EPS * abs(left + right)):
            parts.append(left + right + err / 15)
        else:
            stack.append((m, b0, fm0, frm, fb0, right, t / 2, depth + 1))
            stack.append((a0, m, fa0, flm, fm0, left, t / 2, depth + 1))
    return math.fsum(parts)


def collision_integral(phi: float, n: int, tol: float = 1e-12) -> float:
    """``int_phi^{2 phi} n^2 / (2 x^2 ln x) dx``, evaluated after ``x = phi * t``.

    ``tol`` is the absolute tolerance on the returned value.
    """
    if not phi > 1:
        raise DomainError(f"phi must exceed 1, got {phi}")
    scale = n * n / (2.0 * phi)
    log_phi = math.log(phi)

    def g(t: float) -> float:
        return 1.0 / (t * t * (log_phi + math.log(t)))

    return scale * adaptive_simpson(g, 1.0, 2.0, tol / scale)


@dataclass(frozen=True)
class PhiSolution:
    n: int
    delta: float
    phi: float
    residual: float


def _asymptotic_phi(n: int, delta: float) -> float:
    """Solve ``phi ln phi = n^2 / (4 delta)`` by fixed-point iteration."""
    target = n * n / (4.0 * delta)
    phi = max(target, math.e)
    for _ in range(100):
        nxt = target / math.log(max(phi, math.e))
        if abs(nxt - phi) <= 1e-12 * phi:
            break
        phi = nxt
    return max(phi, math.e)


def phi_solve(n: int, delta: float) -> PhiSolution:
    """Solve ``collision_integral(phi, n) == delta`` for ``phi > e`` by bisection.

    The bracket is grown geometrically from the asymptotic guess
    ``phi ln phi ~ n^2 / (4 delta)``.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    tol = 1e-12 * delta

    def resid(phi: float) -> float:
        return collision_integral(phi, n, tol) - delta

    if resid(math.e) <= 0:
        raise InfeasibleError(f"no root phi > e for n={n}, delta={delta}: n is too small for this delta")
    guess = _asymptotic_phi(n, delta)
    lo, hi = guess, guess
    while lo > math.e and resid(lo) <= 0:
        lo = max(lo / 2, math.e)
    while resid(hi) > 0:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        r = resid(mid)
        if r > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    r_lo, r_hi = abs(resid(lo)), abs(resid(hi))
    phi, r = (lo, r_lo) if r_lo <= r_hi else (hi, r_hi)
    return PhiSolution(n=n, delta=float(delta), phi=phi, residual=r)


@dataclass(frozen=True)
class EnvelopeCheck:
    lower_ok: bool
    upper_ok: bool
    ratio: float


def phi_envelope_check(sol: PhiSolution) -> EnvelopeCheck:
    """Check ``n^2/(8 delta ln n) < phi < n^2/2``; ``ratio = phi ln phi delta / n^2`` tends to 1/4."""
    if sol.n < 16:
        raise DomainError(f"envelope check needs n >= 16, got {sol.n}")
    n2 = float(sol.n) ** 2
    lower = n2 / (8 * sol.delta * math.log(sol.n))
    return EnvelopeCheck(
        lower_ok=sol.phi > lower,
        upper_ok=sol.phi < n2 / 2,
        ratio=sol.phi * math.log(sol.phi) * sol.delta / n2,
    )


def tail_weight_bound(cutoff: int) -> float:
    """Upper bound ``(ln X + 1)/X`` on ``sum_{p > X} ln(p) / p^2``."""
    if cutoff < 2:
        raise DomainError(f"cutoff must be >= 2, got {cutoff}")
    return (math.log(cutoff) + 1.0) / cutoff


@dataclass(frozen=True)
class BoundParams:
    s: float = 0.9
    b: float = 1.0
    eta: float = 0.5
    theta: float = 8.0

    def __post_init__(self):
        _check_s(self.s)
        for name in ("b", "eta", "theta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
