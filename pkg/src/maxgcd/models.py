"""Idealised prime-divisor models: geometric multiplicities and Bernoulli urns.

The geometric model gives every prime p an independent multiplicity X with
``P[X >= m] = p^-m``; the log-GCD of two rows is ``sum_p min(X, X') ln p``.
The urn model drops one ball into urn p for each of n samples divisible by p,
independently with probability 1/p, and asks whether any urn in the prime
window receives two balls.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import _check_s, phi_solve
from .errors import DomainError
from .primes import PrimeTable, PrimeWindow, primes_upto, window
from .sampling import StreamLike, as_generator, uniform_open01

log = logging.getLogger(__name__)

DEFAULT_PRIME_CUTOFF = 10**5
_INVERSION_MEAN_LIMIT = 10.0


# geometric model


def sample_geometric(p: int, stream: StreamLike, size=None):
    """Draw X with ``P[X >= m] = p^-m`` via the inverse tail ``floor(-ln U / ln p)``."""
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    gen = as_generator(stream)
    u = uniform_open01(gen, size)
    x = np.floor(-np.log(u) / math.log(p))
    if size is None:
        return int(x)
    return x.astype(np.int64)


def _sparse_geometric(rows: int, primes: np.ndarray, gen: np.random.Generator):
    """Nonzero entries of a ``rows x len(primes)`` independent geometric matrix.

    Equivalent in law to filling every entry by inverse tail: the number of
    rows with ``X >= 1`` in a column is Binomial(rows, 1/p), those rows are a
    uniform subset, and by memorylessness each nonzero value is
    ``1 + geometric``.
    Returns ``(prime_index, row_index, value)`` arrays ordered by prime.
    """
    probs = 1.0 / primes.astype(np.float64)
    counts = binomial_variates(rows, probs, gen)
    cols, rws = [], []
    for i in np.flatnonzero(counts):
        k = int(counts[i])
        cols.append(np.full(k, i, dtype=np.int64))
        rws.append(gen.choice(rows, size=k, replace=False))
    if not cols:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    col = np.concatenate(cols)
    row = np.concatenate(rws).astype(np.int64)
    u = uniform_open01(gen, col.size)
    val = 1 + np.floor(-np.log(u) / np.log(primes[col].astype(np.float64))).astype(np.int64)
    return col, row, val


@dataclass(frozen=True)
class GeometricMatrix:
    """Rows of truncated geometric multiplicity vectors over the primes ``<= prime_cutoff``."""

    rows: int
    prime_cutoff: int
    table: PrimeTable
    entries: np.ndarray  # shape (rows, len(table)), int64

    @property
    def primes(self) -> np.ndarray:
        return self.table.primes


def sample_geometric_matrix(rows: int, prime_cutoff: int, stream: StreamLike) -> GeometricMatrix:
    if rows < 1:
        raise DomainError(f"rows must be >= 1, got {rows}")
    table = primes_upto(prime_cutoff)
    gen = as_generator(stream)
    col, row, val = _sparse_geometric(rows, table.primes, gen)
    entries = np.zeros((rows, len(table)), dtype=np.int64)
    entries[row, col] = val
    return GeometricMatrix(rows=rows, prime_cutoff=prime_cutoff, table=table, entries=entries)


def pair_log_gcd(v1: np.ndarray, v2: np.ndarray, table: PrimeTable) -> float:
    """``sum_i min(v1[i], v2[i]) ln p_i`` over the primes of ``table``."""
    v1, v2 = np.asarray(v1), np.asarray(v2)
    if v1.shape != v2.shape or v1.shape[0] != len(table):
        raise DomainError(f"rows of length {v1.shape}, {v2.shape} do not match {len(table)} primes")
    m = np.minimum(v1, v2)
    nz = np.flatnonzero(m)
    return math.fsum(m[nz] * np.log(table.primes[nz].astype(np.float64)))


def max_pair_log_gcd(matrix: GeometricMatrix) -> tuple[float, tuple[int, int]]:
    """``Delta_N``: the largest pairwise log-GCD in ``matrix`` and its row pair.

    Only columns with at least two nonzero rows can contribute, so the pair
    table is filled from those columns alone, in ascending prime order.
    """
    n = matrix.rows
    if n < 2:
        raise DomainError("need at least two rows")
    acc = np.zeros((n, n))
    e = matrix.entries
    multi = np.flatnonzero((e > 0).sum(axis=0) >= 2)
    logs = np.log(matrix.primes.astype(np.float64))
    for c in multi:
        rows = np.flatnonzero(e[:, c])
        vals = e[rows, c]
        mins = np.minimum.outer(vals, vals) * logs[c]
        acc[np.ix_(rows, rows)] += mins
    iu = np.triu_indices(n, k=1)
    flat = acc[iu]
    k = int(np.argmax(flat))
    return float(flat[k]), (int(iu[0][k]), int(iu[1][k]))


@dataclass(frozen=True)
class MomentEstimate:
    """Sample mean of ``exp(s L)`` with a normal confidence half-width.

    ``tilt`` is the importance-sampling exponent used (0 means plain sampling).
    """

    mean: float
    ci_halfwidth: float
    n_samples: int
    z: float
    tilt: float = 0.0


DEFAULT_TILT = 0.6
_MOMENT_CHUNK = 10**7


def moment_estimate(
    s: float,
    n_samples: int,
    prime_cutoff: int,
    stream: StreamLike,
    z: float = 2.5758293035489,
    tilt: float = DEFAULT_TILT,
) -> MomentEstimate:
    """Monte Carlo estimate of ``E[exp(s L)]`` over independent geometric pairs.

    For each prime, ``min(X, X')`` is geometric with ``P[min >= m] = p^-2m``,
    so pairs are sampled through their minima. Under plain sampling
    ``exp(s L)`` has only two finite moments per prime and a variance that
    grows like ``exp(sum_p p^(2s-2))``, so the sample mean runs low and its
    normal interval undercovers at any practical sample size.

    With ``tilt = t > 0`` the minima are drawn with the heavier tail
    ``r_p^m``, ``r_p = p^(t s - 2)``, and each sample is reweighted by the
    likelihood ratio. The estimator stays unbiased, and per prime
    ``p^(s m) P(m) / Q(m) = (1 - p^-2) / (1 - r_p) * p^((1 - t) s m)``.
    ``tilt=0`` recovers plain sampling. The default ``z`` gives a 99% interval.

    Args:
        s: Exponent in (0, 1).
        n_samples: Number of independent pairs.
        prime_cutoff: Largest prime included.
        stream: Random stream.
        z: Normal quantile for the half-width.
        tilt: Importance-sampling exponent in [0, 1).
    """
    _check_s(s)
    if n_samples < 2:
        raise DomainError("need at least two samples")
    if not 0.0 <= tilt < 1.0:
        raise DomainError(f"tilt must lie in [0, 1), got {tilt}")
    primes = primes_upto(prime_cutoff).primes.astype(np.float64)
    logp = np.log(primes)
    r = np.exp((tilt * s - 2.0) * logp)
    base = math.fsum(np.log1p(-1.0 / primes**2) - np.log1p(-r))
    step = (1.0 - tilt) * s * logp
    gen = as_generator(stream)
    total = total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(_MOMENT_CHUNK, n_samples - done)
        counts = gen.binomial(m, r)
        idx, w = [], []
        for i in np.flatnonzero(counts):
            k = int(counts[i])
            idx.append(gen.choice(m, size=k, replace=False))
            # given min >= 1, min - 1 is geometric with ratio r by memorylessness
            w.append(gen.geometric(1.0 - r[i], size=k) * step[i])
        log_x = np.full(m, base)
        if idx:
            log_x += np.bincount(np.concatenate(idx), weights=np.concatenate(w), minlength=m)
        x = np.exp(log_x)
        total += math.fsum(x)
        total_sq += math.fsum(x * x)
        done += m
    mean = total / n_samples
    var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    half = z * math.sqrt(var / n_samples)
    return MomentEstimate(mean=mean, ci_halfwidth=half, n_samples=n_samples, z=z, tilt=tilt)


# binomial variates


def binomial_variates(n: int, probs, gen: np.random.Generator) -> np.ndarray:
    """One Binomial(n, p) draw per entry of ``probs``.

    Entries with ``n p < 10`` use sequential-search inversion of the CDF, which
    takes O(1) expected steps there; larger means go to numpy's BTPE sampler.
    """
    probs = np.atleast_1d(np.asarray(probs, dtype=np.float64))
    out = np.zeros(probs.size, dtype=np.int64)
    if n <= 0 or probs.size == 0:
        return out
    small = n * probs < _INVERSION_MEAN_LIMIT
    idx = np.flatnonzero(small)
    if idx.size:
        out[idx] = _binomial_inversion(n, probs[idx], gen)
    big = np.flatnonzero(~small)
    if big.size:
        out[big] = gen.binomial(n, probs[big])
    return out


def _binomial_inversion(n: int, p: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    u = gen.random(p.size)
    q = 1.0 - p
    pk = np.exp(n * np.log1p(-p))  # P[D = 0]
    cdf = pk.copy()
    k = np.zeros(p.size, dtype=np.int64)
    active = u > cdf
    step = 0
    while active.any() and step < n:
        step += 1
        a = np.flatnonzero(active)
        pk[a] *= (n - step + 1) / step * p[a] / q[a]
        cdf[a] += pk[a]
        k[a] = step
        active[a] = u[a] > cdf[a]
    return k


# urn model


@dataclass(frozen=True)
class UrnConfig:
    """n samples dropped into the urns labelled by the window primes.

    ``weights`` are ``sqrt(ln p)``; a collision at p contributes ``weight^2 = ln p``.
    """

    n: int
    window: PrimeWindow
    weights: np.ndarray = field(repr=False)

    @classmethod
    def from_window(cls, n: int, w: PrimeWindow) -> "UrnConfig":
        weights = np.sqrt(np.log(w.primes.astype(np.float64)))
        return cls(n=n, window=w, weights=weights)

    @classmethod
    def calibrated(cls, n: int, delta: float) -> "UrnConfig":
        """Window built from ``phi_solve(n, delta)``."""
        return cls.from_window(n, window(phi_solve(n, delta).phi))


@dataclass(frozen=True)
class UrnOutcome:
    collision: bool
    largest_colliding_prime: int | None

    @property
    def log_collision(self) -> float:
        """Largest ``ln p`` over colliding urns (0.0 without a collision)."""
        return math.log(self.largest_colliding_prime) if self.largest_colliding_prime else 0.0


def urn_trial(config: UrnConfig, stream: StreamLike) -> UrnOutcome:
    """Sample every urn count ``D_p ~ Binomial(n, 1/p)`` and report collisions."""
    if len(config.window) == 0:
        raise DomainError("urn window is empty")
    if config.n < 2:
        return UrnOutcome(False, None)
    gen = as_generator(stream)
    d = binomial_variates(config.n, 1.0 / config.window.primes.astype(np.float64), gen)
    hit = np.flatnonzero(d >= 2)
    if hit.size == 0:
        return UrnOutcome(False, None)
    return UrnOutcome(True, int(config.window.primes[hit[-1]]))


def urn_exact_no_collision(n: int, w: PrimeWindow) -> float:
    """``prod_p (1 - 1/p)^n (1 + n/(p - 1))``: probability that no window urn gets two balls."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    p = w.primes.astype(np.float64)
    if p.size == 0:
        return 1.0
    logs = n * np.log1p(-1.0 / p) + np.log1p(n / (p - 1.0))
    return math.exp(math.fsum(logs))


# couplings


@dataclass(frozen=True)
class CouplingSpec:
    """Tail probabilities ``q[k-1] = P[X >= k]`` dominated by ``p^-k``; ``q_k = 0`` beyond."""

    p: int
    q: tuple[float, ...]

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"p must be >= 2, got {self.p}")
        prev = 1.0
        for k, qk in enumerate(self.q, start=1):
            if not 0.0 <= qk <= prev:
                raise DomainError(f"tail probabilities must be non-increasing in [0, 1]; q_{k}={qk}")
            if qk > self.p ** (-k) * (1 + 1e-12):
                raise DomainError(f"dominance violated: q_{k}={qk} > {self.p}^-{k}")
            prev = qk

    @classmethod
    def scaled(cls, p: int, factor: float, depth: int = 40) -> "CouplingSpec":
        """``q_k = factor * p^-k`` for k up to ``depth``."""
        return cls(p, tuple(factor * p ** (-k) for k in range(1, depth + 1)))

    def tail(self, m: int) -> float:
        if m <= 0:
            return 1.0
        return self.q[m - 1] if m <= len(self.q) else 0.0


@dataclass(frozen=True)
class CoupledDraw:
    x_constrained: np.ndarray | int
    x_geometric: np.ndarray | int
    censored: np.ndarray | bool = False


def _geometric_from_uniform(u: np.ndarray, p: int) -> np.ndarray:
    """``max{m : u <= p^-m}``, with the log formula corrected at rounding boundaries."""
    x = np.floor(-np.log(u) / math.log(p)).astype(np.int64)
    pf = float(p)
    up = u <= pf ** -(x + 1.0)
    while up.any():
        x[up] += 1
        up = u <= pf ** -(x + 1.0)
    down = (x > 0) & (u > pf ** -x.astype(np.float64))
    while down.any():
        x[down] -= 1
        down = (x > 0) & (u > pf ** -x.astype(np.float64))
    return x


def couple_inverse_tail(spec: CouplingSpec, stream: StreamLike, size=None) -> CoupledDraw:
    """Monotone coupling from one uniform U.

    ``x_geometric = max{m : U <= p^-m}`` and ``x_constrained = max{m : U <= q_m}``;
    since ``q_m <= p^-m`` the second never exceeds the first.
    """
    gen = as_generator(stream)
    u = uniform_open01(gen, 1 if size is None else size)
    xg = _geometric_from_uniform(u, spec.p)
    k = np.arange(1, len(spec.q) + 1, dtype=np.float64)
    # min() absorbs the 1e-12 validation slack on q_m <= p^-m
    q = np.minimum(np.asarray(spec.q, dtype=np.float64), float(spec.p) ** -k)
    # q is non-increasing, so the count of thresholds reached is the max index
    xc = (u[:, None] <= q[None, :]).sum(axis=1).astype(np.int64) if q.size else np.zeros_like(xg)
    if size is None:
        return CoupledDraw(int(xc[0]), int(xg[0]))
    return CoupledDraw(xc, xg)


def couple_verbatim(spec: CouplingSpec, stream: StreamLike, size=None, max_steps: int = 256) -> CoupledDraw:
    """Product-of-uniforms construction executed literally.

    ``x_geometric = min{k : U_0 ... U_k > p^-k}`` and
    ``x_constrained = min{k : U_0 ... U_k > q_k}`` with ``q_0 = 1``. Runs that
    have not crossed the geometric threshold after ``max_steps`` steps are
    marked ``censored`` and reported as ``max_steps``.
    """
    gen = as_generator(stream)
    m = 1 if size is None else size
    log_prod = np.zeros(m)
    xg = np.full(m, -1, dtype=np.int64)
    xc = np.full(m, -1, dtype=np.int64)
    log_p = math.log(spec.p)
    for k in range(max_steps):
        log_prod += np.log(uniform_open01(gen, m))
        qk = spec.tail(k)
        open_c = xc < 0
        if qk <= 0.0:
            xc[open_c] = k
        else:
            # q_k <= p^-k; take the min so rounding in log() cannot reorder them
            xc[open_c & (log_prod > min(math.log(qk), -k * log_p))] = k
        xg[(xg < 0) & (log_prod > -k * log_p)] = k
        if (xg >= 0).all() and (xc >= 0).all():
            break
    censored = xg < 0
    xg[censored] = max_steps
    xc[xc < 0] = max_steps
    if size is None:
        return CoupledDraw(int(xc[0]), int(xg[0]), bool(censored[0]))
    return CoupledDraw(xc, xg, censored)


def tail_report(x: np.ndarray, p: int, max_m: int = 5) -> list[dict]:
    """Empirical ``P[X >= m]`` against ``p^-m`` for m = 0..max_m."""
    n = x.size
    out = []
    for m in range(max_m + 1):
        emp = float((x >= m).sum()) / n
        ref = float(p) ** -m
        out.append({"m": m, "empirical": emp, "expected": ref, "difference": emp - ref})
    return out


def log_verbatim_discrepancy(x_geometric: np.ndarray, p: int, max_m: int = 5, sigmas: float = 3.0) -> list[dict]:
    """Log every tail of the verbatim geometric side that misses ``p^-m`` by more than ``sigmas`` SEs."""
    rows = tail_report(x_geometric, p, max_m)
    n = x_geometric.size
    flagged = []
    for r in rows:
        se = math.sqrt(max(r["expected"] * (1 - r["expected"]), 1e-300) / n)
        if abs(r["difference"]) > sigmas * se:
            log.warning(
                "verbatim coupling: P[X' >= %d] = %.6f, geometric target %.6f (p=%d)",
                r["m"], r["empirical"], r["expected"], p,
            )
            flagged.append(r)
    return flagged


__all__: Sequence[str] = [
    "CoupledDraw",
    "CouplingSpec",
    "GeometricMatrix",
    "MomentEstimate",
    "UrnConfig",
    "UrnOutcome",
    "binomial_variates",
    "couple_inverse_tail",
    "couple_verbatim",
    "log_verbatim_discrepancy",
    "max_pair_log_gcd",
    "moment_estimate",
    "pair_log_gcd",
    "sample_geometric",
    "sample_geometric_matrix",
    "tail_report",
    "urn_exact_no_collision",
    "urn_trial",
]
