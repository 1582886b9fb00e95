"""Monte Carlo experiments, event frequencies and report files.

Every trial draws from its own stream ``RngStream(master_seed, trial_index)``,
so a report is a pure function of the configuration. Trials may run in worker
processes; results are gathered and aggregated in trial order, and all event
counts are exact integers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .bounds import cs_product, markov_threshold, phi_solve, radical_product
from .errors import ConfigError, DomainError, InfeasibleError, ReportIOError
from .models import (
    UrnConfig,
    max_pair_log_gcd,
    moment_estimate,
    sample_geometric_matrix,
    urn_exact_no_collision,
    urn_trial,
)
from .primes import PrimeWindow, window
from .sampling import RngStream, SampleRange, parse_alpha
from .semigroup import IntegerSemigroup, Semigroup, make_semigroup, semigroup_pair_extremes, window_counts

SCHEMA_VERSION = "maxgcd-report/1"
MODES = ("integers", "urn", "geometric", "semigroup", "power-range")
DEFAULT_SEED = 1
EVENT_Z = 3.0
COLLISION_SLACK = 0.08
# stream index reserved for the auxiliary moment estimate in geometric mode
MOMENT_STREAM = (1 << 64) - 1
_THETA_PER_DELTA = 8.0


def wilson_interval(successes: int, trials: int, z: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    >>> lo, hi = wilson_interval(632, 1000, 1.96)
    >>> round(lo, 4), round(hi, 4)
    (0.6017, 0.6613)
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise DomainError(f"successes must lie in [0, {trials}], got {successes}")
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    ``theta`` and ``delta`` are tied by ``theta = 8 delta``; give either one,
    or both if they agree. ``b=None`` means the Euler product ``C_s``
    truncated at ``prime_cutoff``. ``r`` is the exponent of the sampling
    range ``[1, n^r]`` in power-range mode; ``instance`` and ``q`` select the
    semigroup.
    """

    mode: str = "integers"
    n: int = 100
    alpha: str = "1"
    delta: float | None = None
    theta: float | None = None
    eta: float = 0.5
    s: float = 0.9
    b: float | None = None
    trials: int = 1000
    prime_cutoff: int = 10**5
    master_seed: int = DEFAULT_SEED
    instance: str = "int"
    q: int | None = None
    r: int = 2
    moment_samples: int = 10**6
    moment_cutoff: int = 10**4
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0 < self.s < 1:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.prime_cutoff < 2:
            raise ConfigError(f"prime_cutoff must be >= 2, got {self.prime_cutoff}")
        if not 0 <= self.master_seed < 1 << 64:
            raise ConfigError("master_seed must fit in 64 bits")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.output_format!r}")
        set_("alpha", self.alpha.strip() if isinstance(self.alpha, str) else str(self.alpha))
        try:
            parse_alpha(self.alpha)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        d, t = self.delta, self.theta
        if d is None and t is None:
            d = 1.0
        if d is None:
            d = t / _THETA_PER_DELTA
        if t is None:
            t = _THETA_PER_DELTA * d
        if not d > 0:
            raise ConfigError(f"delta must be positive, got {d}")
        if abs(t - _THETA_PER_DELTA * d) > 1e-12 * max(abs(t), 1.0):
            raise ConfigError(f"theta must equal 8*delta, got theta={t}, delta={d}")
        set_("delta", float(d))
        set_("theta", float(t))
        if self.b is not None and not self.b > 0:
            raise ConfigError(f"b must be positive, got {self.b}")
        if self.mode == "power-range" and self.r < 2:
            raise ConfigError(f"r must be >= 2, got {self.r}")
        if self.mode == "semigroup":
            if self.instance not in ("int", "poly"):
                raise ConfigError(f"instance must be int or poly, got {self.instance!r}")
            if self.instance == "poly" and self.q is None:
                raise ConfigError("the poly instance needs --q")

    def b_value(self) -> float:
        return self.b if self.b is not None else cs_product(self.s, self.prime_cutoff).value

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output_path")
        out.pop("output_format")
        return out


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    payload: dict


@dataclass(frozen=True)
class EventEstimate:
    """Frequency of one event with its Wilson interval at ``z``.

    ``relation`` says how the frequency is compared with ``reference``:
    ``"<="`` for an upper bound, ``">="`` for a lower bound, ``"~"`` for an
    approximate value, or ``"none"``.
    """

    successes: int
    trials: int
    estimate: float
    lo: float
    hi: float
    z: float
    reference: float | None = None
    relation: str = "none"

    @classmethod
    def count(cls, successes: int, trials: int, reference=None, relation="none", z=EVENT_Z) -> "EventEstimate":
        lo, hi = wilson_interval(successes, trials, z)
        return cls(successes, trials, successes / trials, lo, hi, z, reference, relation)


@dataclass
class SummaryReport:
    mode: str
    config: dict
    bounds: dict
    events: dict[str, EventEstimate]
    extras: dict
    runtime: dict
    trials: list[TrialRecord] = field(default_factory=list)
    schema: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "mode": self.mode,
            "config": self.config,
            "bounds": self.bounds,
            "events": {k: asdict(v) for k, v in self.events.items()},
            "extras": self.extras,
            "runtime": self.runtime,
            "trials": [{"trial_index": t.trial_index, **t.payload} for t in self.trials],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryReport":
        if d.get("schema") != SCHEMA_VERSION:
            raise ReportIOError(f"unsupported report schema {d.get('schema')!r}")
        trials = []
        for row in d["trials"]:
            row = dict(row)
            idx = row.pop("trial_index")
            trials.append(TrialRecord(idx, row))
        return cls(
            mode=d["mode"],
            config=d["config"],
            bounds=d["bounds"],
            events={k: EventEstimate(**v) for k, v in d["events"].items()},
            extras=d["extras"],
            runtime=d["runtime"],
            trials=trials,
            schema=d["schema"],
        )


def _runtime() -> dict:
    # no wall-clock or host data, so reports stay byte-identical across runs
    return {
        "package": f"maxgcd {__version__}",
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


# parallel execution


def thread_cap() -> int:
    """Worker count from ``MAXGCD_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get("MAXGCD_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MAXGCD_THREADS must be an integer, got {raw!r}") from exc
    if val < 1:
        raise ConfigError(f"MAXGCD_THREADS must be >= 1, got {val}")
    return val


def _run_trials(fn: Callable[[Any, int], dict], ctx: Any, trials: int) -> list[TrialRecord]:
    workers = min(thread_cap(), trials)
    if workers <= 1:
        payloads = [fn(ctx, i) for i in range(trials)]
    else:
        chunk = max(1, trials // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            payloads = list(pool.map(fn, [ctx] * trials, range(trials), chunksize=chunk))
    return [TrialRecord(i, p) for i, p in enumerate(payloads)]


def _count(trials: Sequence[TrialRecord], key: str) -> int:
    return sum(1 for t in trials if t.payload[key])


# exact comparisons against real powers of n


def _norm_above_power(g: int, n: int, e: float) -> bool:
    """``g > n^e``, exactly when ``e`` is a short decimal."""
    f = Fraction(repr(e)) if math.isfinite(e) else None
    if f is not None and f.denominator <= 10**6 and f >= 0:
        return g**f.denominator > n**f.numerator
    return math.log(g) > e * math.log(n) if g > 0 else False


def _norm_below_power(g: int, n: int, e: float) -> bool:
    """``g < n^e``, exactly when ``e`` is a short decimal."""
    f = Fraction(repr(e))
    if f.denominator <= 10**6 and f >= 0:
        return g**f.denominator < n**f.numerator
    return math.log(g) < e * math.log(n)


# generic pairwise-statistics trial, shared by integer, power-range and semigroup modes


@dataclass(frozen=True)
class _PairContext:
    G: Semigroup
    seed: int
    n: int
    norm_bound: int
    eta: float
    threshold: int
    lambda_threshold: float
    window: tuple


def _pair_trial(ctx: _PairContext, trial_index: int) -> dict:
    G = ctx.G
    batch = G.sample_batch(ctx.norm_bound, ctx.n, RngStream(ctx.seed, trial_index))
    ext = semigroup_pair_extremes(G, batch)
    counts = window_counts(G, batch, ctx.window)
    colliding = [p for p, c in zip(ctx.window, counts) if c >= 2]
    largest = max((G.norm(p) for p in colliding), default=None)
    g = ext.max_gcd_norm
    return {
        "gcd_exceeds": g >= ctx.threshold,
        "lambda_below": ext.max_common_prime_norm < ctx.lambda_threshold,
        "largest_colliding_norm": largest,
        "max_common_prime": ext.max_common_prime_norm,
        "max_gcd": g,
        "max_radical": ext.max_radical_norm,
        "radical_exceeds": ext.max_radical_norm >= ctx.threshold,
        "sandwich": _norm_above_power(g, ctx.n, 2 - ctx.eta) and _norm_below_power(g, ctx.n, 2 + ctx.eta),
        "window_collision": bool(colliding),
    }


def _pair_experiment(config: ExperimentConfig, G: Semigroup, norm_bound: int, extras: dict) -> SummaryReport:
    n, s, eta = config.n, config.s, config.eta
    if n < 2:
        raise ConfigError(f"mode {config.mode} needs n >= 2, got {n}")
    try:
        phi = phi_solve(n, config.delta).phi
    except InfeasibleError as exc:
        raise ConfigError(f"phi_N[delta] is infeasible: n={n} is too small for delta={config.delta}") from exc
    b = config.b_value()
    threshold = markov_threshold(n, s, b)
    lam = n * n / (config.theta * math.log(n))
    win = tuple(G.window_primes(phi))
    win_int = PrimeWindow(phi, np.asarray([G.norm(p) for p in win], dtype=np.int64))
    ctx = _PairContext(G, config.master_seed, n, norm_bound, eta, threshold, lam, win)
    records = _run_trials(_pair_trial, ctx, config.trials)
    T = config.trials
    cs = cs_product(s, config.prime_cutoff).value
    rad = radical_product(s, config.prime_cutoff).value
    target = 1 - math.exp(-config.delta)
    exact = 1 - urn_exact_no_collision(n, win_int) if len(win) else 0.0
    events = {
        "sandwich": EventEstimate.count(_count(records, "sandwich"), T),
        "gcd_exceeds_threshold": EventEstimate.count(_count(records, "gcd_exceeds"), T, cs / (2 * b), "<="),
        "radical_exceeds_threshold": EventEstimate.count(_count(records, "radical_exceeds"), T, rad / (2 * b), "<="),
        "lambda_below": EventEstimate.count(_count(records, "lambda_below"), T, math.exp(-config.theta / 8), "<="),
        "window_collision": EventEstimate.count(_count(records, "window_collision"), T, target, "~"),
    }
    bounds = {
        "norm_bound": norm_bound,
        "b": b,
        "cs_truncated": cs,
        "radical_truncated": rad,
        "prime_cutoff": config.prime_cutoff,
        "markov_threshold": threshold,
        "sandwich_lo": float(n) ** (2 - eta),
        "sandwich_hi": float(n) ** (2 + eta),
        "lambda_threshold": lam,
        "phi": phi,
        "window_size": len(win),
        "window_lo": math.floor(phi) + 1,
        "window_hi": math.floor(2 * phi),
    }
    extras = {
        **extras,
        "collision_target": target,
        "collision_exact_independent": exact,
        "collision_band": [target - COLLISION_SLACK, target + COLLISION_SLACK],
        "collision_slack_note": "finite-N slack of 0.08 around 1 - exp(-delta)",
    }
    return SummaryReport(config.mode, config.echo(), bounds, events, extras, _runtime(), records)


def run_integer_experiment(config: ExperimentConfig) -> SummaryReport:
    """Pairwise GCD statistics of ``n`` uniform integers from ``[1, floor(e^(alpha n))]``.

    Events: the sandwich ``n^(2-eta) < Gamma* < n^(2+eta)``; ``Gamma* >= T``
    and ``rad* >= T`` for the Markov threshold ``T``; ``Lambda* < n^2 / ln(n^theta)``;
    and some window prime dividing two samples.
    """
    if config.n < 2:
        raise ConfigError(f"integer mode needs n >= 2, got {config.n}")
    bound = SampleRange.from_alpha(config.alpha, config.n).bound
    return _pair_experiment(config, IntegerSemigroup(), bound, {})


def run_power_range_experiment(config: ExperimentConfig) -> SummaryReport:
    """Integer statistics with samples from ``[1, n^r]`` instead of an exponential range."""
    return _pair_experiment(config, IntegerSemigroup(), config.n**config.r, {"r": config.r})


def run_semigroup_experiment(config: ExperimentConfig) -> SummaryReport:
    """Integer statistics with norms in place of magnitudes.

    Elements are uniform over the norm ball of radius ``e^(alpha n)``; for
    ``F_q[x]`` this is every monic polynomial of degree ``<= alpha n / ln q``.
    """
    G = make_semigroup(config.instance, config.q)
    if isinstance(G, IntegerSemigroup):
        bound = SampleRange.from_alpha(config.alpha, config.n).bound
    else:
        d = G.max_degree(math.exp(float(parse_alpha(config.alpha)) * config.n))
        bound = G.q**d
    return _pair_experiment(config, G, bound, {"semigroup": G.describe()})


# urn model


@dataclass(frozen=True)
class _UrnContext:
    urn: UrnConfig
    seed: int


def _urn_trial(ctx: _UrnContext, trial_index: int) -> dict:
    out = urn_trial(ctx.urn, RngStream(ctx.seed, trial_index))
    return {"collision": out.collision, "largest_colliding_prime": out.largest_colliding_prime}


def run_urn_experiment(config: ExperimentConfig) -> SummaryReport:
    """Collision frequency of the Bernoulli urn model on the window ``(phi, 2 phi]``."""
    n, T = config.n, config.trials
    target = 1 - math.exp(-config.delta)
    if n < 2:
        # no pair exists, so no urn can collide
        records = [TrialRecord(i, {"collision": False, "largest_colliding_prime": None}) for i in range(T)]
        bounds = {"phi": None, "window_size": 0}
        exact = 0.0
    else:
        try:
            sol = phi_solve(n, config.delta)
        except InfeasibleError as exc:
            raise ConfigError(f"phi_N[delta] is infeasible: n={n} is too small for delta={config.delta}") from exc
        w = window(sol.phi)
        if len(w) == 0:
            raise ConfigError(f"the window (phi, 2 phi] with phi={sol.phi:.6g} holds no primes")
        urn = UrnConfig.from_window(n, w)
        records = _run_trials(_urn_trial, _UrnContext(urn, config.master_seed), T)
        exact = 1 - urn_exact_no_collision(n, w)
        bounds = {"phi": sol.phi, "window_size": len(w), "window_lo": w.lower, "window_hi": w.upper}
    hits = _count(records, "collision")
    largest = [t.payload["largest_colliding_prime"] for t in records if t.payload["largest_colliding_prime"]]
    events = {"collision": EventEstimate.count(hits, T, exact, "~")}
    extras = {
        "collision_target": target,
        "collision_exact_independent": exact,
        "largest_colliding_prime_median": float(np.median(largest)) if largest else None,
    }
    return SummaryReport(config.mode, config.echo(), bounds, events, extras, _runtime(), records)


# geometric model


@dataclass(frozen=True)
class _GeoContext:
    seed: int
    n: int
    prime_cutoff: int
    level: float


def _geo_trial(ctx: _GeoContext, trial_index: int) -> dict:
    m = sample_geometric_matrix(ctx.n, ctx.prime_cutoff, RngStream(ctx.seed, trial_index))
    delta_n, pair = max_pair_log_gcd(m)
    return {"delta_n": delta_n, "exceeds": delta_n >= ctx.level, "pair": list(pair)}


def run_geometric_experiment(config: ExperimentConfig) -> SummaryReport:
    """Exceedance of ``Delta_N >= (2/s) ln N + (1/s) ln b`` in the geometric model.

    The Markov bound for this event is ``C_s / (2b)`` with ``C_s`` truncated at
    ``prime_cutoff``. The report also carries a Monte Carlo estimate of
    ``E[exp(s L)]`` at ``moment_cutoff``, drawn on a stream no trial uses.
    """
    n, s = config.n, config.s
    if n < 2:
        raise ConfigError(f"geometric mode needs n >= 2, got {n}")
    b = config.b_value()
    cs = cs_product(s, config.prime_cutoff).value
    level = (2 / s) * math.log(n) + math.log(b) / s
    records = _run_trials(_geo_trial, _GeoContext(config.master_seed, n, config.prime_cutoff, level), config.trials)
    events = {"delta_exceeds": EventEstimate.count(_count(records, "exceeds"), config.trials, cs / (2 * b), "<=")}
    est = moment_estimate(s, config.moment_samples, config.moment_cutoff, RngStream(config.master_seed, MOMENT_STREAM))
    exact = cs_product(s, config.moment_cutoff).value
    extras = {
        "moment": {
            "cutoff": config.moment_cutoff,
            "samples": est.n_samples,
            "mean": est.mean,
            "ci_halfwidth": est.ci_halfwidth,
            "z": est.z,
            "tilt": est.tilt,
            "exact_truncated": exact,
            "within_ci": abs(est.mean - exact) <= est.ci_halfwidth,
        },
        "delta_n_mean": math.fsum(t.payload["delta_n"] for t in records) / config.trials,
    }
    bounds = {"b": b, "cs_truncated": cs, "prime_cutoff": config.prime_cutoff, "level": level, "markov_bound": cs / (2 * b)}
    return SummaryReport(config.mode, config.echo(), bounds, events, extras, _runtime(), records)


_RUNNERS = {
    "integers": run_integer_experiment,
    "urn": run_urn_experiment,
    "geometric": run_geometric_experiment,
    "semigroup": run_semigroup_experiment,
    "power-range": run_power_range_experiment,
}


def run_experiment(config: ExperimentConfig) -> SummaryReport:
    return _RUNNERS[config.mode](config)


# report files


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def report_text(report: SummaryReport, fmt: str = "json") -> str:
    """Serialised report: full JSON, or a CSV of the per-trial records."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, default=_json_default, allow_nan=False) + "\n"
    if fmt == "csv":
        keys = sorted({k for t in report.trials for k in t.payload})
        lines = [["trial_index", *keys]]
        for t in report.trials:
            lines.append([t.trial_index, *(_csv_cell(t.payload.get(k)) for k in keys)])
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(lines)
        return buf.getvalue()
    raise ConfigError(f"format must be json or csv, got {fmt!r}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(report: SummaryReport, fmt: str, path: str | os.PathLike) -> None:
    """Write ``report`` to ``path`` as JSON or as a per-trial CSV."""
    text = report_text(report, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def load_report(path: str | os.PathLike) -> SummaryReport:
    """Read a JSON report written by :func:`emit_report`."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ReportIOError(f"cannot read report {os.fspath(path)!r}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ReportIOError(f"{os.fspath(path)!r} is not valid JSON: {exc}") from exc
    return SummaryReport.from_dict(data)


def load_trials_csv(path: str | os.PathLike) -> list[dict]:
    """Rows of a CSV report as string-valued dicts."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ReportIOError(f"cannot read report {os.fspath(path)!r}: {exc.strerror or exc}") from exc


__all__ = [
    "EventEstimate",
    "ExperimentConfig",
    "SummaryReport",
    "TrialRecord",
    "emit_report",
    "load_report",
    "load_trials_csv",
    "report_text",
    "run_experiment",
    "run_geometric_experiment",
    "run_integer_experiment",
    "run_power_range_experiment",
    "run_semigroup_experiment",
    "run_urn_experiment",
    "thread_cap",
    "wilson_interval",
]
