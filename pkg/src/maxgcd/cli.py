"""Command-line entry point: ``maxgcd bounds|simulate|verify``.

Exit codes: 0 success, 1 a verification found violations, 2 invalid
configuration, 3 infeasible parameters, 4 report I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

from .bounds import (
    REFERENCE_CS,
    REFERENCE_CUTOFF,
    REFERENCE_RADICAL,
    REFERENCE_S,
    cs_product,
    locate_joint_cutoff,
    phi_envelope_check,
    phi_solve,
    radical_product,
)
from .errors import ConfigError, DomainError, InfeasibleError, ReportIOError, ResourceError
from .harness import DEFAULT_SEED, MODES, ExperimentConfig, emit_report, report_text, run_experiment
from .sampling import verify_condition5

EXIT_OK, EXIT_FOUND, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _cmd_bounds_cs(args) -> int:
    cs = cs_product(args.s, args.cutoff)
    rad = radical_product(args.s, args.cutoff)
    _print_json(
        {
            "s": args.s,
            "cutoff": args.cutoff,
            "cs": cs.value,
            "cs_log_upper": cs.log_upper,
            "radical": rad.value,
            "radical_log_upper": rad.log_upper,
            "log_tail_bound": cs.log_tail_bound,
            "ratio": cs.value / rad.value,
        }
    )
    return EXIT_OK


def _cmd_bounds_phi(args) -> int:
    sol = phi_solve(args.n, args.delta)
    out = {"n": args.n, "delta": args.delta, "phi": sol.phi, "residual": sol.residual}
    if args.n >= 16:
        env = phi_envelope_check(sol)
        out.update(lower_ok=env.lower_ok, upper_ok=env.upper_ok, ratio=env.ratio)
    _print_json(out)
    return EXIT_OK


def _cmd_bounds_constants(args) -> int:
    cs = cs_product(args.s, args.cutoff)
    rad = radical_product(args.s, args.cutoff)
    out = {
        "s": args.s,
        "cutoff": args.cutoff,
        "cs": cs.value,
        "radical": rad.value,
        "log_tail_bound": cs.log_tail_bound,
        "cs_log_bracket": [math.log(cs.value), cs.log_upper],
        "radical_log_bracket": [math.log(rad.value), rad.log_upper],
    }
    if args.locate:
        jc = locate_joint_cutoff(args.s, args.cs_target, args.radical_target)
        out["joint_cutoff_range"] = None if jc is None else [jc.first, jc.last]
    _print_json(out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = ExperimentConfig(
        mode=args.mode,
        n=args.n,
        alpha=args.alpha,
        delta=args.delta,
        theta=args.theta,
        eta=args.eta,
        s=args.s,
        b=args.b,
        trials=args.trials,
        prime_cutoff=args.prime_cutoff,
        master_seed=args.seed,
        instance=args.instance,
        q=args.q,
        r=args.r,
        moment_samples=args.moment_samples,
        moment_cutoff=args.moment_cutoff,
        output_format=args.format,
        output_path=args.out,
    )
    report = run_experiment(cfg)
    if args.out:
        emit_report(report, args.format, args.out)
        for name, ev in report.events.items():
            ref = "" if ev.reference is None else f"  ref {ev.relation} {ev.reference:.6g}"
            print(f"{name:28s} {ev.successes:6d}/{ev.trials:<6d} {ev.estimate:.4f}  [{ev.lo:.4f}, {ev.hi:.4f}]{ref}")
    else:
        sys.stdout.write(report_text(report, args.format))
    return EXIT_OK


def _cmd_verify_condition5(args) -> int:
    rep = verify_condition5(args.max_M, args.max_r, args.max_p, args.max_m)
    _print_json({"checked": rep.checked, "violations": rep.violations, "worst": rep.worst})
    return EXIT_OK if rep.violations == 0 else EXIT_FOUND


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxgcd", description="Pairwise GCD extremes: bounds, models, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", help="evaluate Euler products and the window parameter")
    bsub = bounds.add_subparsers(dest="what", required=True)
    p = bsub.add_parser("cs", help="truncated C_s and radical products")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--cutoff", type=int, required=True)
    p.set_defaults(func=_cmd_bounds_cs)
    p = bsub.add_parser("phi", help="solve for the window parameter phi_N[delta]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=1.0)
    p.set_defaults(func=_cmd_bounds_phi)
    p = bsub.add_parser("constants", help="products at s near 1 with their tail bracket")
    p.add_argument("--s", type=float, default=REFERENCE_S)
    p.add_argument("--cutoff", type=int, default=REFERENCE_CUTOFF)
    p.add_argument("--locate", action="store_true", help="also search for the cutoffs matching the targets")
    p.add_argument("--cs-target", type=float, default=REFERENCE_CS)
    p.add_argument("--radical-target", type=float, default=REFERENCE_RADICAL)
    p.set_defaults(func=_cmd_bounds_constants)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    sim.add_argument("mode", choices=MODES)
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--alpha", default="1", help='decimal or log form, e.g. "1", "0.5", "ln(2)"')
    sim.add_argument("--delta", type=float, default=None)
    sim.add_argument("--theta", type=float, default=None)
    sim.add_argument("--eta", type=float, default=0.5)
    sim.add_argument("--s", type=float, default=0.9)
    sim.add_argument("--b", type=float, default=None, help="defaults to C_s truncated at --prime-cutoff")
    sim.add_argument("--trials", type=int, default=1000)
    sim.add_argument("--prime-cutoff", type=int, default=10**5)
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--instance", choices=("int", "poly"), default="int")
    sim.add_argument("--q", type=int, default=None)
    sim.add_argument("--r", type=int, default=2)
    sim.add_argument("--moment-samples", type=int, default=10**6)
    sim.add_argument("--moment-cutoff", type=int, default=10**4)
    sim.add_argument("--out", default=None, help="report path; stdout when omitted")
    sim.add_argument("--format", choices=("json", "csv"), default="json")
    sim.set_defaults(func=_cmd_simulate)

    ver = sub.add_parser("verify", help="exhaustive checks")
    vsub = ver.add_subparsers(dest="what", required=True)
    p = vsub.add_parser("condition5", help="conditional divisibility dominance")
    p.add_argument("--max-M", type=int, default=5000)
    p.add_argument("--max-r", type=int, default=50)
    p.add_argument("--max-p", type=int, default=47)
    p.add_argument("--max-m", type=int, default=5)
    p.set_defaults(func=_cmd_verify_condition5)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"maxgcd: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError, ResourceError) as exc:
        print(f"maxgcd: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportIOError as exc:
        print(f"maxgcd: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
