#!/usr/bin/env python3
"""
Smooth Entropy command-line frontend

Usage:
    python3 scripts/smooth_entropy.py compute <state.yaml> <quantity> [options]
    python3 scripts/smooth_entropy.py verify <suite|all> [options]
    python3 scripts/smooth_entropy.py random <pure|mixed|channel> [options]

Examples:
    python3 scripts/smooth_entropy.py compute fixtures/max_entangled_2x2.yaml hmin
    python3 scripts/smooth_entropy.py compute state.yaml smooth-hmax --target A --conditioning B --eps 0.1
    python3 scripts/smooth_entropy.py compute a.yaml purified-distance --second b.yaml
    python3 scripts/smooth_entropy.py verify duality --trials 20 --dims 2,3,4 --out reports/duality.json
    python3 scripts/smooth_entropy.py verify --list
    python3 scripts/smooth_entropy.py random mixed --dims A:2,B:3 --rank 2 --seed 7 --out state.yaml

Exit codes: 0 success, 1 verification failures, 2 malformed file,
3 contract or precondition violation, 4 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

import yaml

import entropy
import verify
from entropy_lib import (
    EntropyConfig,
    EntropyError,
    EntropyLogger,
    PreconditionError,
    load_env_file,
    set_log_level,
)
from metrics import fidelity, gen_fidelity, gen_trace_distance, purified_distance
from quantum import State, SystemLayout, random_channel, random_pure, random_state
from state_files import ChannelFile, StateFile, load_state, save_channel, save_state, write_reports

logger = EntropyLogger("smooth_entropy.cli")

DISTANCE_QUANTITIES = {
    "fidelity": fidelity,
    "gen-fidelity": gen_fidelity,
    "purified-distance": purified_distance,
    "gen-trace-distance": gen_trace_distance,
}
QUANTITIES = entropy.QUANTITIES + tuple(DISTANCE_QUANTITIES) + ("phi",)


def _fmt_value(x: Optional[float]) -> str:
    return "none" if x is None else EntropyConfig.VALUE_FORMAT.format(x)


def _fmt_small(x: Optional[float]) -> str:
    return "none" if x is None else EntropyConfig.REPORT_FLOAT_FORMAT.format(x)


def _split_labels(raw: Optional[str]) -> Optional[List[str]]:
    if raw is None:
        return None
    return [part.strip() for part in raw.split(",") if part.strip()]


def _resolve_split(state: State, target: Optional[List[str]], conditioning: Optional[List[str]]):
    """Default split: first factor | remaining factors"""
    labels = list(state.layout.labels)
    if target is None:
        target = [labels[0]]
    if conditioning is None:
        conditioning = [label for label in labels if label not in target]
    return target, conditioning


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_compute(args: argparse.Namespace) -> int:
    state = load_state(args.state)
    quantity = args.quantity
    lines = [f"quantity={quantity}"]

    if quantity in DISTANCE_QUANTITIES:
        if not args.second:
            raise PreconditionError(f"{quantity} needs a second state (--second)")
        other = load_state(args.second)
        lines.append(f"value={_fmt_value(DISTANCE_QUANTITIES[quantity](state, other))}")
        print("\n".join(lines))
        return 0

    target, conditioning = _resolve_split(state, _split_labels(args.target), _split_labels(args.conditioning))
    settings = entropy.SolveSettings(dump_dir=args.dump_sdpa)

    if quantity == "phi":
        result = entropy.phi(state, target, conditioning, settings)
        lines.append(f"value={_fmt_value(result.value)}")
        lines.append(f"sdp_gap={_fmt_small(result.solution.gap if result.solution else 0.0)}")
        print("\n".join(lines))
        return 0

    query = entropy.EntropyQuery.of(state, target, conditioning, args.eps)
    logger.debug(f"{quantity}({','.join(target)}|{','.join(conditioning)}) eps={args.eps} on {state.layout}")
    result = entropy.compute(quantity, query, settings)
    lines += [
        f"value={_fmt_value(result.value)}",
        f"sigma_trace={_fmt_value(result.sigma_trace)}",
        f"ball_slack={_fmt_small(result.ball_slack)}",
        f"sdp_gap={_fmt_small(result.sdp_gap)}",
        f"witness_residual={_fmt_small(result.witness_residual)}",
        f"degenerate={'true' if result.degenerate else 'false'}",
    ]
    print("\n".join(lines))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.list:
        for name, definition in verify.SUITES.items():
            print(f"{name}: {definition.anchor} (tolerance {definition.tolerance:g}, "
                  f"trials {definition.trials}, dims {definition.dims})")
        return 0
    if not args.suite:
        raise PreconditionError("verify needs a suite name or 'all' (see --list)")

    epsilons = None
    if args.eps is not None:
        try:
            epsilons = [float(e) for e in args.eps.split(",") if e.strip()]
        except ValueError:
            raise PreconditionError(f"--eps must be a comma-separated list of numbers, got {args.eps!r}")
    options = {}
    if args.oracle_trials is not None:
        options["oracle_trials"] = args.oracle_trials
    if args.identity_channel:
        options["identity_channel"] = True

    logger.step(f"Verification: {args.suite}")
    reports = verify.run_battery(
        [args.suite], trials=args.trials, seed=args.seed, dims=args.dims, epsilons=epsilons,
        record_margins=args.margins, options=options)

    for report in reports:
        print(f"suite={report.suite} status={report.status} trials_run={report.trials_run} "
              f"failures={report.failures} sdp_failures={report.sdp_failures} errors={report.errors} "
              f"worst_slack={_fmt_small(report.worst_slack)} worst_seed={report.worst_seed} "
              f"near_violations={len(report.near_violations)}")
    if args.out:
        json_path, text_path = write_reports(reports, args.out)
        logger.success(f"Report written to {json_path} and {text_path}")

    failed = sum(r.failures + r.sdp_failures + r.errors for r in reports)
    return 0 if failed == 0 else 1


def cmd_random(args: argparse.Namespace) -> int:
    layout = SystemLayout.parse(args.dims)
    seed = args.seed
    comment = f"random {args.kind} dims={layout} seed={seed}"

    if args.kind == "channel":
        out_layout = SystemLayout.parse(args.out_dims) if args.out_dims else layout
        channel = random_channel(layout, out_layout, args.env, seed, trace_preserving=not args.non_tp)
        document = ChannelFile.from_channel(channel, comment)
        if args.out:
            save_channel(channel, args.out, comment)
    else:
        if args.kind == "pure":
            state = random_pure(layout, seed).to_state()
        else:
            state = random_state(layout, args.rank, seed, min_scale=args.min_scale)
            comment += f" rank={args.rank or layout.total_dim}"
        document = StateFile.from_state(state, comment)
        if args.out:
            save_state(state, args.out, comment)

    if args.out:
        logger.success(f"Wrote {args.kind} to {args.out}")
        print(f"wrote={args.out}")
    else:
        yaml.safe_dump(document.to_dict(), sys.stdout, default_flow_style=None, sort_keys=False)
    return 0


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smooth_entropy",
        description="Smooth conditional min- and max-entropies and randomized property checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("Examples:", 1)[1] if "Examples:" in __doc__ else None,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command")

    compute = sub.add_parser("compute", help="compute an entropy, distance or Phi for a state file")
    compute.add_argument("state", help="StateFile (YAML)")
    compute.add_argument("quantity", choices=QUANTITIES)
    compute.add_argument("--target", help="comma-separated target labels (default: first factor)")
    compute.add_argument("--conditioning", help="comma-separated conditioning labels (default: the rest)")
    compute.add_argument("--eps", type=float, default=0.0, help="smoothing parameter (default 0)")
    compute.add_argument("--second", help="second StateFile for two-state quantities")
    compute.add_argument("--dump-sdpa", metavar="DIR", help="write every solved SDP in SDPA format to DIR")
    compute.set_defaults(handler=cmd_compute)

    verify_cmd = sub.add_parser("verify", help="run randomized property suites")
    verify_cmd.add_argument("suite", nargs="?", help="suite name or 'all'")
    verify_cmd.add_argument("--trials", type=int, help="trials per suite (default: suite default)")
    verify_cmd.add_argument("--seed", type=int, default=EntropyConfig.DEFAULT_SEED)
    verify_cmd.add_argument("--dims", help="dimension profile, e.g. 2,2,2 or A:2,B:3")
    verify_cmd.add_argument("--eps", help="comma-separated smoothing parameters")
    verify_cmd.add_argument("--out", help="JSON report path; the text report is written next to it")
    verify_cmd.add_argument("--list", action="store_true", help="list suites and exit")
    verify_cmd.add_argument("--margins", action="store_true", help="record per-trial margins in the report")
    verify_cmd.add_argument("--oracle-trials", type=int, help="duality: trials compared against the nested oracle")
    verify_cmd.add_argument("--identity-channel", action="store_true",
                        help="data-proc-1: use the identity channel (equality checks)")
    verify_cmd.set_defaults(handler=cmd_verify)

    rand = sub.add_parser("random", help="write a seeded random state or channel")
    rand.add_argument("kind", choices=("pure", "mixed", "channel"))
    rand.add_argument("--dims", default="2,2", help="dimension profile (default 2,2)")
    rand.add_argument("--rank", type=int, help="rank of a mixed state (default: full)")
    rand.add_argument("--min-scale", type=float, help="sub-normalize a mixed state by a factor in (min_scale, 1]")
    rand.add_argument("--seed", type=int, default=EntropyConfig.DEFAULT_SEED)
    rand.add_argument("--out-dims", help="channel output profile (default: same as --dims)")
    rand.add_argument("--env", type=int, default=2, help="channel environment dimension (default 2)")
    rand.add_argument("--non-tp", action="store_true", help="trace non-increasing instead of trace preserving")
    rand.add_argument("--out", help="output file (default: stdout)")
    rand.set_defaults(handler=cmd_random)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point"""
    load_env_file()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        set_log_level(logging.DEBUG)
    if not getattr(args, "handler", None):
        parser.print_help()
        return 0
    try:
        return args.handler(args)
    except EntropyError as e:
        print(e.one_line(), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
