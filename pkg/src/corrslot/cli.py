"""Command-line front end.

Subcommands:

* ``sweep``    -- run a configured experiment sweep, emit CSV.
* ``fig1``     -- two-user throughput curves across the joint probability.
* ``fig3``     -- exact greedy-scheme throughput on cyclic worked examples.
* ``overhead`` -- signaling overhead of distributing an allocation.

Exit codes: 0 on success, 2 for configuration errors, 3 for runtime errors.
"""
from __future__ import annotations

import argparse
import sys

from .errors import CapabilityError, ConfigurationError
from .experiments import (
    OverheadQuery,
    config_from_mapping,
    load_config_file,
    run_experiment,
    run_pattern_examples,
    signaling_overhead,
    two_user_curves,
)
from .traffic import CyclicPattern


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _cmd_sweep(args) -> int:
    mapping = load_config_file(args.config) if args.config else {}
    config = config_from_mapping(mapping, seed=args.seed, frames=args.frames)
    _write_output(run_experiment(config, workers=args.workers), args.out)
    return 0


def _cmd_fig1(args) -> int:
    _write_output(two_user_curves(args.lam, points=args.points), args.out)
    return 0


def _cmd_fig3(args) -> int:
    pattern = None
    if args.pattern:
        with open(args.pattern) as fh:
            pattern = CyclicPattern.from_text(fh.read())
    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    _write_output(
        run_pattern_examples(pattern, slots=args.slots, schemes=schemes), args.out
    )
    return 0


def _cmd_overhead(args) -> int:
    query = OverheadQuery(
        n_users=args.users,
        n_slots=args.slots,
        n_scheduled=args.scheduled,
        bits_per_probability=args.prob_bits,
        assignment=args.assignment,
        scope=args.scope,
    )
    bits = signaling_overhead(query)
    _write_output(f"{bits:.10g}\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrslot",
        description="Correlation-aware slot allocation for framed random access.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a configured experiment sweep")
    p_sweep.add_argument("--config", help="flat key=value config file")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the root seed")
    p_sweep.add_argument("--frames", type=int, default=None, help="override the frame budget")
    p_sweep.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fig1 = sub.add_parser("fig1", help="two-user throughput curves")
    p_fig1.add_argument("--lam", type=float, required=True,
                        help="expected transmissions per frame (0 < lam <= 2)")
    p_fig1.add_argument("--points", type=int, default=101, help="grid resolution")
    p_fig1.add_argument("--out", default=None)
    p_fig1.set_defaults(func=_cmd_fig1)

    p_fig3 = sub.add_parser("fig3", help="exact greedy throughput on cyclic patterns")
    p_fig3.add_argument("--pattern", default=None,
                        help="pattern file (default: both built-in examples)")
    p_fig3.add_argument("--slots", type=int, default=2)
    p_fig3.add_argument("--schemes", default="minmax,minsum")
    p_fig3.add_argument("--out", default=None)
    p_fig3.set_defaults(func=_cmd_fig3)

    p_over = sub.add_parser("overhead", help="signaling overhead in bits")
    p_over.add_argument("--users", type=int, required=True)
    p_over.add_argument("--slots", type=int, required=True)
    p_over.add_argument("--scheduled", type=int, default=0,
                        help="number of scheduled users (subset scope)")
    p_over.add_argument("--prob-bits", type=int, default=1,
                        help="bits per encoded probability")
    p_over.add_argument("--assignment", choices=("single_slot", "probabilistic"),
                        default="single_slot")
    p_over.add_argument("--scope", choices=("all_users", "subset"), default="all_users")
    p_over.add_argument("--out", default=None)
    p_over.set_defaults(func=_cmd_overhead)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (CapabilityError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
