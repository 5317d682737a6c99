"""Command-line entry point.

Subcommands map onto the scenario families:

    arcgossip simulate      --config cfg.yaml [--seed S] [--out DIR]
    arcgossip crossing-prob --config cfg.yaml [--seed S] [--out DIR]
    arcgossip sweep         --config cfg.yaml [--seed S] [--out DIR]
    arcgossip lift-check    --config cfg.yaml [--seed S] [--out DIR]

Each run writes its CSV data files, a summary.json, and a manifest.json
with content hashes into the output directory.  Exit status 0 means the
run completed with no invariant violations; 2 means a violation or sector
exit was detected (see summary.json); 1 is a usage or configuration error.
"""

import argparse
import sys

from .backend import backend_name
from .scenarios import load_config, run_scenario

_SUBCOMMAND_SCENARIOS = {
    "simulate": ("PathConsensus", "RingConsensus", "WindingFreeze"),
    "crossing-prob": ("CrossingProbMC",),
    "sweep": ("SweepEscape",),
    "lift-check": ("CompensatorBound",),
}


def _add_common(sub):
    sub.add_argument("--config", required=True, help="YAML scenario config")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out", default=None, help="override the output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arcgossip",
        description="Asynchronous short-arc midpoint dynamics on paths and rings.",
    )
    parser.add_argument("--version", action="store_true",
                        help="print version and active backend")
    subs = parser.add_subparsers(dest="command")
    for name, scenarios in _SUBCOMMAND_SCENARIOS.items():
        sub = subs.add_parser(name, help=f"run a scenario: {', '.join(scenarios)}")
        _add_common(sub)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        from . import __version__
        print(f"arcgossip {__version__} (backend: {backend_name()})")
        return 0
    if args.command is None:
        parser.print_help()
        return 1
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, overrides)
        allowed = _SUBCOMMAND_SCENARIOS[args.command]
        if cfg.scenario not in allowed:
            raise ValueError(
                f"scenario {cfg.scenario!r} is not handled by "
                f"'{args.command}' (expects one of {', '.join(allowed)})")
    except (OSError, ValueError) as exc:
        print(f"arcgossip: {exc}", file=sys.stderr)
        return 1
    result = run_scenario(cfg, output_dir=args.out)
    if result.exit_code != 0:
        print(f"arcgossip: invariant violations detected; see "
              f"{result.output_dir}/summary.json", file=sys.stderr)
    else:
        print(f"wrote {result.manifest_path}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
