"""Command-line entry point: ``uavauth {threshold,roc,sweep,estimate-demo}``."""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .scenario import SWEEP_VARS, Scenario, ScenarioError, load_scenario

COMMANDS = {
    "threshold": experiments.cmd_threshold,
    "roc": experiments.cmd_roc,
    "sweep": experiments.cmd_sweep,
    "estimate-demo": experiments.cmd_estimate_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (key = value lines)")
    common.add_argument("--out", help="output path; stdout when omitted")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per hypothesis")
    common.add_argument("--grid-step", type=float, help="direction search step")
    common.add_argument("--threads", type=int, help="worker threads for trials")

    parser = argparse.ArgumentParser(
        prog="uavauth", description="GLLR authentication of UAV control packets"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("threshold", parents=[common], help="Neyman-Pearson thresholds per eta")
    sub.add_parser("roc", parents=[common], help="analytic and empirical ROC data")
    sp = sub.add_parser("sweep", parents=[common], help="SDR at fixed FAR over an attacker parameter")
    sp.add_argument("sweep_var", nargs="?", choices=SWEEP_VARS, help="overrides sweep_var")
    sub.add_parser("estimate-demo", parents=[common], help="one seeded H1 estimate as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario) if args.scenario else Scenario()
        sc = sc.with_overrides(
            seed=args.seed, trials=args.trials, grid_step=args.grid_step,
            threads=args.threads, sweep_var=getattr(args, "sweep_var", None),
        )
        if sc.trials < 0 or sc.threads < 1:
            raise ScenarioError("trials must be >= 0 and threads >= 1")
        text = COMMANDS[args.command](sc)
    except ScenarioError as exc:
        print(f"uavauth: scenario error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"uavauth: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
