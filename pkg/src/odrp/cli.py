"""Command line: ``odrp run`` and ``odrp compare``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .assignment import InfeasibleAssignmentError
from .metrics import ConfigError, ScenarioConfig, compare_report, format_table, run_scenario
from .network import NetworkLoadError
from .demand import DemandLoadError
from .vehicle import SimulationInvariantError
from .vehicle_filter import FilterParams


def _parser():
    p = argparse.ArgumentParser(prog="odrp", description="On-demand ride-pooling fleet simulation")
    sub = p.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--policy", choices=["insertion", "v2rb"])
    run.add_argument("--heuristic", help="a,ud,un or off")
    run.add_argument("--out", default="out")
    run.add_argument("-v", "--verbose", action="store_true")
    cmp_ = sub.add_parser("compare", help="tabulate kpi.csv files")
    cmp_.add_argument("--ref", required=True, help="reference kpi.csv (speed-up baseline)")
    cmp_.add_argument("kpi", nargs="+")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "compare":
        rows = compare_report([args.ref] + [k for k in args.kpi if k != args.ref], ref=args.ref)
        print(format_table(rows))
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ScenarioConfig.load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.policy is not None:
            cfg = replace(cfg, policy=args.policy)
        if args.heuristic is not None:
            cfg = replace(cfg, heuristic=FilterParams.parse(args.heuristic))
        report, _ = run_scenario(cfg, args.out)
    except (ConfigError, NetworkLoadError, DemandLoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationInvariantError, InfeasibleAssignmentError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    for k, v in report.kpi_rows():
        print(f"{k:16s} {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
