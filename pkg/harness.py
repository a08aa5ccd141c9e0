#!/usr/bin/env python3
"""
Command-line entry point for varbench.

    varbench integrate --system pendulum --method svi-mid-trap --h 0.1 --T 10
    varbench converge --system sho --method svi-rk4-simpson --h-list 0.4,0.2,0.1,0.05
    varbench energy --system pendulum --method svi-mid-trap --h 0.2 --T 200 --out energy.csv
    varbench rigidbody --h 0.2 --T 30 --out rigidbody.csv

Exit codes: 0 success, 2 solver non-convergence, 3 invalid specification,
1 anything else.
"""

import argparse
import asyncio
import logging
import os
import sys
from typing import List, Optional

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import InvalidSpec, VarbenchError  # noqa: E402
from experiment_coordinator import ExperimentCoordinator  # noqa: E402
from experiment_spec import build_spec  # noqa: E402
from integrators.registry import method_names  # noqa: E402

logger = logging.getLogger("Harness")

COMMANDS = ("integrate", "converge", "energy", "rigidbody")


class HarnessArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as invalid specifications instead of exiting."""

    def error(self, message: str):
        raise InvalidSpec(message)


def build_parser() -> argparse.ArgumentParser:
    parser = HarnessArgumentParser(prog="varbench", description="Variational integrator benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=HarnessArgumentParser)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--system", help="pendulum, sho, free-particle, two-particle or rigid-body")
        p.add_argument("--method", help=f"one of: {', '.join(method_names())}")
        p.add_argument("--h", type=float, help="step size")
        p.add_argument("--h-list", dest="h_list", help="comma-separated step sizes")
        p.add_argument("--T", dest="T", type=float, help="final time")
        p.add_argument("--q0", help="comma-separated initial position (rotation vector for the rigid body)")
        p.add_argument("--p0", help="comma-separated initial momentum (body angular velocity for the rigid body)")
        p.add_argument("--tol", type=float, help="Newton tolerance of the implicit step")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--config", help="plain-text key = value file; command-line values win")
        p.add_argument("--seed", type=int, help="seed of the random states behind the energy symplecticity check")
        p.add_argument("--inertia", help="comma-separated principal moments of the rigid body")
        p.add_argument("--compensated", action="store_true", default=None,
                       help="compensated summation of the Lie group attitude update")
        p.add_argument("--output-dir", dest="output_dir", help="directory relative output paths resolve against")
        p.add_argument("--log-level", dest="log_level", default="INFO",
                       choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the experiment and return the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        logging.getLogger().setLevel(getattr(logging, args.log_level))
        values = vars(args).copy()
        command = values.pop("command")
        config_path = values.pop("config")
        output_dir = values.pop("output_dir")
        values.pop("log_level")
        spec = build_spec(command, values, config_path)
        coordinator = ExperimentCoordinator(output_dir=output_dir)
        summary = asyncio.run(coordinator.run(spec))
        logger.info(f"Finished {command}: {summary}")
        return 0
    except VarbenchError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected failure: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
