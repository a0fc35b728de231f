"""
momdwa-quantum-control command line.

    python main.py run --config config/q1_bi.toml [--problem q1] [--objectives 2] [--seed N] [--out DIR]
    python main.py report --run runs/q1-k2-s1
    python main.py validate [--trials N] [--full]
    python main.py problems
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.models import ProblemName
from src.runners.experiment_runner import ExperimentRunner
from src.services.problem_registry import ProblemRegistry
from src.utils.errors import MomdwaError, create_error_response
from src.utils.helpers import setup_logging, load_config

logger = logging.getLogger(__name__)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Multi-objective damped-wave optimization of quantum controls.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Optimize one problem and write a run directory.")
    run.add_argument("--config", type=Path, help="TOML run configuration.")
    run.add_argument("--problem", choices=[p.value for p in ProblemName])
    run.add_argument("--objectives", type=int, choices=[2, 3])
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, dest="output_dir", help="Parent directory for run outputs.")

    report = commands.add_parser("report", help="Compare a finished run with the published values.")
    report.add_argument("--run", type=Path, required=True, dest="run_dir")

    validate = commands.add_parser("validate", help="Run the benchmark and propagator acceptance checks.")
    validate.add_argument("--trials", type=int, default=100, help="Random control sets per propagator check.")
    validate.add_argument("--full", action="store_true", help="Also run the Q1 soft-target check (slow).")

    commands.add_parser("problems", help="List the registered problems.")
    return parser.parse_args(argv)


def run_command(args: argparse.Namespace) -> int:
    overrides = {
        "problem": args.problem,
        "objectives": args.objectives,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }
    config = load_config(args.config, overrides)
    summary = ExperimentRunner().run(config)

    print(f"run {summary.run_id}: {summary.repository_size} repository members")
    values = ", ".join(f"{n}={v:.6g}" for n, v in zip(summary.objective_names, summary.selected_objectives))
    fidelity = "" if summary.selected_fidelity is None else f", fidelity={summary.selected_fidelity:.6f}"
    print(f"selected member {summary.selected_member}: {values}{fidelity}")
    print(f"outputs: {Path(config.output_dir) / summary.run_id}")
    return 0


def report_command(args: argparse.Namespace) -> int:
    print(ExperimentRunner().report(args.run_dir))
    return 0


def validate_command(args: argparse.Namespace) -> int:
    checks = ExperimentRunner().validate(n_trials=args.trials, full=args.full)
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status}  {check.name}: {check.detail} ({check.duration_seconds:.1f}s)")
    failed = sum(not check.passed for check in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def problems_command(args: argparse.Namespace) -> int:
    for entry in ProblemRegistry().get_problem_descriptions():
        print(f"{entry['name']:<9} D={entry['dimension']:<3} {entry['description']}")
    return 0


COMMANDS = {
    "run": run_command,
    "report": report_command,
    "validate": validate_command,
    "problems": problems_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except MomdwaError as e:
        response = create_error_response(e.message, e.code)
        print(f"[{response['error']['code']}] {response['error']['message']}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected failure")
        response = create_error_response(str(e))
        print(f"[{response['error']['code']}] {response['error']['message']}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
