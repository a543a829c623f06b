"""
Reconfigurable Behavior Tree Engine - command line

Usage:
    python -m src.main run --scenario data/scenarios/case2.json --mode rbt [--trace out.jsonl] [--report report.json]
    python -m src.main validate [--ltm DIR]
    python -m src.main inspect --task "sort box" [--ltm DIR] [--expand]
"""

from pathlib import Path
from typing import List, Optional
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from src.config.logging import setup_logging
from src.config.settings import settings
from src.models.errors import RbtError
from src.models.tree import HandlerRegistry
from src.services.instantiator import InstantiationContext, Instantiator
from src.services.ltm_store import LtmStore, get_task_from_ltm, validate_directory
from src.services.rbt_runtime import TraceWriter
from src.services.scenario_runner import run_scenario
from src.services.sorting_sim import load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


def cmd_run(args: argparse.Namespace) -> int:
    try:
        script = load_scenario(args.scenario)
        ltm = LtmStore.open(args.ltm)
        if args.trace:
            with TraceWriter(args.trace) as writer:
                report, _ = run_scenario(script, args.mode, ltm, args.max_ticks, writer)
        else:
            report, _ = run_scenario(script, args.mode, ltm, args.max_ticks)
    except ValidationError as e:
        logger.error(f"{args.scenario}: invalid scenario: {e}")
        return EXIT_ERROR
    except (RbtError, OSError) as e:
        logger.error(str(e))
        return EXIT_ERROR

    print(report.summary())
    document = json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True)
    if args.report:
        Path(args.report).write_text(document + "\n", encoding="utf-8")
    else:
        print(document)
    return EXIT_OK if report.goal_reached else EXIT_BUDGET


def cmd_validate(args: argparse.Namespace) -> int:
    directory = Path(args.ltm)
    if not directory.is_dir():
        logger.error(f"LTM directory {directory} does not exist")
        return EXIT_ERROR

    results = validate_directory(directory)
    if not results:
        logger.warning(f"{directory}: no tasks")
        return EXIT_OK

    failed = 0
    for path, error in results:
        if error is None:
            print(f"ok    {path}")
        else:
            failed += 1
            print(f"FAIL  {error}")
    return EXIT_ERROR if failed else EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        ltm = LtmStore.open(args.ltm)
        schemas = get_task_from_ltm(ltm, args.task)
        if args.expand:
            tree = Instantiator(InstantiationContext(ltm, HandlerRegistry(), strict=False)).build_tree(schemas)
            print(tree.render())
            print(f"{len(tree)} nodes")
        else:
            for schema in schemas:
                children = ", ".join(schema.children)
                print(f"[{schema.type.value}] {schema.name}: {children}")
            print(f"{len(schemas)} schemas")
    except (RbtError, OSError) as e:
        logger.error(str(e))
        return EXIT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbt", description=settings.app_name)
    parser.add_argument("--log-level", default=settings.log_level,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        type=str.upper)
    parser.add_argument("--log-file", type=Path, default=settings.log_file)
    subcommands = parser.add_subparsers(dest="command", required=True)

    run = subcommands.add_parser("run", help="Run a sorting scenario to goal")
    run.add_argument("--scenario", required=True, type=Path)
    run.add_argument("--mode", required=True, choices=["rbt", "bt"])
    run.add_argument("--ltm", type=Path, default=settings.ltm_dir)
    run.add_argument("--trace", type=Path, help="JSON-lines tick trace")
    run.add_argument("--max-ticks", type=int, default=settings.max_ticks)
    run.add_argument("--report", type=Path, help="Write the JSON report here instead of stdout")
    run.set_defaults(handler=cmd_run)

    validate = subcommands.add_parser("validate", help="Check every task document in an LTM directory")
    validate.add_argument("--ltm", type=Path, default=settings.ltm_dir)
    validate.set_defaults(handler=cmd_validate)

    inspect = subcommands.add_parser("inspect", help="Print a task's schemas or its expanded tree")
    inspect.add_argument("--ltm", type=Path, default=settings.ltm_dir)
    inspect.add_argument("--task", required=True)
    inspect.add_argument("--expand", action="store_true")
    inspect.set_defaults(handler=cmd_inspect)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
