#!/usr/bin/env python3
"""
Tick Time Benchmark

Runs both case studies under the reconfigurable engine and the static
baseline and prints the median cumulative tick time per configuration.

Usage:
    python scripts/benchmark_tick_times.py [--runs N] [--ltm DIR]
"""

import argparse
import os
import statistics
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.config.logging import setup_logging
from src.config.settings import settings
from src.services.ltm_store import LtmStore
from src.services.scenario_runner import run_scenario
from src.services.sorting_sim import build_case


def median_tick_time(case_id: int, mode: str, ltm: LtmStore, runs: int):
    script, _ = build_case(case_id, ltm)
    times = []
    nodes = None
    for _ in range(runs):
        report, _ = run_scenario(script, mode, ltm)
        times.append(report.total_tick_time)
        nodes = report.node_count
    return statistics.median(times), nodes


def main():
    """Print the tick time table"""
    parser = argparse.ArgumentParser(description="Compare cumulative tick time of RBT and BT")
    parser.add_argument("--runs", type=int, default=20, help="Runs per configuration")
    parser.add_argument("--ltm", default=str(settings.ltm_dir), help="LTM directory")
    parser.add_argument("--loglevel", default="warning", choices=["debug", "info", "warning", "error"])
    args = parser.parse_args()

    setup_logging(args.loglevel)
    ltm = LtmStore.open(args.ltm)

    print(f"{'Mode':<6}{'Case':<6}{'Nodes':<10}{'Median tick time (ms)':>24}")
    print("-" * 46)
    for mode in ("rbt", "bt"):
        for case_id in (1, 2):
            median, nodes = median_tick_time(case_id, mode, ltm, args.runs)
            count = str(nodes.min) if nodes.min == nodes.max else f"{nodes.min}-{nodes.max}"
            print(f"{mode.upper():<6}{case_id:<6}{count:<10}{median:>24.4f}")


if __name__ == "__main__":
    main()
