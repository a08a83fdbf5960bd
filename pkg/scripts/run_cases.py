"""Run all eight bidding cases and print the final-round summary table.

Usage:
    python3 scripts/run_cases.py [--instance PATH] [--rounds 200] [--runs 15] [--seed 0] [--jobs 4]
"""

import argparse
from pathlib import Path

from bidlearn.experiments import ExperimentConfig, run_all_cases

DEFAULT_INSTANCE = Path(__file__).resolve().parents[1] / "instances" / "paper_table1.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instance", default=str(DEFAULT_INSTANCE))
    parser.add_argument("--rounds", type=int, default=200)
    parser.add_argument("--runs", type=int, default=15)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    cfg = ExperimentConfig(instance=args.instance, rounds=args.rounds, runs=args.runs, seed=args.seed, jobs=args.jobs)
    rows, _ = run_all_cases(cfg)
    print(f"{'case':<5}{'policies':<22}{'social cost':>14}{'std':>10}{'price':>10}{'regret/t':>10}")
    for r in rows:
        print(f"{r.case:<5}{r.name:<22}{r.social_cost:>14.1f}{r.social_cost_std:>10.1f}{r.price:>10.3f}{r.regret:>10.1f}")


if __name__ == "__main__":
    main()
