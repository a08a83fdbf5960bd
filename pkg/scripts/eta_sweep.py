"""Sensitivity of the Hedge cases to the learning rate and the utility bound.

For each (bound method, eta) pair this prints the final-round mean social
cost and the focal bidder's average regret in cases c, e and g. ``eta=auto``
uses the horizon-tuned rate.

Usage:
    python3 scripts/eta_sweep.py [--rounds 200] [--runs 15] [--jobs 4]
"""

import argparse
from pathlib import Path

from bidlearn.experiments import ExperimentConfig, run_case
from bidlearn.market import load_instance

DEFAULT_INSTANCE = Path(__file__).resolve().parents[1] / "instances" / "paper_table1.json"
ETAS = (None, 0.05, 0.5, 2.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instance", default=str(DEFAULT_INSTANCE))
    parser.add_argument("--rounds", type=int, default=200)
    parser.add_argument("--runs", type=int, default=15)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    instance = load_instance(args.instance)
    print(f"{'bound':<10}{'eta':>8}{'case':>6}{'social cost':>14}{'regret/t':>10}")
    for bound in ("enumerate", "analytic"):
        for eta in ETAS:
            for case in ("c", "e", "g"):
                cfg = ExperimentConfig(
                    instance=args.instance, case=case, rounds=args.rounds, runs=args.runs,
                    seed=args.seed, eta=eta, bound=bound, jobs=args.jobs,
                )
                res = run_case(cfg, instance)
                label = "auto" if eta is None else f"{eta:g}"
                cost = res.final("social_cost")[0]
                regret = res.final("regret")[0]
                print(f"{bound:<10}{label:>8}{case:>6}{cost:>14.1f}{regret:>10.1f}")


if __name__ == "__main__":
    main()
