"""Command-line front end.

    bidlearn clear       --instance FILE [--profile 0,0,0,0,0]
    bidlearn equilibrium --instance FILE [--epsilon X] [--max-iter N]
    bidlearn simulate    --instance FILE --case {a..h} [--rounds N] [--runs N] [--seed N] --out DIR
    bidlearn report      --instance FILE [--rounds N] [--runs N] [--seed N] --out DIR

Exit status: 0 on success, 1 on invalid input, 2 on computational or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from bidlearn.equilibrium import diagonalize, verify_nash
from bidlearn.experiments import (
    CASES,
    CaseResult,
    ExperimentConfig,
    SummaryRow,
    aggregate,
    run_all_cases,
    run_case,
    summarize,
)
from bidlearn.market import (
    InfeasibleDemand,
    InstanceError,
    MarketError,
    MarketInstance,
    clear_market,
    load_instance,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

SERIES_FILES = {
    "social_cost": "social_cost.csv",
    "price": "price.csv",
    "regret": "regret_bidder{focal}.csv",
    "payoff": "payoff_bidder{focal}.csv",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for computational failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x: float) -> str:
    return f"{x:.6g}"


def _round6(x: float) -> float:
    return float(fmt(x))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--instance", required=True, help="instance JSON file")
    common.add_argument("--rounds", type=int, default=200)
    common.add_argument("--runs", type=int, default=15)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eta", type=float, default=None, help="override the Hedge learning rate")
    common.add_argument("--epsilon", type=float, default=4e-4, help="diagonalization tolerance")
    common.add_argument("--max-iter", type=int, default=50, help="diagonalization sweep budget")
    common.add_argument(
        "--bound",
        choices=("auto", "enumerate", "analytic"),
        default="auto",
        help="utility normalization for Hedge",
    )
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="bidlearn", description="Repeated electricity-auction simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("clear", parents=[common], help="clear one auction round")
    p.add_argument("--profile", default=None, help="comma-separated action indices (default: true costs)")
    sub.add_parser("equilibrium", parents=[common], help="best-response diagonalization and Nash check")
    p = sub.add_parser("simulate", parents=[common], help="run one bidding case")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    sub.add_parser("report", parents=[common], help="run all cases and rank them by social cost")
    return parser


def _config(args, case: str = "b") -> ExperimentConfig:
    return ExperimentConfig(
        instance=args.instance,
        case=case,
        rounds=args.rounds,
        runs=args.runs,
        seed=args.seed,
        eta=args.eta,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        bound=args.bound,
        jobs=args.jobs,
    )


def parse_profile(text: str | None, instance: MarketInstance) -> tuple[int, ...]:
    if text is None:
        return instance.truthful_profile()
    try:
        profile = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise InstanceError(f"invalid --profile {text!r}") from exc
    instance.bids(profile)
    return profile


# --- writers ----------------------------------------------------------------

def write_series(path: Path, series: np.ndarray) -> None:
    agg = aggregate(series)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["round", "mean", "std"] + [f"run_{i}" for i in range(len(series))])
        for t in range(series.shape[1]):
            w.writerow([t + 1, fmt(agg.mean[t]), fmt(agg.std[t])] + [fmt(v) for v in series[:, t]])


def case_summary(result: CaseResult, instance: MarketInstance) -> dict:
    cfg = result.config
    row = summarize(result)
    out = {
        "case": result.case.id,
        "name": result.case.name,
        "final_round": {
            "social_cost_mean": _round6(row.social_cost),
            "social_cost_std": _round6(row.social_cost_std),
            "price_mean": _round6(row.price),
            "price_std": _round6(row.price_std),
            "payoff_mean": _round6(row.payoff),
            "average_regret_mean": _round6(row.regret),
        },
        "focal_bidder": result.focal + 1,
        "seeds": {"base": cfg.seed, "runs": [r.seed for r in result.runs]},
        "config": {
            "instance": cfg.instance,
            "case": cfg.case,
            "rounds": cfg.rounds,
            "runs": cfg.runs,
            "seed": cfg.seed,
            "eta_override": cfg.eta,
            "epsilon": cfg.epsilon,
            "max_iter": cfg.max_iter,
            "bound_method": cfg.bound,
            "eta": {str(b + 1): e for b, e in sorted(result.etas.items())},
            "utility_bound": {str(b + 1): v for b, v in sorted(result.bounds.items())},
        },
        "instance": instance.to_dict(),
    }
    if result.equilibrium is not None:
        out["equilibrium"] = {
            "profile": list(result.equilibrium.profile),
            "iterations": result.equilibrium.iterations,
        }
    if result.runs[0].final_weights:
        out["final_hedge_weights_mean"] = {
            str(b + 1): [_round6(v) for v in np.mean([r.final_weights[b] for r in result.runs], axis=0)]
            for b in sorted(result.runs[0].final_weights)
        }
    return out


def write_reports(result: CaseResult, out_dir: Path, instance: MarketInstance) -> list[Path]:
    """Write the per-round CSV series and ``summary.json`` of one case."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, name in SERIES_FILES.items():
        path = out_dir / name.format(focal=result.focal + 1)
        write_series(path, result.series(metric))
        written.append(path)
    path = out_dir / "summary.json"
    path.write_text(json.dumps(case_summary(result, instance), indent=2) + "\n")
    written.append(path)
    return written


def write_table(rows: Sequence[SummaryRow], out_dir: Path) -> Path:
    path = out_dir / "table.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["case", "name", "social_cost", "social_cost_std", "price", "price_std", "payoff", "average_regret"])
        for r in rows:
            w.writerow(
                [r.case, r.name]
                + [fmt(v) for v in (r.social_cost, r.social_cost_std, r.price, r.price_std, r.payoff, r.regret)]
            )
    return path


# --- commands ---------------------------------------------------------------

def cmd_clear(args, instance: MarketInstance) -> int:
    profile = parse_profile(args.profile, instance)
    r = clear_market(instance, profile)
    print(f"profile: {','.join(map(str, profile))}")
    print(f"price: {fmt(r.price)}")
    print(f"allocations: {','.join(fmt(x) for x in r.allocations)}")
    print(f"payments: {','.join(fmt(x) for x in r.payments)}")
    print(f"utilities: {','.join(fmt(x) for x in r.utilities)}")
    print(f"social_cost: {fmt(r.social_cost)}")
    return EXIT_OK


def cmd_equilibrium(args, instance: MarketInstance) -> int:
    cfg = _config(args)
    rep = diagonalize(instance, max_iter=cfg.max_iter, tolerance=cfg.epsilon)
    ok, gain = verify_nash(instance, rep.profile)
    r = clear_market(instance, rep.profile)
    doc = {
        "converged": rep.converged,
        "iterations": rep.iterations,
        "profile": list(rep.profile),
        "history": [list(p) for p in rep.history],
        "cycle": None if rep.cycle is None else [list(p) for p in rep.cycle],
        "nash": ok,
        "worst_deviation_gain": _round6(gain),
        "social_cost": _round6(r.social_cost),
        "price": _round6(r.price),
        "epsilon": cfg.epsilon,
        "max_iter": cfg.max_iter,
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "equilibrium.json").write_text(text + "\n")
    return EXIT_OK if rep.converged else EXIT_FAILED


def cmd_simulate(args, instance: MarketInstance) -> int:
    result = run_case(_config(args, args.case), instance)
    out = args.out if args.out is not None else Path("results") / args.case
    write_reports(result, out, instance)
    row = summarize(result)
    print(f"case {row.case} ({row.name}): social_cost {fmt(row.social_cost)} +/- {fmt(row.social_cost_std)}, "
          f"price {fmt(row.price)}, written to {out}")
    return EXIT_OK


def cmd_report(args, instance: MarketInstance) -> int:
    rows, results = run_all_cases(_config(args), instance)
    out = args.out if args.out is not None else Path("results")
    for case, result in sorted(results.items()):
        write_reports(result, out / case, instance)
    write_table(rows, out)
    print(f"{'case':<5}{'name':<20}{'social cost':>14}{'std':>10}{'price':>10}{'payoff':>10}")
    for r in rows:
        print(f"{r.case:<5}{r.name:<20}{fmt(r.social_cost):>14}{fmt(r.social_cost_std):>10}"
              f"{fmt(r.price):>10}{fmt(r.payoff):>10}")
    return EXIT_OK


COMMANDS = {
    "clear": cmd_clear,
    "equilibrium": cmd_equilibrium,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        _config(args, getattr(args, "case", "b"))
        instance = load_instance(args.instance)
    except InfeasibleDemand as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        return COMMANDS[args.command](args, instance)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MarketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
