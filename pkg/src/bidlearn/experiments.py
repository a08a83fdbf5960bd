"""Repeated-auction experiments: the eight bidding cases, regret, aggregation.

Each run is an independent sequence of ``rounds`` auctions. Runs share
nothing but the instance, so they can be spread over worker processes; the
per-bidder random streams depend only on ``(seed, run, bidder)`` and the
results are identical for any worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from bidlearn.agents import (
    PolicyKind,
    bidder_rng,
    counterfactual_utilities,
    hedge_eta,
    make_policy,
    run_seed,
    utility_bound,
)
from bidlearn.equilibrium import DiagonalizationReport, diagonalize
from bidlearn.market import MarketError, MarketInstance, clear_market, load_instance

log = logging.getLogger(__name__)


class EquilibriumNotFound(MarketError):
    """Raised when the best-response benchmark does not converge."""


@dataclass(frozen=True)
class CaseSpec:
    """Policy assignment for the focal bidder and its rivals.

    ``rivals``/``focal`` are ``None`` for the best-response benchmark, where
    every bidder replays a precomputed equilibrium profile.
    """

    id: str
    name: str
    rivals: PolicyKind | None
    focal: PolicyKind | None

    @property
    def static(self) -> bool:
        return self.rivals is None

    def policies(self, n_bidders: int, focal: int) -> list[PolicyKind]:
        return [self.focal if b == focal else self.rivals for b in range(n_bidders)]


T, R, H = PolicyKind.TRUSTFUL, PolicyKind.RANDOM, PolicyKind.HEDGE

CASES: dict[str, CaseSpec] = {
    spec.id: spec
    for spec in [
        CaseSpec("a", "Best Response", None, None),
        CaseSpec("b", "Trustful", T, T),
        CaseSpec("c", "Trustful vs Hedge", T, H),
        CaseSpec("d", "Trustful vs Random", T, R),
        CaseSpec("e", "Hedge vs Hedge", H, H),
        CaseSpec("f", "Hedge vs Random", H, R),
        CaseSpec("g", "Random vs Hedge", R, H),
        CaseSpec("h", "Random vs Random", R, R),
    ]
}


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str | None = None
    case: str = "b"
    rounds: int = 200
    runs: int = 15
    seed: int = 0
    eta: float | None = None
    epsilon: float = 4e-4
    max_iter: int = 50
    focal: int | None = None
    bound: str = "auto"
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; expected one of {sorted(CASES)}")
        if self.rounds < 1 or self.runs < 1:
            raise ValueError("rounds and runs must be >= 1")
        if self.eta is not None and not self.eta >= 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.bound not in ("auto", "enumerate", "analytic"):
            raise ValueError(f"unknown bound method {self.bound!r}")
        if self.max_iter < 1 or self.jobs < 1:
            raise ValueError("max_iter and jobs must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    run: int
    t: int
    profile: tuple[int, ...]
    price: float
    social_cost: float
    allocations: tuple[float, ...]
    payments: tuple[float, ...]
    utilities: tuple[float, ...]
    counterfactuals: dict[int, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class RegretSeries:
    bidder: int
    cumulative: np.ndarray
    average: np.ndarray


@dataclass(frozen=True)
class AggregateSeries:
    mean: np.ndarray
    std: np.ndarray


@dataclass
class RunResult:
    run: int
    seed: int
    records: list[RoundRecord]
    regret: RegretSeries
    final_weights: dict[int, np.ndarray]
    clipped: dict[int, int]


@dataclass
class CaseResult:
    case: CaseSpec
    config: ExperimentConfig
    focal: int
    runs: list[RunResult]
    etas: dict[int, float]
    bounds: dict[int, float]
    equilibrium: DiagonalizationReport | None = None

    def series(self, metric: str) -> np.ndarray:
        """Runs x rounds array of a scalar metric.

        ``metric`` is ``social_cost``, ``price``, ``payoff`` (focal utility)
        or ``regret`` (focal average regret).
        """
        if metric == "regret":
            return np.array([r.regret.average for r in self.runs])
        if metric == "payoff":
            return np.array([[rec.utilities[self.focal] for rec in r.records] for r in self.runs])
        return np.array([[getattr(rec, metric) for rec in r.records] for r in self.runs])

    def final(self, metric: str) -> tuple[float, float]:
        agg = aggregate(self.series(metric))
        return float(agg.mean[-1]), float(agg.std[-1])


def regret_of(
    records: Sequence[RoundRecord], bidder: int, instance: MarketInstance
) -> RegretSeries:
    """Cumulative and average regret of ``bidder`` against the best fixed action.

    Counterfactual vectors missing from the records are recomputed from the
    stored profiles.
    """
    rows = []
    for rec in records:
        cf = rec.counterfactuals.get(bidder)
        if cf is None:
            cf = counterfactual_utilities(instance, rec.profile, bidder, rec.utilities[bidder])
        rows.append(cf)
    u = np.asarray(rows, dtype=float)
    best_fixed = np.cumsum(u, axis=0).max(axis=1)
    realized = np.cumsum([rec.utilities[bidder] for rec in records])
    cumulative = best_fixed - realized
    t = np.arange(1, len(records) + 1)
    return RegretSeries(bidder, cumulative, cumulative / t)


def aggregate(series: Sequence[Sequence[float]] | np.ndarray) -> AggregateSeries:
    """Per-round mean and sample standard deviation across runs (rows)."""
    a = np.asarray(series, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if len(a) == 1:
        return AggregateSeries(a[0].copy(), np.zeros(a.shape[1]))
    # constant columns get exact statistics, free of summation round-off
    constant = np.all(a == a[0], axis=0)
    mean = np.where(constant, a[0], a.mean(axis=0))
    std = np.where(constant, 0.0, a.std(axis=0, ddof=1))
    return AggregateSeries(mean, std)


def default_focal(instance: MarketInstance) -> int:
    # the focal learner is the last bidder (Bidder 5 in the five-bidder market)
    return instance.n_bidders - 1


def equilibrium_profile(instance: MarketInstance, config: ExperimentConfig) -> DiagonalizationReport:
    rep = diagonalize(instance, max_iter=config.max_iter, tolerance=config.epsilon)
    if not rep.converged:
        raise EquilibriumNotFound(
            f"diagonalization did not converge in {rep.iterations} sweeps"
            + (f" (cycle of length {len(rep.cycle)})" if rep.cycle else "")
        )
    return rep


def simulate_run(
    instance: MarketInstance,
    case: CaseSpec,
    config: ExperimentConfig,
    run: int,
    focal: int,
    static_profile: tuple[int, ...] | None = None,
    bounds: dict[int, float] | None = None,
) -> RunResult:
    """Play ``config.rounds`` auctions for one run."""
    n = instance.n_bidders
    if case.static:
        if static_profile is None:
            raise ValueError("static case needs a precomputed profile")
        policies = []
    else:
        policies = [
            make_policy(
                kind,
                instance,
                b,
                bidder_rng(config.seed, run, b),
                config.rounds,
                config.eta,
                None if bounds is None else bounds.get(b),
            )
            for b, kind in enumerate(case.policies(n, focal))
        ]

    records = []
    for t in range(1, config.rounds + 1):
        profile = static_profile if case.static else tuple(p.act() for p in policies)
        result = clear_market(instance, profile)
        feedback = {}
        for b, p in enumerate(policies):
            if p.needs_feedback:
                cf = counterfactual_utilities(instance, profile, b, result.utilities[b])
                p.observe(cf)
                feedback[b] = tuple(cf.tolist())
        records.append(
            RoundRecord(
                run=run,
                t=t,
                profile=profile,
                price=result.price,
                social_cost=result.social_cost,
                allocations=result.allocations,
                payments=result.payments,
                utilities=result.utilities,
                counterfactuals=feedback,
            )
        )

    weights = {b: p.state.weights.copy() for b, p in enumerate(policies) if p.state is not None}
    clipped = {b: p.clipped for b, p in enumerate(policies) if p.needs_feedback}
    for b, count in clipped.items():
        if count:
            log.warning("run %d: %d utilities of bidder %d clipped by normalization", run, count, b)
    return RunResult(
        run=run,
        seed=run_seed(config.seed, run),
        records=records,
        regret=regret_of(records, focal, instance),
        final_weights=weights,
        clipped=clipped,
    )


def _run_worker(args):
    return simulate_run(*args)


def run_case(config: ExperimentConfig, instance: MarketInstance | None = None) -> CaseResult:
    """Run every repetition of one case and collect the per-round records."""
    if instance is None:
        if config.instance is None:
            raise ValueError("no instance given")
        instance = load_instance(config.instance)
    case = CASES[config.case]
    focal = default_focal(instance) if config.focal is None else config.focal
    if not 0 <= focal < instance.n_bidders:
        raise ValueError(f"focal bidder {focal} out of range")

    eq = None
    static_profile = None
    if case.id == "a":
        eq = equilibrium_profile(instance, config)
        static_profile = eq.profile

    kinds = [] if case.static else case.policies(instance.n_bidders, focal)
    etas = {
        b: (hedge_eta(instance.bidders[b].n_actions, config.rounds) if config.eta is None else config.eta)
        for b, k in enumerate(kinds)
        if k is PolicyKind.HEDGE
    }
    bounds = {b: utility_bound(instance, b, config.bound) for b in etas}

    jobs = [(instance, case, config, run, focal, static_profile, bounds) for run in range(config.runs)]
    if config.jobs > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            runs = list(pool.map(_run_worker, jobs))
    else:
        runs = [_run_worker(j) for j in jobs]
    return CaseResult(case, config, focal, runs, etas, bounds, eq)


@dataclass(frozen=True)
class SummaryRow:
    case: str
    name: str
    social_cost: float
    social_cost_std: float
    price: float
    price_std: float
    payoff: float
    regret: float


def summarize(result: CaseResult) -> SummaryRow:
    sc, sc_std = result.final("social_cost")
    price, price_std = result.final("price")
    return SummaryRow(
        case=result.case.id,
        name=result.case.name,
        social_cost=sc,
        social_cost_std=sc_std,
        price=price,
        price_std=price_std,
        payoff=result.final("payoff")[0],
        regret=result.final("regret")[0],
    )


def run_all_cases(
    template: ExperimentConfig,
    instance: MarketInstance | None = None,
    cases: Sequence[str] | None = None,
) -> tuple[list[SummaryRow], dict[str, CaseResult]]:
    """Run each case with a shared instance and seed; rows sorted by final social cost."""
    if instance is None:
        instance = load_instance(template.instance)
    results = {}
    for case in cases or sorted(CASES):
        cfg = ExperimentConfig(**{**template.__dict__, "case": case})
        results[case] = run_case(cfg, instance)
    rows = sorted((summarize(r) for r in results.values()), key=lambda row: (row.social_cost, row.case))
    return rows, results
