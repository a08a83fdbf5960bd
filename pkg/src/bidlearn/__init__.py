"""Repeated day-ahead electricity auctions with quadratic bids and no-regret bidders."""

from bidlearn.agents import HedgeState, PolicyKind, hedge_eta, hedge_update
from bidlearn.equilibrium import best_response, diagonalize, verify_nash
from bidlearn.experiments import CASES, ExperimentConfig, run_all_cases, run_case
from bidlearn.market import (
    BidderSpec,
    BidFunction,
    ClearingResult,
    MarketInstance,
    clear_market,
    load_instance,
)

__all__ = [
    "BidFunction",
    "BidderSpec",
    "CASES",
    "ClearingResult",
    "ExperimentConfig",
    "HedgeState",
    "MarketInstance",
    "PolicyKind",
    "best_response",
    "clear_market",
    "diagonalize",
    "hedge_eta",
    "hedge_update",
    "load_instance",
    "run_all_cases",
    "run_case",
    "verify_nash",
]
