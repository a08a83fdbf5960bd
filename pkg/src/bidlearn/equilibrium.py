"""Best responses by enumeration and the diagonalization (best-response) loop.

With a finite action grid the bidder's bi-level problem is solved exactly
by clearing the market once per candidate bid and keeping the most
profitable one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from bidlearn.agents import counterfactual_utilities
from bidlearn.market import MarketInstance

NASH_TOL = 1e-6


@dataclass(frozen=True)
class BestResponseResult:
    action: int
    utility: float
    utilities: tuple[float, ...]


@dataclass
class DiagonalizationReport:
    profile: tuple[int, ...]
    iterations: int
    converged: bool
    history: list[tuple[int, ...]] = field(default_factory=list)
    cycle: list[tuple[int, ...]] | None = None


def best_response(
    instance: MarketInstance, profile: Sequence[int], bidder: int
) -> BestResponseResult:
    """Utility-maximising action of ``bidder`` against fixed rivals.

    Ties go to the lowest index, so the true cost wins any tie it is part of.
    """
    u = counterfactual_utilities(instance, profile, bidder)
    k = int(np.argmax(u))  # first maximum
    return BestResponseResult(k, float(u[k]), tuple(float(v) for v in u))


def _coefficients(instance: MarketInstance, profile: Sequence[int]) -> np.ndarray:
    return np.array([(b.c, b.d) for b in instance.bids(profile)])


def diagonalize(
    instance: MarketInstance,
    initial: Sequence[int] | None = None,
    max_iter: int = 50,
    tolerance: float = 4e-4,
    schedule: Literal["gauss-seidel", "jacobi"] = "gauss-seidel",
) -> DiagonalizationReport:
    """Iterate best responses over bidders until the bid profile settles.

    One iteration is a full sweep over bidders in id order. With the
    Gauss-Seidel schedule each bidder responds to the already updated
    choices of earlier bidders; with Jacobi all respond to the previous
    sweep. Convergence means no bid coefficient moved by more than
    ``tolerance`` (max-norm) during the sweep. A revisit of an earlier
    profile stops the loop and is reported as a cycle.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    profile = tuple(initial) if initial is not None else instance.truthful_profile()
    instance.bids(profile)  # validates
    history = [profile]
    for i in range(1, max_iter + 1):
        current = list(profile)
        for bidder in range(instance.n_bidders):
            base = current if schedule == "gauss-seidel" else profile
            current[bidder] = best_response(instance, base, bidder).action
        new = tuple(current)
        shift = np.max(np.abs(_coefficients(instance, new) - _coefficients(instance, profile)))
        history.append(new)
        if shift <= tolerance:
            return DiagonalizationReport(new, i, True, history)
        if new in history[:-1]:
            start = history.index(new)
            return DiagonalizationReport(new, i, False, history, cycle=history[start:-1])
        profile = new
    return DiagonalizationReport(profile, max_iter, False, history)


def verify_nash(
    instance: MarketInstance, profile: Sequence[int], tol: float = NASH_TOL
) -> tuple[bool, float]:
    """Check every unilateral deviation; return ``(is_nash, worst_gain)``."""
    worst = -np.inf
    for bidder in range(instance.n_bidders):
        u = counterfactual_utilities(instance, profile, bidder)
        worst = max(worst, float(np.max(u) - u[profile[bidder]]))
    return worst <= tol, worst
