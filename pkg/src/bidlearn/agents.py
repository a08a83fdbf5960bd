"""Bidding policies: trustful, uniformly random, and Hedge.

Hedge learns under full-information feedback: after each round the learner
re-clears the market against the realized rival bids to obtain the utility
of every action in its grid, then applies a multiplicative-weights update.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from bidlearn.market import MarketInstance, clear_market


class PolicyKind(str, enum.Enum):
    TRUSTFUL = "trustful"
    RANDOM = "random"
    HEDGE = "hedge"


def run_seed(base_seed: int, run: int) -> int:
    """Seed of one run, hashed from the experiment seed and the run index."""
    return int(np.random.SeedSequence([base_seed, run]).generate_state(1, np.uint64)[0])


def bidder_rng(base_seed: int, run: int, bidder: int) -> np.random.Generator:
    """Counter-based (Philox) stream owned by one bidder in one run.

    Depends only on ``(base_seed, run, bidder)``, so runs can execute in any
    order or process and still draw identical numbers.
    """
    seq = np.random.SeedSequence([run_seed(base_seed, run), bidder])
    return np.random.Generator(np.random.Philox(seq))


def hedge_eta(n_actions: int, horizon: float) -> float:
    """Learning rate ``sqrt(8 ln K / T)``; zero for a single-action grid."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if n_actions <= 1:
        return 0.0
    return math.sqrt(8.0 * math.log(n_actions) / horizon)


@dataclass
class HedgeState:
    weights: np.ndarray
    eta: float
    round: int = 0

    @classmethod
    def uniform(cls, n_actions: int, eta: float) -> HedgeState:
        return cls(np.full(n_actions, 1.0 / n_actions), eta)

    @property
    def n_actions(self) -> int:
        return len(self.weights)


def inverse_cdf(weights: np.ndarray, u: float) -> int:
    """Index drawn from ``weights`` given one uniform variate ``u`` in [0, 1)."""
    cdf = np.cumsum(weights)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(i, len(weights) - 1)


def sample_action(state: HedgeState, rng: np.random.Generator) -> int:
    return inverse_cdf(state.weights, rng.random())


def normalize_utilities(raw: Sequence[float], bound: float) -> np.ndarray:
    """Map utilities in euro onto [0, 1] by ``clamp(u / bound, 0, 1)``."""
    if not bound > 0:
        raise ValueError(f"normalization bound must be positive, got {bound}")
    return np.clip(np.asarray(raw, dtype=float) / bound, 0.0, 1.0)


def hedge_update(state: HedgeState, normalized: Sequence[float]) -> HedgeState:
    """One multiplicative-weights step with losses ``1 - u``."""
    w = state.weights * np.exp(-state.eta * (1.0 - np.asarray(normalized, dtype=float)))
    w /= w.sum()
    return HedgeState(w, state.eta, state.round + 1)


ENUMERATION_LIMIT = 200_000


def analytic_utility_bound(instance: MarketInstance, bidder: int) -> float:
    """Worst-case utility bound from the steepest bid in the market.

    The price never exceeds the steepest bid evaluated at full demand, and
    the bidder never sells more than ``min(capacity, Q)``. Valid but loose.
    """
    coeffs = [a for b in instance.bidders for a in b.actions]
    c_max = max(a.c for a in coeffs)
    d_max = max(a.d for a in coeffs)
    q = instance.demand
    bound = (c_max * q + d_max) * min(instance.bidders[bidder].capacity, q)
    return bound if bound > 0 else 1.0


@functools.lru_cache(maxsize=8)
def max_utilities(instance: MarketInstance) -> tuple[float, ...]:
    """Largest utility each bidder attains over every joint action profile."""
    best = [0.0] * instance.n_bidders
    for profile in itertools.product(*(range(b.n_actions) for b in instance.bidders)):
        for i, u in enumerate(clear_market(instance, profile).utilities):
            if u > best[i]:
                best[i] = u
    return tuple(best)


def utility_bound(instance: MarketInstance, bidder: int, method: str = "auto") -> float:
    """Scale used to map a bidder's utilities onto [0, 1] before a Hedge update.

    ``"enumerate"`` takes the bidder's maximum utility over all joint action
    profiles, which is exact and keeps Hedge responsive; ``"analytic"`` uses
    :func:`analytic_utility_bound`. ``"auto"`` enumerates when the joint
    action space has at most ``ENUMERATION_LIMIT`` profiles.
    """
    if method == "auto":
        size = math.prod(b.n_actions for b in instance.bidders)
        method = "enumerate" if size <= ENUMERATION_LIMIT else "analytic"
    if method == "analytic":
        return analytic_utility_bound(instance, bidder)
    if method != "enumerate":
        raise ValueError(f"unknown bound method {method!r}")
    bound = max_utilities(instance)[bidder]
    return bound if bound > 0 else 1.0


def counterfactual_utilities(
    instance: MarketInstance,
    profile: Sequence[int],
    learner: int,
    realized: float | None = None,
) -> np.ndarray:
    """Utility the learner would have earned with each of its actions, rivals fixed.

    If ``realized`` is given it is used verbatim for the action actually played.
    """
    played = profile[learner]
    trial = list(profile)
    out = np.empty(instance.bidders[learner].n_actions)
    for k in range(len(out)):
        if k == played and realized is not None:
            out[k] = realized
            continue
        trial[learner] = k
        out[k] = clear_market(instance, trial).utilities[learner]
    return out


@dataclass
class Policy:
    """Per-bidder decision maker.

    ``needs_feedback`` tells the simulator whether to compute counterfactual
    utilities for this bidder every round.
    """

    kind: PolicyKind
    n_actions: int
    rng: np.random.Generator
    state: HedgeState | None = None
    bound: float = 1.0
    clipped: int = field(default=0, init=False)

    @property
    def needs_feedback(self) -> bool:
        return self.kind is PolicyKind.HEDGE

    def act(self) -> int:
        return policy_step(self.kind, self.state, self.rng, self.n_actions)

    def observe(self, utilities: np.ndarray) -> None:
        if self.kind is not PolicyKind.HEDGE:
            return
        scaled = np.asarray(utilities, dtype=float) / self.bound
        self.clipped += int(np.count_nonzero((scaled < 0.0) | (scaled > 1.0)))
        self.state = hedge_update(self.state, normalize_utilities(utilities, self.bound))


def policy_step(
    kind: PolicyKind,
    state: HedgeState | None,
    rng: np.random.Generator,
    n_actions: int | None = None,
) -> int:
    if kind is PolicyKind.TRUSTFUL:
        return 0
    if kind is PolicyKind.RANDOM:
        k = n_actions if n_actions is not None else state.n_actions
        return min(int(rng.random() * k), k - 1)
    return sample_action(state, rng)


def make_policy(
    kind: PolicyKind,
    instance: MarketInstance,
    bidder: int,
    rng: np.random.Generator,
    horizon: int,
    eta: float | None = None,
    bound: float | None = None,
) -> Policy:
    n = instance.bidders[bidder].n_actions
    if kind is not PolicyKind.HEDGE:
        return Policy(kind, n, rng)
    rate = hedge_eta(n, horizon) if eta is None else eta
    if bound is None:
        bound = utility_bound(instance, bidder)
    return Policy(kind, n, rng, HedgeState.uniform(n, rate), bound)
