"""Quadratic-bid market clearing.

The market operator dispatches price-inelastic demand ``Q`` across bidders
whose submitted bids are quadratic cost curves ``b(x) = 0.5*c*x**2 + d*x``,
subject to ``0 <= x <= capacity``. The dispatch problem is separable, so it is
solved through its single dual variable: the uniform clearing price.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

DEMAND_TOL = 1e-6


class MarketError(Exception):
    """Base class for market-clearing failures."""


class InstanceError(MarketError, ValueError):
    """Raised when an instance or bid profile is malformed."""


class InfeasibleDemand(MarketError):
    """Raised when demand exceeds the total capacity of the market."""


class NonConvergence(MarketError):
    """Raised when the price search cannot balance supply and demand."""


@dataclass(frozen=True)
class BidFunction:
    """A quadratic price curve ``0.5*c*x**2 + d*x``.

    Used both as a bidder's true cost and as a submitted bid.
    """

    c: float
    d: float

    def __post_init__(self) -> None:
        if not (self.c >= 0 and self.d >= 0):
            raise InstanceError(f"bid coefficients must be non-negative, got c={self.c}, d={self.d}")

    def value(self, x: float) -> float:
        return 0.5 * self.c * x * x + self.d * x

    def marginal(self, x: float) -> float:
        return self.c * x + self.d


@dataclass(frozen=True)
class BidderSpec:
    """A market participant with a finite grid of bid functions.

    ``actions[0]`` is the bidder's true cost.
    """

    id: int
    actions: tuple[BidFunction, ...]
    capacity: float

    def __post_init__(self) -> None:
        if len(self.actions) < 1:
            raise InstanceError(f"bidder {self.id} has no actions")
        if not self.capacity > 0:
            raise InstanceError(f"bidder {self.id} capacity must be positive, got {self.capacity}")

    @property
    def true_cost(self) -> BidFunction:
        return self.actions[0]

    @property
    def n_actions(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class MarketInstance:
    bidders: tuple[BidderSpec, ...]
    demand: float

    def __post_init__(self) -> None:
        if not self.bidders:
            raise InstanceError("instance has no bidders")
        if [b.id for b in self.bidders] != list(range(len(self.bidders))):
            raise InstanceError("bidder ids must be unique and contiguous from 0")
        if not self.demand >= 0:
            raise InstanceError(f"demand must be non-negative, got {self.demand}")
        if self.demand > self.total_capacity:
            raise InfeasibleDemand(
                f"demand {self.demand} exceeds total capacity {self.total_capacity}"
            )

    @property
    def n_bidders(self) -> int:
        return len(self.bidders)

    @property
    def total_capacity(self) -> float:
        return sum(b.capacity for b in self.bidders)

    def truthful_profile(self) -> tuple[int, ...]:
        return (0,) * self.n_bidders

    def bids(self, profile: Sequence[int]) -> list[BidFunction]:
        """Return the submitted bid of every bidder under ``profile``."""
        if len(profile) != self.n_bidders:
            raise InstanceError(
                f"profile has {len(profile)} entries for {self.n_bidders} bidders"
            )
        out = []
        for bidder, k in zip(self.bidders, profile):
            if not 0 <= k < bidder.n_actions:
                raise InstanceError(
                    f"action {k} out of range for bidder {bidder.id} ({bidder.n_actions} actions)"
                )
            out.append(bidder.actions[k])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> MarketInstance:
        try:
            bidders = tuple(
                BidderSpec(
                    id=i,
                    actions=tuple(BidFunction(float(c), float(d)) for c, d in entry["actions"]),
                    capacity=float(entry["capacity"]),
                )
                for i, entry in enumerate(data["bidders"])
            )
            demand = float(data["demand"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(f"malformed instance: {exc!r}") from exc
        return cls(bidders=bidders, demand=demand)

    def to_dict(self) -> dict:
        return {
            "demand": self.demand,
            "bidders": [
                {"capacity": b.capacity, "actions": [[a.c, a.d] for a in b.actions]}
                for b in self.bidders
            ],
        }


def load_instance(path: str | Path) -> MarketInstance:
    """Read an instance file (see ``instances/README.md`` for the schema)."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc
    return MarketInstance.from_dict(data)


@dataclass(frozen=True)
class ClearingResult:
    allocations: tuple[float, ...]
    price: float
    social_cost: float
    payments: tuple[float, ...]
    utilities: tuple[float, ...]


def allocation_at_price(bid: BidFunction, capacity: float, price: float) -> float:
    """Output of a price-taking bidder: the clamped stationary point ``(price - d)/c``."""
    x = (price - bid.d) / bid.c
    if x <= 0.0:
        return 0.0
    if x >= capacity:
        return capacity
    return x


def _supply(cs, ds, caps, price: float, include_steps: bool) -> float:
    # c == 0 bidders jump from 0 to capacity at price == d; include_steps picks the right limit
    total = 0.0
    for c, d, cap in zip(cs, ds, caps):
        if c > 0.0:
            x = (price - d) / c
            total += 0.0 if x <= 0.0 else (cap if x >= cap else x)
        elif price > d or (include_steps and price == d):
            total += cap
    return total


def clearing_price(
    bids: Sequence[BidFunction], capacities: Sequence[float], demand: float
) -> tuple[float, list[float]]:
    """Solve the dispatch problem for fixed bids; return ``(price, allocations)``.

    Aggregate supply is piecewise linear in the price with kinks where a
    bidder starts producing (``d``) or hits capacity (``c*cap + d``). A
    bisection over the sorted kinks finds the segment where supply meets
    demand, and the price is then solved in closed form on that segment.
    Flat (``c == 0``) bids that are marginal share the residual demand
    pro rata to capacity.
    """
    cs = [b.c for b in bids]
    ds = [b.d for b in bids]
    caps = list(capacities)
    total_cap = sum(caps)
    if demand > total_cap * (1.0 + 1e-12):
        raise InfeasibleDemand(f"demand {demand} exceeds total capacity {total_cap}")
    if demand <= 0.0:
        return min(ds), [0.0] * len(bids)

    kinks = sorted(set(ds) | {c * cap + d for c, d, cap in zip(cs, ds, caps) if c > 0.0})
    # smallest kink at which supply (upper limit) covers demand
    lo, hi = 0, len(kinks) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _supply(cs, ds, caps, kinks[mid], True) >= demand:
            hi = mid
        else:
            lo = mid + 1
    top = kinks[lo]
    if _supply(cs, ds, caps, top, True) < demand * (1.0 - 1e-12):
        raise NonConvergence(f"supply never reaches demand {demand}")

    below = _supply(cs, ds, caps, top, False)
    if below >= demand and lo > 0:
        # interior of the linear segment (kinks[lo-1], top)
        bottom = kinks[lo - 1]
        mid_price = 0.5 * (bottom + top)
        fixed, slope, intercept = 0.0, 0.0, 0.0
        for c, d, cap in zip(cs, ds, caps):
            if c > 0.0:
                x = (mid_price - d) / c
                if x >= cap:
                    fixed += cap
                elif x > 0.0:
                    slope += 1.0 / c
                    intercept += d / c
            elif mid_price > d:
                fixed += cap
        price = (demand - fixed + intercept) / slope
        price = min(max(price, bottom), top)
        allocations = [
            allocation_at_price(BidFunction(c, d), cap, price) if c > 0.0 else (cap if price > d else 0.0)
            for c, d, cap in zip(cs, ds, caps)
        ]
    else:
        price = top
        allocations = []
        step_cap = 0.0
        for c, d, cap in zip(cs, ds, caps):
            if c > 0.0:
                allocations.append(allocation_at_price(BidFunction(c, d), cap, price))
            elif price > d:
                allocations.append(cap)
            else:
                allocations.append(0.0)
                if price == d:
                    step_cap += cap
        residual = demand - sum(allocations)
        if step_cap > 0.0 and residual > 0.0:
            share = min(residual / step_cap, 1.0)
            for i, (c, d, cap) in enumerate(zip(cs, ds, caps)):
                if c == 0.0 and d == price:
                    allocations[i] = share * cap

    gap = sum(allocations) - demand
    if abs(gap) > 1e-9 * max(1.0, demand):
        raise NonConvergence(f"supply/demand gap {gap:.3e} after price search")
    return price, allocations


def clear_market(instance: MarketInstance, profile: Sequence[int]) -> ClearingResult:
    """Clear one auction round for the given action profile.

    Social cost is evaluated with the submitted bids; utilities with each
    bidder's true cost. Unaccepted bidders are paid nothing.
    """
    bids = instance.bids(profile)
    caps = [b.capacity for b in instance.bidders]
    price, x = clearing_price(bids, caps, instance.demand)
    social = sum(0.5 * b.c * xi * xi + b.d * xi for b, xi in zip(bids, x))
    payments = []
    utilities = []
    for bidder, xi in zip(instance.bidders, x):
        if xi > 0.0:
            true = bidder.actions[0]
            pay = price * xi
            payments.append(pay)
            utilities.append(pay - (0.5 * true.c * xi * xi + true.d * xi))
        else:
            payments.append(0.0)
            utilities.append(0.0)
    return ClearingResult(tuple(x), price, social, tuple(payments), tuple(utilities))


def social_cost(
    instance: MarketInstance,
    allocations: Sequence[float],
    profile: Sequence[int] | None = None,
) -> float:
    """Total cost of a dispatch.

    With ``profile=None`` the true costs are used; otherwise the bids
    submitted under ``profile``.
    """
    if profile is None:
        curves = [b.true_cost for b in instance.bidders]
    else:
        curves = instance.bids(profile)
    return sum(f.value(x) for f, x in zip(curves, allocations))
