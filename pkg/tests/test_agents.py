import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bidlearn.agents import (
    HedgeState,
    PolicyKind,
    bidder_rng,
    counterfactual_utilities,
    hedge_eta,
    hedge_update,
    inverse_cdf,
    make_policy,
    normalize_utilities,
    policy_step,
    sample_action,
    utility_bound,
)
from bidlearn.market import clear_market
from oracles import utility_by_reclearing
from test_market import make_instance

# recorded from bidder_rng(42, 0, 0) with uniform weights over 10 actions
GOLDEN_SEED42 = [5, 9, 8, 5, 2, 0, 5, 7, 0, 8, 4, 5, 0, 9, 7, 5, 5, 1, 6, 9]


def test_hedge_eta_values():
    assert hedge_eta(10, 200) == pytest.approx(0.30349, abs=1e-5)
    assert hedge_eta(1, 100) == 0.0
    assert hedge_eta(2, 8 * math.log(2)) == pytest.approx(1.0, abs=1e-15)


def test_hedge_eta_rejects_bad_horizon():
    with pytest.raises(ValueError):
        hedge_eta(10, 0)


def test_sample_degenerate_weights():
    rng = bidder_rng(0, 0, 0)
    state = HedgeState(np.array([1.0, 0.0, 0.0]), 0.1)
    assert {sample_action(state, rng) for _ in range(1000)} == {0}
    state = HedgeState(np.array([0.0, 0.0, 1.0]), 0.1)
    assert {sample_action(state, rng) for _ in range(1000)} == {2}


def test_inverse_cdf_edges():
    w = np.array([0.25, 0.25, 0.5])
    assert inverse_cdf(w, 0.0) == 0
    assert inverse_cdf(w, 0.2499) == 0
    assert inverse_cdf(w, 0.25) == 1
    assert inverse_cdf(w, 0.9999999) == 2


def test_sample_uniform_frequencies():
    rng = bidder_rng(7, 0, 0)
    state = HedgeState.uniform(10, 0.1)
    n = 10**6
    # vectorised inverse CDF over the same weights keeps this quick
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(np.cumsum(state.weights), u, side="right"), 9)
    freq = np.bincount(idx, minlength=10) / n
    sigma = math.sqrt(0.1 * 0.9 / n)
    assert np.all(np.abs(freq - 0.1) <= 3 * sigma)


def test_sample_golden_sequence():
    state = HedgeState.uniform(10, 0.3)
    rng = bidder_rng(42, 0, 0)
    assert [sample_action(state, rng) for _ in range(20)] == GOLDEN_SEED42


def test_streams_are_independent_per_bidder():
    a = bidder_rng(0, 3, 1).random(5)
    b = bidder_rng(0, 3, 2).random(5)
    c = bidder_rng(0, 3, 1).random(5)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_counterfactuals_single_action():
    inst = make_instance([(100, [(2, 10)]), (100, [(2, 10)])], 100)
    realized = clear_market(inst, (0, 0)).utilities[0]
    assert counterfactual_utilities(inst, (0, 0), 0).tolist() == [realized]


def test_counterfactuals_two_bidder_toy():
    inst = make_instance([(100, [(2, 10), (2, 20)]), (100, [(2, 10)])], 100)
    u = counterfactual_utilities(inst, (0, 0), 0)
    # hand KKT: symmetric split at price 110; then 4x + 20 = 210 -> x = 47.5, price 115
    assert u == pytest.approx([2500.0, 2731.25])
    for k in range(2):
        c = [inst.bidders[0].actions[k].c, 2]
        d = [inst.bidders[0].actions[k].d, 10]
        oracle, _, _ = utility_by_reclearing(2, 10, c, d, [100, 100], 100, 0)
        assert u[k] == pytest.approx(oracle, abs=1e-4)


def test_counterfactual_matches_realized_exactly(table1):
    profile = (3, 1, 4, 1, 5)
    r = clear_market(table1, profile)
    for learner in range(5):
        u = counterfactual_utilities(table1, profile, learner)
        assert u[profile[learner]] == r.utilities[learner]


def test_table1_bidder5_prefers_true_cost(table1):
    u = counterfactual_utilities(table1, table1.truthful_profile(), 4)
    assert len(u) == 10
    assert int(np.argmax(u)) == 0


def test_normalize_utilities():
    b = 80.0
    assert normalize_utilities([0, b / 2, b], b).tolist() == [0.0, 0.5, 1.0]
    assert normalize_utilities([2 * b, -1.0], b).tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        normalize_utilities([1.0], 0.0)


def test_table1_bound_never_clips(table1):
    for bidder in range(5):
        bound = utility_bound(table1, bidder)
        rng = np.random.default_rng(bidder)
        for _ in range(200):
            profile = tuple(int(k) for k in rng.integers(0, 10, 5))
            u = counterfactual_utilities(table1, profile, bidder)
            assert np.all(u >= 0.0) and np.all(u < bound)


def test_hedge_update_examples():
    s = HedgeState.uniform(4, 0.7)
    assert hedge_update(s, [0.3] * 4).weights == pytest.approx([0.25] * 4)
    s = HedgeState(np.array([0.5, 0.5]), 1.0)
    assert hedge_update(s, [0.0, 1.0]).weights == pytest.approx([0.26894, 0.73106], abs=1e-5)


def test_hedge_concentrates_on_best_action():
    s = HedgeState.uniform(5, 0.5)
    u = [1.0, 0.0, 0.0, 0.0, 0.0]
    prev = s.weights[0]
    for _ in range(100):
        s = hedge_update(s, u)
        assert s.weights[0] >= prev
        if prev < 1.0 - 1e-9:
            assert s.weights[0] > prev
        prev = s.weights[0]
    assert prev > 0.99999
    assert s.round == 100


unit = st.floats(0.0, 1.0)
# utilities on a 0.01 grid so distinct entries stay distinguishable in floating point
gridded = st.integers(0, 100).map(lambda i: i / 100)


@settings(max_examples=200, deadline=None)
@given(st.lists(unit, min_size=2, max_size=12), st.floats(0.01, 3.0), st.integers(1, 20))
def test_weights_stay_normalized(u, eta, steps):
    s = HedgeState.uniform(len(u), eta)
    for _ in range(steps):
        s = hedge_update(s, u)
        assert abs(s.weights.sum() - 1.0) <= 1e-12
        assert np.all(s.weights >= 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(gridded, min_size=2, max_size=10, unique=True), st.floats(0.01, 3.0))
def test_best_action_gains_relative_weight(u, eta):
    rng = np.random.default_rng(len(u))
    w = rng.dirichlet(np.ones(len(u)))
    s = HedgeState(w, eta)
    new = hedge_update(s, u).weights
    best = int(np.argmax(u))
    for i in range(len(u)):
        if i != best:
            assert new[best] / new[i] > w[best] / w[i]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 1000), min_size=2, max_size=10, unique=True),
    st.floats(1.5, 50.0),
)
def test_bound_scaling_preserves_weight_order(raw, alpha):
    bound = 1000.0
    a = hedge_update(HedgeState.uniform(len(raw), 0.3), normalize_utilities(raw, bound))
    b = hedge_update(HedgeState.uniform(len(raw), 0.3), normalize_utilities(raw, alpha * bound))
    assert np.array_equal(np.argsort(a.weights, kind="stable"), np.argsort(b.weights, kind="stable"))


def test_policy_step_trustful_and_hedge():
    rng = bidder_rng(0, 0, 0)
    assert policy_step(PolicyKind.TRUSTFUL, None, rng, 10) == 0
    s = HedgeState(np.array([0.0] * 9 + [1.0]), 0.3)
    assert policy_step(PolicyKind.HEDGE, s, rng) == 9


def test_random_policy_uniformity():
    rng = bidder_rng(3, 0, 0)
    draws = [policy_step(PolicyKind.RANDOM, None, rng, 10) for _ in range(10**5)]
    counts = np.bincount(draws, minlength=10)
    assert stats.chisquare(counts).pvalue > 0.01


def test_make_policy_defaults(table1):
    p = make_policy(PolicyKind.HEDGE, table1, 4, bidder_rng(0, 0, 4), horizon=200)
    assert p.state.eta == pytest.approx(hedge_eta(10, 200))
    assert p.bound == pytest.approx(utility_bound(table1, 4))
    p = make_policy(PolicyKind.HEDGE, table1, 4, bidder_rng(0, 0, 4), horizon=200, eta=0.05)
    assert p.state.eta == 0.05
    assert not make_policy(PolicyKind.RANDOM, table1, 0, bidder_rng(0, 0, 0), 200).needs_feedback
