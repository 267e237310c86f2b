from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from medsolve.battery import random_ce_outcome, random_game
from medsolve.errors import InvalidInput, ObedienceViolation
from medsolve.families import think_tank
from medsolve.model import (
    BeliefPlan,
    FiniteGame,
    MomentGame,
    OutcomeDistribution,
    as_belief,
    outcome_to_plan,
    plan_to_outcome,
    value_bounds,
    value_correspondence,
)


def test_as_belief_scalar_on_two_states():
    np.testing.assert_allclose(as_belief(0.3, 2), [0.7, 0.3])
    with pytest.raises(InvalidInput):
        as_belief([0.5, 0.6], 2)
    with pytest.raises(InvalidInput):
        as_belief([0.5, 0.5], 3)
    with pytest.raises(InvalidInput):
        as_belief([1.2, -0.2])


def test_game_validation():
    with pytest.raises(InvalidInput):
        FiniteGame(("a",), ("x",), [1.0], [0.0], [[0.0]])
    with pytest.raises(InvalidInput):
        FiniteGame(("a", "b"), ("x",), [0.5, 0.5], [0.0, 1.0], [[0.0], [0.0]])
    with pytest.raises(InvalidInput):
        FiniteGame(("a", "b"), ("x",), [1.0, 0.0], [0.0], [[0.0], [0.0]])
    with pytest.raises(InvalidInput):
        # two moments on two states exceed n - 1
        MomentGame([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5], lambda x: x[..., 0])


def test_value_correspondence_ties():
    # the first two actions tie at the uniform belief
    g = FiniteGame(("a", "b"), ("x", "y", "z"), [0.5, 0.5], [0.0, 2.0, 5.0],
                   [[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])
    vi = value_correspondence(g, [0.5, 0.5])
    assert vi.best_actions == frozenset({0, 1})
    assert (vi.lo, vi.hi) == (0.0, 2.0)
    lo, hi = value_bounds(g, np.array([[0.5, 0.5], [1.0, 0.0]]))
    np.testing.assert_array_equal(lo, [0.0, 0.0])
    np.testing.assert_array_equal(hi, [2.0, 0.0])


def test_plan_validation():
    with pytest.raises(InvalidInput):
        BeliefPlan([[0.5, 0.5]], [0.5], [1.0])
    with pytest.raises(InvalidInput):
        BeliefPlan([[0.5, 0.5], [1, 0]], [1.5, -0.5], [1.0, 0.0])
    plan = BeliefPlan([[0.5, 0.5], [0.5, 0.5]], [0.25, 0.75], [1.0, 2.0]).merged()
    assert len(plan) == 1
    assert plan.selections[0] == pytest.approx(1.75)


def test_plan_to_outcome_rejects_bad_selection():
    g = think_tank()
    plan = BeliefPlan([g.prior], [1.0], [99.0])
    with pytest.raises(ObedienceViolation):
        plan_to_outcome(g, plan)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_outcome_plan_round_trip(seed):
    gen = np.random.default_rng(seed)
    game = random_game(gen)
    pi = random_ce_outcome(game, gen)
    plan = outcome_to_plan(game, pi)
    np.testing.assert_allclose(plan.barycenter, game.prior, atol=1e-9)
    back = plan_to_outcome(game, plan)
    assert back.sender_payoff(game) == pytest.approx(pi.sender_payoff(game), abs=1e-9)
    np.testing.assert_allclose(back.table.sum(axis=1), game.prior, atol=1e-9)
    assert back.obedience_slack(game).min() >= -1e-9
    # second round trip is stable
    again = outcome_to_plan(game, back)
    assert again.value == pytest.approx(plan.value, abs=1e-9)


def test_outcome_distribution_validation():
    with pytest.raises(InvalidInput):
        OutcomeDistribution([[0.5, 0.6]])
    with pytest.raises(InvalidInput):
        OutcomeDistribution([[1.5, -0.5]])
