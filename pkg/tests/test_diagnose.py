from __future__ import annotations

import numpy as np
import pytest

from medsolve import diagnose as dg
from medsolve.errors import InternalError, NotBinary, NotSingletonValued
from medsolve.families import polynomial, quadratic, rotated_s, sine, think_tank
from medsolve.model import BeliefPlan, FiniteGame, outcome_to_plan
from medsolve.papercases import trilemma_payoff
from medsolve.solve import solve, solve_md_outcome
from oracles import ROTATED_S_DELTA, rotated_s_value

TAU_STAR = BeliefPlan([[1, 0], [0.25, 0.75], [0, 1]], [49 / 75, 14 / 75, 12 / 75],
                      [0.0, 12 / 409, -9 / 409])


def test_md_outcome_plan_is_implementable():
    g = think_tank()
    p = np.array([0.5, 0.25, 0.25])
    res = solve_md_outcome(g, p)
    rep = dg.check_implementable(g, p, outcome_to_plan(g, res.outcome, p))
    assert rep.verdict["MD"]
    assert np.max(np.abs(rep.consistency_residual)) <= 1e-8
    assert np.max(np.abs(rep.covariance_residual)) <= 1e-8


def test_improvement_plan_is_mediation_not_cheap_talk():
    g = rotated_s()
    p = np.array([0.7, 0.3])
    # tau* has barycenter 14/75*0.75 + 12/75 = 0.3
    np.testing.assert_allclose(TAU_STAR.barycenter, p)
    rep = dg.check_implementable(g, p, TAU_STAR)
    assert rep.verdict == {"BP": True, "MD": True, "CT": False}
    assert TAU_STAR.value == pytest.approx(60 / 30675, abs=1e-12)


def test_improving_plan_gain_matches_closed_form():
    g = rotated_s()
    p = np.array([0.7, 0.3])
    cert = dg.construct_improving_plan(g, p, 0.0, ([0.0, 1.0], 9 / 14), 800)
    assert cert.value_gain == pytest.approx(cert.closed_form_gain, abs=1e-8)
    assert cert.value_gain == pytest.approx(60 / 30675, abs=1e-8)
    assert cert.xi == pytest.approx(7 / 13, abs=1e-9)
    assert dg.check_implementable(g, p, cert.mixed_plan).verdict["MD"]
    ct = solve(g, "ct-max", p, 800).plan
    assert dg.receiver_value(g, cert.mixed_plan) > dg.receiver_value(g, ct)


def test_rotated_s_is_improvable_but_think_tank_blue_is_not():
    g = rotated_s()
    st = dg.improvement_status(g, 0.3, 0.0, 400)
    assert st.status == dg.IMPROVABLE
    tt = think_tank()
    st = dg.improvement_status(tt, (0.2, 0.4, 0.4))
    assert st.status == dg.NOT_IMPROVABLE
    assert st.s == pytest.approx(2.0)


def test_full_dimensionality_think_tank():
    tt = think_tank()
    assert dg.is_full_dimensional(tt, (0.2, 0.4, 0.4)).full_dimensional
    assert dg.cheap_talk_hull(tt, (0.2, 0.4, 0.4), 2.0).hull_dimension == 2


@pytest.mark.parametrize("p,label", [
    ((0.1, 0.1, 0.8), dg.ALL_EQUAL),
    ((0.2, 0.4, 0.4), dg.BP_GT_MD_EQ_CT),
    ((0.5, 0.25, 0.25), dg.BP_GT_MD_GT_CT),
])
def test_trichotomy_think_tank(p, label):
    assert dg.classify_trichotomy(think_tank(), p).label == label


def test_label_values():
    assert dg.label_values(1, 1, 1) == dg.ALL_EQUAL
    assert dg.label_values(2, 1, 1) == dg.BP_GT_MD_EQ_CT
    assert dg.label_values(3, 2, 1) == dg.BP_GT_MD_GT_CT
    with pytest.raises(InternalError):
        dg.label_values(2, 2, 1)


def test_mono_crossing_classes():
    assert dg.mono_crossing(polynomial([0, 1]), 0.5) == dg.FROM_BELOW
    assert dg.mono_crossing(polynomial([1, -1]), 0.5) == dg.FROM_ABOVE
    assert dg.mono_crossing(polynomial([0.5]), 0.5) == dg.BOTH
    assert dg.mono_crossing(sine(), 0.0) == dg.NEITHER
    # the quadratic dips below 1/4 on one side only
    assert dg.mono_crossing(quadratic(), 0.25) == dg.FROM_BELOW


def test_single_crossing():
    assert dg.single_crossing_at(polynomial([0, 1]), 0.4, 0.4)
    assert not dg.single_crossing_at(polynomial([0, 1]), 0.4, 0.5)
    # V = (2 mu - 1/2)^2 touches 1/4 at 0 and 1/2
    assert dg.single_crossing_at(quadratic(), 0.25, 0.5)
    with pytest.raises(NotBinary):
        dg.mono_crossing(think_tank(), 1.0)
    tie = FiniteGame(("a", "b"), ("x", "y"), [0.5, 0.5], [0.0, 1.0], [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(NotSingletonValued):
        dg.single_crossing_at(tie, 0.5, 0.5)


def test_full_disclosure_optimal():
    # V = mu differs at the vertices, so full disclosure is not even cheap talk
    assert not dg.full_disclosure_optimal(polynomial([0, 1]), 0.3, 400)
    # convex V with equal vertex values: full disclosure is the persuasion optimum
    assert dg.full_disclosure_optimal(polynomial([0.25, -1, 1]), 0.3, 400)
    # sine: full disclosure is cheap talk but mediation does better
    assert not dg.full_disclosure_optimal(sine(), 0.2, 400)
    assert solve(sine(), "ct-max", 0.2, 400).value == pytest.approx(0.0, abs=1e-9)
    assert solve(sine(), "md", 0.2, 400).value > 1e-3


def test_state_dependent_honesty():
    p = np.array([0.5, 0.5])
    plan = BeliefPlan([[0.75, 0.25], [0.25, 0.75]], [0.5, 0.5], [0.0, 0.0])
    rep = dg.check_honesty_state_dependent(trilemma_payoff, p, plan)
    assert rep.honest and not rep.cheap_talk_feasible
    inv = lambda mu: 1 / mu[1]  # noqa: E731
    assert dg.conditional_expectation(inv, p, plan, 0) == pytest.approx(10 / 3, abs=1e-12)
    assert dg.conditional_expectation(inv, p, plan, 1) == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(rep.residuals, [[0, 0], [4 / 3, 0]], atol=1e-12)


def test_oracle_rotated_s_constants():
    assert ROTATED_S_DELTA == rotated_s().params["delta"]
    assert rotated_s_value(0.75) * 409 == pytest.approx(12)
    assert rotated_s_value(1.0) * 409 == pytest.approx(-9)
