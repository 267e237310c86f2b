from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from medsolve.battery import random_game
from medsolve.errors import InvalidInput
from medsolve.families import quadratic, rotated_s, think_tank
from medsolve.model import value_bounds
from medsolve.solve import dual_probe, solve, solve_md_outcome
from oracles import md_outcome_value, rotated_s_bp, think_tank_ct

TT_GREEN = [
    ((0.5, 0.25, 0.25), 24 / 17),
    ((0.4, 0.3, 0.3), 22 / 13),
    ((0.6, 0.2, 0.2), 36 / 29),
    ((0.45, 0.5, 0.05), 1.25),
    ((0.38, 0.02, 0.6), 20 / 17),
]


@pytest.mark.parametrize("p,expected", TT_GREEN)
def test_think_tank_md_values(p, expected):
    g = think_tank()
    v = solve(g, "md", p).value
    assert v == pytest.approx(expected, abs=1e-9)
    assert v == pytest.approx(md_outcome_value(g.receiver_utility, g.sender_utility, np.array(p)), abs=1e-9)
    assert v > think_tank_ct(p) + 1e-6


def test_think_tank_md_rational_agrees():
    g = think_tank()
    v = solve(g, "md", (0.5, 0.25, 0.25), exact_lp=True).value
    assert float(v) == pytest.approx(24 / 17, abs=1e-12)


@pytest.mark.parametrize("p", [(0.2, 0.4, 0.4), (0.5, 0.25, 0.25), (0.1, 0.1, 0.8), (0.3, 0.5, 0.2)])
def test_think_tank_ct_closed_form(p):
    assert solve(think_tank(), "ct-max", p).value == pytest.approx(think_tank_ct(p), abs=1e-9)


def test_rotated_s_values():
    g = rotated_s()
    for p in (0.1, 0.3, 0.5):
        assert solve(g, "ct-max", p).value == pytest.approx(0.0, abs=1e-6)
        assert solve(g, "bp", p, 800).value == pytest.approx(rotated_s_bp(p), abs=1e-4)
        md = solve(g, "md", p, 200).value
        assert md > 1e-6


def test_quadratic_md_and_dual():
    g = quadratic()
    assert solve(g, "md", 0.5, 800).value == pytest.approx(0.25, abs=1e-6)
    assert solve(g, "nd", 0.5).value == pytest.approx(0.25, abs=1e-12)
    vals = [dual_probe(g, [0.0, gg], 0.5, 800).cav_value for gg in (-10, -100, -1000)]
    for gg, v in zip((-10, -100, -1000), vals):
        assert v == pytest.approx(0.25 - 1 / (2 * gg), abs=2e-3)
    assert vals[0] > vals[1] > vals[2] >= 0.25 - 1e-9


def test_unknown_protocol():
    with pytest.raises(InvalidInput):
        solve(think_tank(), "xx")
    with pytest.raises(InvalidInput):
        solve(think_tank(), "md", method="bogus")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_protocol_ordering_and_oracle(seed):
    game = random_game(np.random.default_rng(seed))
    p = game.prior
    bp = solve(game, "bp", p, 1).value
    md = solve(game, "md", p).value
    ct = solve(game, "ct-max", p).value
    nd_hi = value_bounds(game, p[None, :])[1][0]
    assert bp >= md - 1e-7 >= ct - 2e-7
    assert ct >= nd_hi - 1e-7
    assert md == pytest.approx(md_outcome_value(game.receiver_utility, game.sender_utility, p), abs=1e-7)
    grid = solve(game, "md", p, 16, method="grid").value
    assert grid <= md + 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_support_bounds(seed):
    game = random_game(np.random.default_rng(seed))
    md = solve_md_outcome(game)
    assert len(md.plan.merged()) <= 2 * game.n - 1
    ct = solve(game, "ct-max")
    assert len(ct.plan) <= game.n
