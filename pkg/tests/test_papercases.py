from __future__ import annotations

import pytest

from medsolve import papercases
from medsolve.errors import UnknownFixture

EXPECTED = {
    "mean-variance-g4", "quadratic-dual", "rotated-s", "salesman-2x2",
    "sine-informativeness", "think-tank-c2", "trilemma-state-dependent",
}


def test_registry():
    assert set(papercases.fixture_names()) == EXPECTED


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_fixture_passes(name):
    rep = papercases.run_fixture(name)
    failed = [r.to_dict() for r in rep.results if not r.passed]
    assert rep.passed, failed
    assert rep.results
    assert all(r.basis in ("closed-form", "trivial", "frozen-oracle") for r in rep.results)


def test_unknown_fixture():
    with pytest.raises(UnknownFixture):
        papercases.run_fixture("no-such-fixture")


def test_failing_check_is_reported(monkeypatch):
    spec = papercases.load_fixture("quadratic-dual")
    spec["expected"][0]["expect"] = 0.3
    monkeypatch.setattr(papercases, "load_fixture", lambda name: spec)
    rep = papercases.run_fixture("quadratic-dual")
    assert not rep.passed
    assert not rep.results[0].passed
