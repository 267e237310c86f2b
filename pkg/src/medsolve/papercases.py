"""Frozen worked examples with expected outcomes, used as a regression suite.

Each fixture is a JSON file under ``data/fixtures``: a game description (same
schema as game files) plus an ``expected`` list.  Every expectation names a
check, its inputs, the expected outcome, a tolerance and a ``basis`` tag
(``closed-form``, ``trivial`` or ``frozen-oracle``) saying where the expected
value comes from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable

import numpy as np

from . import diagnose, moment
from .errors import InvalidInput, UnknownFixture
from .families import game_from_dict
from .model import BeliefPlan, Game, as_belief
from .solve import dual_probe, solve

FIXTURE_PACKAGE = "medsolve.data.fixtures"


@dataclass
class CheckResult:
    check: str
    passed: bool
    observed: Any
    expected: Any
    basis: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "passed": self.passed,
            "observed": _plain(self.observed),
            "expected": _plain(self.expected),
            "basis": self.basis,
            "note": self.note,
        }


@dataclass
class FixtureReport:
    name: str
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": [r.to_dict() for r in self.results]}


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _compare(obs: float, exp: float, how: str, tol: float) -> bool:
    if how == "eq":
        return abs(obs - exp) <= tol
    if how == "gt":
        return obs > exp + tol
    if how == "ge":
        return obs >= exp - tol
    if how == "lt":
        return obs < exp - tol
    raise InvalidInput(f"unknown comparison {how!r}")


# ------------------------------------------------------------ state-dependent payoffs


def _trilemma_g(mu: float) -> float:
    if mu < 0.25:
        return 4 * mu
    if mu < 0.5:
        return -2 * mu + 1.5
    if mu < 0.75:
        return 2 * mu - 0.5
    return -4 * mu + 4


def trilemma_payoff(belief: np.ndarray, state: int) -> float:
    """``G(mu) - state / mu`` with ``mu`` the probability of state 1 and ``G`` a tent pair."""
    mu = float(belief[1])
    return _trilemma_g(mu) - state / mu


STATE_PAYOFFS: dict[str, Callable[[np.ndarray, int], float]] = {"trilemma": trilemma_payoff}


# ------------------------------------------------------------ checks


def _prior_of(game: Game, spec) -> np.ndarray:
    return as_belief(spec, game.n)


def _plan_of(spec: dict) -> BeliefPlan:
    return BeliefPlan.from_dict(spec)


def check_value(game, e):
    res = solve(game, e["protocol"], e["prior"], e.get("grid"), e.get("method"))
    return _compare(res.value, e["expect"], e.get("compare", "eq"), e.get("tol", 1e-9)), res.value


def check_values(game, e):
    """One protocol at a list of priors, all against the same comparison."""
    obs = []
    ok = True
    for p in e["priors"]:
        v = solve(game, e["protocol"], p, e.get("grid")).value
        exp = e["expect"] if "expect" in e else _formula(e["formula"], p)
        obs.append(v)
        ok &= _compare(v, exp, e.get("compare", "eq"), e.get("tol", 1e-9))
    return ok, obs


def _formula(name: str, p) -> float:
    x = float(np.atleast_1d(p)[-1])
    if name == "rotated-s-bp":
        return (4 * x / 3) * (12 / 409)
    raise InvalidInput(f"unknown formula {name!r}")


def check_trichotomy(game, e):
    out = {}
    ok = True
    for p, label in zip(e["priors"], e["labels"]):
        got = diagnose.classify_trichotomy(game, p, e.get("grid")).label
        out[str(p)] = got
        ok &= got == label
    return ok, out


def check_dual_probe(game, e):
    vals = [dual_probe(game, [0.0, g], e["prior"], e.get("grid")).cav_value for g in e["g"]]
    ok = all(abs(v - x) <= e.get("tol", 2e-3) for v, x in zip(vals, e["expect"]))
    if e.get("decreasing"):
        ok &= all(a > b for a, b in zip(vals, vals[1:]))
    return ok, vals


def check_implementable(game, e):
    rep = diagnose.check_implementable(game, e["prior"], _plan_of(e["plan"]))
    ok = all(rep.verdict[k] == v for k, v in e["expect"].items())
    return ok, rep.verdict


def check_improvement(game, e):
    p = _prior_of(game, e["prior"])
    w = e.get("witness")
    if w is None:
        w = diagnose.is_improvable(game, p, e["level"], e.get("grid"), local=True)
    else:
        w = (w["mu"], w["lambda"])
    cert = diagnose.construct_improving_plan(game, p, e["level"], w, e.get("grid"))
    md_ok = diagnose.check_implementable(game, p, cert.mixed_plan).verdict["MD"]
    ok = md_ok and cert.value_gain > 1e-9 and abs(cert.value_gain - cert.closed_form_gain) <= 1e-8
    if "expect" in e:
        ok &= abs(cert.value_gain - e["expect"]) <= e.get("tol", 1e-8)
    return ok, {"value_gain": cert.value_gain, "closed_form_gain": cert.closed_form_gain, "md": md_ok}


def check_receiver_welfare(game, e):
    p = _prior_of(game, e["prior"])
    w = e["witness"]
    cert = diagnose.construct_improving_plan(game, p, e["level"], (w["mu"], w["lambda"]), e.get("grid"))
    ct = solve(game, "ct-max", p, e.get("grid")).plan
    med, cheap = diagnose.receiver_value(game, cert.mixed_plan), diagnose.receiver_value(game, ct)
    return med > cheap, {"mediation": med, "cheap_talk": cheap}


def check_full_disclosure(game, e):
    got = diagnose.full_disclosure_optimal(game, e["prior"], e.get("grid"))
    return got == e["expect"], got


def check_mono_crossing(game, e):
    got = diagnose.mono_crossing(game, e["level"])
    return got == e["expect"], got


def check_mean_classifier(game, e):
    got = moment.one_dim_mean_classifier(game, e["prior"]).label
    return got == e["expect"], got


def check_tilde_lambdas(game, e):
    got = moment.tilde_lambdas(game)
    return bool(np.max(np.abs(got - np.asarray(e["expect"]))) <= e.get("tol", 1e-12)), got


def check_dichotomy(game, e):
    V = moment.build_tilde_simplex(game)
    p = np.asarray(e["barycentric"], dtype=float) @ V
    d = moment.quasiconvex_dichotomy(game, p, e.get("grid", 80))
    ok = d.case == e["expect"]
    if d.case == moment.CASE2:
        ok &= min(d.margins.values()) > e.get("margin", 1e-4)
    return ok, d.to_dict()


def check_honesty(game, e):
    payoff = STATE_PAYOFFS[e["payoff"]]
    p = np.asarray(e["prior"], dtype=float)
    plan = _plan_of(e["plan"])
    rep = diagnose.check_honesty_state_dependent(payoff, p, plan)
    inv = lambda mu: 1.0 / mu[1]  # noqa: E731
    means = [diagnose.conditional_expectation(inv, p, plan, w) for w in range(p.size)]
    ok = rep.honest == e["honest"] and rep.cheap_talk_feasible == e["cheap_talk_feasible"]
    if "conditional_means" in e:
        ok &= all(abs(a - b) <= e.get("tol", 1e-9) for a, b in zip(means, e["conditional_means"]))
    return ok, {"honest": rep.honest, "cheap_talk_feasible": rep.cheap_talk_feasible,
                "conditional_means": means, "residuals": rep.residuals}


CHECKS: dict[str, Callable[[Game, dict], tuple[bool, Any]]] = {
    "value": check_value,
    "values": check_values,
    "trichotomy": check_trichotomy,
    "dual_probe": check_dual_probe,
    "implementable": check_implementable,
    "improvement": check_improvement,
    "receiver_welfare": check_receiver_welfare,
    "full_disclosure_optimal": check_full_disclosure,
    "mono_crossing": check_mono_crossing,
    "mean_classifier": check_mean_classifier,
    "tilde_lambdas": check_tilde_lambdas,
    "dichotomy": check_dichotomy,
    "honesty": check_honesty,
}


# ------------------------------------------------------------ registry


def fixture_names() -> list[str]:
    root = resources.files(FIXTURE_PACKAGE)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> dict:
    if name not in fixture_names():
        raise UnknownFixture(f"unknown fixture {name!r}; known: {fixture_names()}")
    text = resources.files(FIXTURE_PACKAGE).joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def run_fixture(name: str) -> FixtureReport:
    """Run every expectation of a fixture; failures carry the fixture's note."""
    spec = load_fixture(name)
    game = game_from_dict(spec["game"]) if "game" in spec else None
    report = FixtureReport(name)
    for e in spec["expected"]:
        fn = CHECKS.get(e["check"])
        if fn is None:
            raise InvalidInput(f"fixture {name!r} uses unknown check {e['check']!r}")
        try:
            ok, obs = fn(game, e)
            note = "" if ok else e.get("note", "")
        except Exception as exc:  # a failing check must not hide the others
            ok, obs, note = False, None, f"{type(exc).__name__}: {exc}"
        expected = e.get("expect", e.get("labels", e.get("honest")))
        report.results.append(CheckResult(e.get("id", e["check"]), bool(ok), obs, expected,
                                          e.get("basis", ""), note))
    return report


def run_all() -> list[FixtureReport]:
    return [run_fixture(n) for n in fixture_names()]
