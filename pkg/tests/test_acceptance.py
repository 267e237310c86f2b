"""The twelve acceptance criteria; each test prints one PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

import conftest
from medsolve import diagnose as dg
from medsolve import moment as mo
from medsolve.battery import random_ce_outcome, random_games, rng, seed_from_env
from medsolve.families import mean_variance, polynomial, quadratic, rotated_s, salesman, sine, think_tank
from medsolve.model import BeliefPlan, FiniteGame, outcome_to_plan, plan_to_outcome, value_bounds
from medsolve.papercases import trilemma_payoff
from medsolve.solve import dual_probe, solve, solve_bp, solve_ct_max, solve_md_belief_grid, solve_md_outcome
from oracles import md_outcome_value, rotated_s_bp, think_tank_ct, think_tank_region

BATTERY_SIZE = 50


def record(k: int, ok: bool, detail: str) -> None:
    conftest.ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def battery():
    return random_games(BATTERY_SIZE, seed_from_env())


@pytest.fixture(scope="module")
def battery_values(battery):
    """BP, MD (outcome LP), scipy MD, CT_MAX and V_hi(p) for every battery game."""
    rows = []
    for g in battery:
        p = g.prior
        ct = solve_ct_max(g, p)
        rows.append({
            "bp": solve_bp(g, 1, p).value,
            "md": solve_md_outcome(g, p).value,
            "md_scipy": md_outcome_value(g.receiver_utility, g.sender_utility, p),
            "ct": ct.value,
            "ct_plan": ct.plan,
            "vhi": float(value_bounds(g, p[None, :])[1][0]),
        })
    return rows


def test_criterion_01_grid_matches_outcome_lp(battery, battery_values):
    t0 = time.perf_counter()
    worst, above = 0.0, 0.0
    for g, row in zip(battery, battery_values):
        grid = solve_md_belief_grid(g, 64, g.prior).value
        worst = max(worst, abs(grid - row["md"]))
        above = max(above, grid - row["md"])
    elapsed = time.perf_counter() - t0
    oracle = max(abs(r["md"] - r["md_scipy"]) for r in battery_values)
    ok = worst <= 1e-3 and above <= 1e-7 and elapsed < 60 and oracle <= 1e-7
    record(1, ok, f"max |grid-LP|={worst:.2e}, max excess={above:.2e}, "
                  f"LP vs HiGHS={oracle:.1e}, {elapsed:.1f}s")


def test_criterion_02_outcome_round_trip():
    gen = rng(seed_from_env() + 1)
    worst_res, worst_pay = 0.0, 0.0
    passed = 0
    for _ in range(100):
        g = random_games(1, int(gen.integers(2**31)))[0]
        pi = random_ce_outcome(g, gen)
        plan = outcome_to_plan(g, pi)
        rep = dg.check_implementable(g, g.prior, plan)
        res = max(np.max(np.abs(rep.consistency_residual)), np.max(np.abs(rep.covariance_residual)))
        worst_res = max(worst_res, res)
        back = plan_to_outcome(g, plan)
        worst_pay = max(worst_pay, abs(back.sender_payoff(g) - pi.sender_payoff(g)))
        passed += rep.verdict["MD"] and res <= 1e-8
    ok = passed == 100 and worst_pay <= 1e-9
    record(2, ok, f"{passed}/100 MD-implementable, max residual={worst_res:.1e}, payoff error={worst_pay:.1e}")


def test_criterion_03_ordering_and_trichotomy(battery_values):
    bad_order, bad_label = 0, 0
    counts = {}
    for r in battery_values:
        if not (r["bp"] >= r["md"] - 1e-7 and r["md"] >= r["ct"] - 1e-7 and r["ct"] >= r["vhi"] - 1e-7):
            bad_order += 1
        if r["bp"] - r["md"] <= 1e-6 and r["md"] - r["ct"] > 1e-6:
            bad_label += 1
        else:
            lab = dg.label_values(r["bp"], r["md"], r["ct"])
            counts[lab] = counts.get(lab, 0) + 1
    record(3, bad_order == 0 and bad_label == 0,
           f"order violations={bad_order}, BP=MD>CT instances={bad_label}, labels={counts}")


def test_criterion_04_support_bounds(battery, battery_values):
    md_over, ct_over = 0, 0
    for g, r in zip(battery, battery_values):
        for plan in (solve_md_belief_grid(g, 16, g.prior).plan, outcome_to_plan(g, solve_md_outcome(g).outcome)):
            md_over += len(plan.merged()) > 2 * g.n - 1
        ct_over += len(r["ct_plan"]) > g.n
    record(4, md_over == 0 and ct_over == 0, f"MD plans over 2n-1 atoms={md_over}, CT plans over n atoms={ct_over}")


def _think_tank_priors(count: int) -> list[np.ndarray]:
    gen = np.random.default_rng(11)
    out = []
    want = {"ALL_EQUAL": count // 3, "BP_GT_MD_EQ_CT": count // 3}
    want["BP_GT_MD_GT_CT"] = count - sum(want.values())
    while sum(want.values()):
        p = np.round(gen.dirichlet(np.ones(3)), 4)
        p[2] = 1 - p[0] - p[1]
        if p.min() <= 0:
            continue
        reg = think_tank_region(p)
        if reg is not None and want[reg] > 0:
            want[reg] -= 1
            out.append(p)
    return out


def test_criterion_05_think_tank():
    g = think_tank()
    t0 = time.perf_counter()
    ct_bad, label_bad = 0, 0
    for p in _think_tank_priors(20):
        ct_bad += solve(g, "ct-max", p).value != think_tank_ct(p)
        label_bad += dg.classify_trichotomy(g, p).label != think_tank_region(p)
    elapsed = time.perf_counter() - t0
    record(5, ct_bad == 0 and label_bad == 0 and elapsed < 30,
           f"CT mismatches={ct_bad}/20, label mismatches={label_bad}/20, {elapsed:.1f}s")


def test_criterion_06_rotated_s():
    g = rotated_s()
    priors = np.round(np.arange(0.05, 0.5001, 0.05), 10)
    ct_err = max(abs(solve(g, "ct-max", p, 800).value) for p in priors)
    bp_err = max(abs(solve(g, "bp", p, 800).value - rotated_s_bp(p)) for p in priors)
    p = np.array([0.7, 0.3])
    cert = dg.construct_improving_plan(g, p, 0.0, ([0.0, 1.0], 9 / 14), 800)
    gain_err = abs(cert.value_gain - cert.closed_form_gain)
    md_ok = dg.check_implementable(g, p, cert.mixed_plan).verdict["MD"]
    med = dg.receiver_value(g, cert.mixed_plan)
    cheap = dg.receiver_value(g, solve(g, "ct-max", p, 800).plan)
    ok = ct_err <= 1e-6 and bp_err <= 1e-4 and gain_err <= 1e-8 and cert.value_gain > 0 and md_ok and med > cheap
    record(6, ok, f"max |CT|={ct_err:.1e}, max BP error={bp_err:.1e}, gain={cert.value_gain:.8f} "
                  f"(closed form error {gain_err:.1e}), receiver {med:.6f} > {cheap:.6f}")


def test_criterion_07_quadratic_dual():
    g = quadratic()
    md = solve(g, "md", 0.5, 800).value
    gs = (-10, -100, -1000)
    vals = [dual_probe(g, [0.0, x], 0.5, 800).cav_value for x in gs]
    errs = [abs(v - (0.25 - 1 / (2 * x))) for v, x in zip(vals, gs)]
    decreasing = all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] >= md - 1e-9
    ok = abs(md - 0.25) <= 1e-6 and max(errs) <= 2e-3 and decreasing
    record(7, ok, f"MD(1/2)={md:.9f}, probes={[round(v, 6) for v in vals]}, max error={max(errs):.1e}")


def test_criterion_08_improvability_forward(battery, battery_values):
    hits, bad = 0, []
    for i, (g, r) in enumerate(zip(battery, battery_values)):
        w = dg.is_improvable(g, g.prior, r["ct"], None, local=True)
        if not w.improvable:
            continue
        hits += 1
        try:
            cert = dg.construct_improving_plan(g, g.prior, r["ct"], w, None)
        except Exception as exc:  # construction must not fail
            bad.append((i, repr(exc)))
            continue
        md_ok = dg.check_implementable(g, g.prior, cert.mixed_plan).verdict["MD"]
        if not (md_ok and cert.value_gain > 1e-9 and r["ct"] + cert.value_gain <= r["md"] + 1e-7):
            bad.append((i, cert.value_gain))
    record(8, not bad and hits > 0, f"locally improvable={hits}, failed constructions={bad}")


def test_criterion_09_improvability_converse(battery, battery_values):
    checked, bad = 0, []
    for i, (g, r) in enumerate(zip(battery, battery_values)):
        if dg.is_improvable(g, g.prior, r["ct"], None, local=False).improvable:
            continue
        checked += 1
        if abs(r["md"] - r["ct"]) > 1e-6:
            bad.append((i, r["md"] - r["ct"]))
    record(9, not bad and checked > 0, f"not improvable={checked}, with MD != CT: {bad}")


def test_criterion_10_binary_classifiers():
    notes, ok = [], True
    priors = np.linspace(0.08, 0.92, 10)
    # monotone V: MD = CT = V(p), no disclosure optimal
    mono = polynomial([0.0, 1.0, 0.5])
    gap = max(max(abs(solve(mono, "md", p, 400).value - solve(mono, "ct-max", p, 400).value),
                  abs(solve(mono, "md", p, 400).value - solve(mono, "nd", p).value)) for p in priors)
    ok &= gap <= 1e-6
    notes.append(f"monotone gap={gap:.1e}")
    # concave V
    conc = polynomial([0.0, 1.0, -1.0])
    gap = max(abs(solve(conc, "md", p, 400).value - solve(conc, "ct-max", p, 400).value) for p in priors)
    ok &= gap <= 1e-6
    notes.append(f"concave gap={gap:.1e}")
    # quasiconvex V = (mu - 0.4)^2
    qc = polynomial([0.16, -0.8, 1.0])
    gap = max(abs(solve(qc, "md", p, 800).value - solve(qc, "ct-max", p, 800).value) for p in priors)
    ok &= gap <= 1e-6
    notes.append(f"quasiconvex gap={gap:.1e}")
    # sine: cheap talk is full disclosure with value 0, mediation does better
    s = sine()
    ct = solve(s, "ct-max", 0.2, 800)
    full = float(np.asarray([0.8, 0.2]) @ s.values(np.eye(2)))
    md = solve(s, "md", 0.2, 800).value
    ok &= abs(ct.value) <= 1e-9 and abs(full) <= 1e-9 and md > 1e-6
    notes.append(f"sine CT={ct.value:.1e}, MD={md:.6f}")
    record(10, ok, ", ".join(notes))


def test_criterion_11_moment():
    mv = mean_variance(4.0)
    lam = mo.tilde_lambdas(mv)
    exact = lam.tolist() == [0.5, 0.75]
    V = mo.build_tilde_simplex(mv)
    barys = [(1 / 3, 1 / 3, 1 / 3), (0.5, 0.25, 0.25), (0.25, 0.5, 0.25), (0.25, 0.25, 0.5), (0.2, 0.4, 0.4)]
    margins = []
    case2 = 0
    for bary in barys:
        d = mo.quasiconvex_dichotomy(mv, np.asarray(bary) @ V, 80)
        case2 += d.case == mo.CASE2 and d.strict_chain
        margins.append(min(d.margins.values()))
    rho_first = (0.02, 0.05, 0.1)
    lams = np.array([mo.tilde_lambdas(salesman([0.5, 0.5], (r, 0.2))) for r in rho_first])
    d = np.diff(lams, axis=0)
    monotone = bool(np.all(d >= -1e-12) and np.all(d[:, 1:] > 0))
    ok = exact and case2 == 5 and min(margins) > 1e-4 and monotone
    record(11, ok, f"lambda={lam.tolist()}, CASE2 strict={case2}/5, min margin={min(margins):.2e}, "
                   f"salesman lambdas monotone={monotone}")


def test_criterion_12_state_dependent_honesty():
    p = np.array([0.5, 0.5])
    plan = BeliefPlan([[0.75, 0.25], [0.25, 0.75]], [0.5, 0.5], [0.0, 0.0])
    rep = dg.check_honesty_state_dependent(trilemma_payoff, p, plan)
    inv = lambda mu: 1 / mu[1]  # noqa: E731
    m0 = dg.conditional_expectation(inv, p, plan, 0)
    m1 = dg.conditional_expectation(inv, p, plan, 1)
    ok = rep.honest and not rep.cheap_talk_feasible and abs(m0 - 10 / 3) <= 1e-9 and abs(m1 - 2) <= 1e-9
    record(12, ok, f"honest={rep.honest}, cheap talk feasible={rep.cheap_talk_feasible}, "
                   f"conditional means=({m0:.12f}, {m1:.12f})")
