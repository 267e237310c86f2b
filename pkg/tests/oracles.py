"""Independent reference computations (scipy / closed forms) for the tests."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

ROTATED_S_DELTA = 209 / 409


def md_outcome_value(U: np.ndarray, u: np.ndarray, p: np.ndarray) -> float:
    """Best communication-equilibrium payoff via HiGHS."""
    n, m = U.shape
    A_eq, b_eq = [], []
    for w in range(n):
        r = np.zeros(n * m)
        r[w * m:(w + 1) * m] = 1
        A_eq.append(r)
        b_eq.append(p[w])
    support = [w for w in range(n) if p[w] > 0]
    for w in support[1:]:
        r = np.zeros(n * m)
        r[support[0] * m:(support[0] + 1) * m] = -u / p[support[0]]
        r[w * m:(w + 1) * m] += u / p[w]
        A_eq.append(r)
        b_eq.append(0.0)
    A_ub = []
    for a in range(m):
        for b in range(m):
            if a != b:
                r = np.zeros(n * m)
                r[np.arange(n) * m + a] = -(U[:, a] - U[:, b])
                A_ub.append(r)
    res = linprog(-np.tile(u, n), A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.zeros(len(A_ub)) if A_ub else None,
                  A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


def lp_value(c, A, sense, b, bounds, maximize=False):
    """Optimal value / status string via HiGHS for a row-sense LP."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, s, v in zip(A, sense, b):
        if s == "=":
            A_eq.append(row)
            b_eq.append(v)
        elif s == "<=":
            A_ub.append(row)
            b_ub.append(v)
        else:
            A_ub.append(-row)
            b_ub.append(-v)
    res = linprog(-c if maximize else c,
                  A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return "infeasible", None
    if res.status == 3:
        return "unbounded", None
    assert res.status == 0, res.message
    return "optimal", (-res.fun if maximize else res.fun)


def think_tank_ct(p) -> float:
    """Sender-best cheap-talk value for the c=2, v=(0,1,2,3) think tank."""
    p1, _, p3 = p
    if p3 >= 2 / 3:
        return 3.0
    if p1 > 1 / 3:
        return 1.0
    return 2.0


def think_tank_region(p) -> str | None:
    """Expected value ordering away from region boundaries (margin 0.02)."""
    p1, p2, p3 = p
    if p3 >= 2 / 3 + 0.02:
        return "ALL_EQUAL"
    if max(p) > 2 / 3 - 0.02:
        return None
    if p1 < 1 / 3 - 0.02:
        return "BP_GT_MD_EQ_CT"
    if p1 > 1 / 3 + 0.02:
        return "BP_GT_MD_GT_CT"
    return None


def rotated_s_value(x):
    d = ROTATED_S_DELTA
    x = np.asarray(x, dtype=float)
    return (1 - d) * (3 * x**2 - 2 * x**3) - d * x


def rotated_s_bp(x: float) -> float:
    return (4 * x / 3) * rotated_s_value(0.75)
