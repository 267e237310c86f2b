"""Dense two-phase primal simplex with Bland's rule.

Float mode works on ``float64`` numpy tableaus after row equilibration.
Rational mode runs the same pivoting code on object arrays of
:class:`fractions.Fraction`; doubles are converted as exact dyadic
rationals, so the result is the exact optimum of the given data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NumericalBreakdown

INF = math.inf

# float-mode tolerances, stated against the equilibrated data
_COST_TOL = 1e-9
_PIVOT_TOL = 1e-11
_BREAKDOWN_TOL = 1e-13
_FEAS_TOL = 1e-9


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``optimize c.x`` subject to row constraints and variable bounds.

    ``constraint_sense`` entries are ``"="``, ``"<="`` or ``">="``.
    ``variable_bounds`` defaults to ``[0, inf)`` for every variable; use
    ``-math.inf`` / ``math.inf`` (or ``None``) for missing bounds.
    """

    objective: Any
    constraint_matrix: Any
    constraint_sense: Sequence[str]
    rhs: Any
    variable_bounds: Sequence[tuple[Any, Any]] | None = None
    maximize: bool = False


@dataclass(eq=False)
class LpSolution:
    status: Status
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None
    value: Any = None
    basis_size: int = 0
    # y with y.A <= 0 on every admissible column and y.b > 0 (original rows)
    farkas: np.ndarray | None = None
    duality_gap: float = 0.0
    slackness_residual: float = 0.0
    iterations: int = 0
    basis: tuple[int, ...] = field(default_factory=tuple)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def _is_inf(x) -> bool:
    return x is None or (isinstance(x, float) and math.isinf(x))


class _Problem:
    """Standard form ``min c.x, A x = b, x >= 0`` built from a LinearProgram."""

    def __init__(self, lp: LinearProgram, exact: bool):
        self.exact = exact
        conv = _frac if exact else float
        c = [conv(v) for v in np.ravel(np.asarray(lp.objective, dtype=object))]
        nvar = len(c)
        raw_a = np.asarray(lp.constraint_matrix, dtype=object)
        if raw_a.size == 0:
            raw_a = np.zeros((len(lp.rhs), nvar), dtype=object)
        if raw_a.ndim != 2 or raw_a.shape[1] != nvar:
            raise DimensionMismatch(f"constraint matrix shape {raw_a.shape} does not match {nvar} variables")
        nrow = raw_a.shape[0]
        rhs = list(np.ravel(np.asarray(lp.rhs, dtype=object)))
        if len(rhs) != nrow or len(lp.constraint_sense) != nrow:
            raise DimensionMismatch("rhs / sense length does not match the constraint rows")
        for v in rhs:
            if not math.isfinite(float(v)):
                raise DimensionMismatch("rhs entries must be finite")
        for s in lp.constraint_sense:
            if s not in ("=", "<=", ">="):
                raise DimensionMismatch(f"unknown constraint sense {s!r}")
        bounds = list(lp.variable_bounds) if lp.variable_bounds is not None else [(0, INF)] * nvar
        if len(bounds) != nvar:
            raise DimensionMismatch("variable_bounds length does not match objective")

        dt = object if exact else float
        A = np.array([[conv(v) for v in row] for row in raw_a], dtype=dt).reshape(nrow, nvar)
        b = np.array([conv(v) for v in rhs], dtype=dt)
        if not exact and not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise InvalidInput("objective and constraint entries must be finite")
        self.sign = -1 if lp.maximize else 1
        self.c_orig = np.array(c, dtype=dt)
        self.A_orig = A
        self.b_orig = b
        self.nvar = nvar
        self.nrow = nrow

        # column substitution x_j = offset_j + sum coef * x_std
        cols, costs, self.mapping = [], [], []
        offset = [conv(0)] * nvar
        extra_rows = []  # (std column, upper bound) for x' <= u - l
        for j, (lo, hi) in enumerate(bounds):
            lo_inf = _is_inf(lo) and (lo is None or lo < 0)
            hi_inf = _is_inf(hi) and (hi is None or hi > 0)
            cj = self.sign * c[j]
            if not lo_inf:
                lo = conv(lo)
                offset[j] = lo
                self.mapping.append((j, len(cols), 1))
                cols.append(A[:, j])
                costs.append(cj)
                if not hi_inf:
                    extra_rows.append((len(cols) - 1, conv(hi) - lo))
            elif not hi_inf:
                offset[j] = conv(hi)
                self.mapping.append((j, len(cols), -1))
                cols.append(-A[:, j])
                costs.append(-cj)
            else:
                self.mapping.append((j, len(cols), 1))
                cols.append(A[:, j])
                costs.append(cj)
                self.mapping.append((j, len(cols), -1))
                cols.append(-A[:, j])
                costs.append(-cj)
        self.offset = np.array(offset, dtype=dt)
        nstd = len(cols)
        m = nrow + len(extra_rows)
        S = np.zeros((m, nstd), dtype=dt) if exact else np.zeros((m, nstd))
        if exact:
            S[:] = Fraction(0)
        for k, col in enumerate(cols):
            S[:nrow, k] = col
        senses = list(lp.constraint_sense)
        bs = np.empty(m, dtype=dt)
        bs[:nrow] = b - A @ self.offset if nvar else b
        for r, (k, ub) in enumerate(extra_rows):
            S[nrow + r, k] = conv(1)
            bs[nrow + r] = ub
            senses.append("<=")

        # row equilibration (float only), then slacks, then sign flips
        scale = np.ones(m, dtype=dt) if not exact else np.array([Fraction(1)] * m, dtype=object)
        if not exact and m:
            mx = np.abs(S).max(axis=1) if nstd else np.zeros(m)
            nz = mx > 0
            scale[nz] = 1.0 / mx[nz]
            S = S * scale[:, None]
            bs = bs * scale
        nslack = sum(1 for s in senses if s != "=")
        full = np.zeros((m, nstd + nslack), dtype=dt) if not exact else np.array(
            [[Fraction(0)] * (nstd + nslack) for _ in range(m)], dtype=object).reshape(m, nstd + nslack)
        full[:, :nstd] = S
        slack_of_row = [-1] * m
        k = nstd
        for i, s in enumerate(senses):
            if s == "<=":
                full[i, k] = conv(1)
            elif s == ">=":
                full[i, k] = conv(-1)
            else:
                continue
            slack_of_row[i] = k
            k += 1
        flip = np.array([-1 if bs[i] < 0 else 1 for i in range(m)])
        for i in range(m):
            if flip[i] < 0:
                full[i] = -full[i]
                bs[i] = -bs[i]
        self.row_factor = scale * flip  # std row i = row_factor_i * original row i
        self.A = full
        self.b = bs
        self.c = np.concatenate([np.array(costs, dtype=dt), np.array([conv(0)] * nslack, dtype=dt)])
        self.m = m
        self.n = nstd + nslack
        self.nstd = nstd
        self.slack_of_row = slack_of_row

    def recover(self, xstd: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        for j, k, s in self.mapping:
            x[j] = x[j] + s * xstd[k]
        return x


def _zero(exact: bool):
    return Fraction(0) if exact else 0.0


class _Tableau:
    def __init__(self, prob: _Problem, pricing: str):
        self.exact = prob.exact
        self.pricing = pricing
        m, n = prob.m, prob.n
        basis = []
        art_rows = []
        for i in range(m):
            k = prob.slack_of_row[i]
            if k >= 0 and prob.A[i, k] == 1:
                basis.append(k)
            else:
                basis.append(-1)
                art_rows.append(i)
        nart = len(art_rows)
        self.n = n
        self.ncol = n + nart
        dt = object if self.exact else float
        T = np.zeros((m + 1, self.ncol + 1), dtype=dt)
        if self.exact:
            T[:] = Fraction(0)
        T[:m, :n] = prob.A
        T[:m, -1] = prob.b
        for a, i in enumerate(art_rows):
            T[i, n + a] = Fraction(1) if self.exact else 1.0
            basis[i] = n + a
        self.T = T
        self.T0 = T.copy() if not self.exact else None
        self.m = m
        self.basis = basis
        self.init_cols = list(basis)  # identity columns of the starting basis
        self.iterations = 0
        self.max_iter = 50000 + 50 * (m + self.ncol)

    def set_costs(self, cost: np.ndarray) -> None:
        T = self.T
        self.cost = np.zeros(self.ncol + 1, dtype=object if self.exact else float)
        self.cost[: len(cost)] = cost
        T[-1, :] = _zero(self.exact)
        T[-1, : len(cost)] = cost
        for i, j in enumerate(self.basis):
            cj = T[-1, j]
            if cj != 0:
                T[-1, :] = T[-1, :] - cj * T[i, :]

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        if not self.exact and abs(piv) < _BREAKDOWN_TOL:
            raise NumericalBreakdown(f"pivot magnitude {abs(piv):.3e} below {_BREAKDOWN_TOL}")
        T[r, :] = T[r, :] / piv
        f = T[:, j].copy()
        f[r] = _zero(self.exact)
        T -= np.outer(f, T[r, :])
        if not self.exact:
            T[:, j] = 0.0
            T[r, j] = 1.0
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed: np.ndarray) -> Status:
        T, m = self.T, self.m
        tol_c = 0 if self.exact else _COST_TOL
        tol_p = 0 if self.exact else _PIVOT_TOL
        degenerate_run = 0
        while True:
            if self.iterations > self.max_iter:
                raise NumericalBreakdown("iteration limit reached (cycling suspected)")
            d = T[-1, : self.ncol]
            neg = np.flatnonzero(((d < -tol_c) & allowed).astype(bool))
            if neg.size == 0:
                return Status.OPTIMAL
            if self.pricing == "dantzig" and degenerate_run < 50:
                j = int(neg[np.argmin(np.asarray(d[neg], dtype=float))])
            else:
                j = int(neg[0])
            col = T[:m, j]
            pos = np.flatnonzero((col > tol_p).astype(bool))
            if pos.size == 0:
                return Status.UNBOUNDED
            ratios = T[pos, -1] / col[pos]
            if self.exact:
                best = min(ratios)
                ties = [int(pos[t]) for t in range(pos.size) if ratios[t] == best]
            else:
                ratios = np.maximum(ratios.astype(float), 0.0)
                best = ratios.min()
                tied = ratios <= best + 1e-12 * (1.0 + best)
                piv = np.abs(col[pos].astype(float))
                # among tied rows avoid pivots far smaller than the best available
                tied &= piv >= 1e-3 * piv[tied].max()
                ties = pos[tied].tolist()
            r = min(ties, key=lambda i: self.basis[i])
            degenerate_run = degenerate_run + 1 if best == 0 else 0
            self.pivot(r, j)
            if not self.exact and self.iterations % REINVERT_EVERY == 0:
                self.reinvert()

    def reinvert(self) -> None:
        """Rebuild the tableau rows from the original data and the current basis."""
        m = self.m
        B = self.T0[:m, self.basis]
        try:
            if np.linalg.cond(B) > 1e12:
                return
            rows = np.linalg.solve(B, self.T0[:m, :])
        except np.linalg.LinAlgError:
            return
        rows[np.abs(rows) < 1e-14] = 0.0
        rows[:, self.basis] = np.eye(m)
        self.T[:m] = rows
        # reduced costs from the stored cost vector
        self.T[-1] = self.cost
        for i, j in enumerate(self.basis):
            cj = self.T[-1, j]
            if cj != 0:
                self.T[-1] -= cj * self.T[i]

    def drop_row(self, r: int) -> None:
        self.T = np.delete(self.T, r, axis=0)
        if self.T0 is not None:
            self.T0 = np.delete(self.T0, r, axis=0)
        del self.basis[r]
        self.m -= 1


AUTO_BLAND_LIMIT = 2000
REINVERT_EVERY = 64


def solve_lp(lp: LinearProgram, mode: str = "float", pricing: str = "auto") -> LpSolution:
    """Solve ``lp`` with the two-phase simplex method.

    ``mode`` is ``"float"`` or ``"rational"``.  ``pricing="bland"`` picks the
    lowest-index improving column; ``"dantzig"`` picks the most negative
    reduced cost and hands over to Bland's rule after 50 consecutive
    degenerate pivots, which keeps termination guaranteed.  ``"auto"`` uses
    Bland up to ``AUTO_BLAND_LIMIT`` columns and the hybrid above it.
    """
    if mode not in ("float", "rational"):
        raise ValueError(f"unknown mode {mode!r}")
    if pricing not in ("bland", "dantzig", "auto"):
        raise ValueError(f"unknown pricing {pricing!r}")
    exact = mode == "rational"
    prob = _Problem(lp, exact)
    if pricing == "auto":
        pricing = "bland" if prob.n <= AUTO_BLAND_LIMIT else "dantzig"
    tab = _Tableau(prob, pricing)
    n = prob.n
    m0 = prob.m
    kept_rows = list(range(m0))
    if not exact:
        for r in reversed(_dependent_rows(prob)):
            tab.drop_row(r)
            del kept_rows[r]

    # phase 1
    c1 = np.array([_zero(exact)] * tab.ncol, dtype=object if exact else float)
    c1[n:] = Fraction(1) if exact else 1.0
    tab.set_costs(c1)
    allowed = np.ones(tab.ncol, dtype=bool)
    tab.run(allowed)
    infeas = -tab.T[-1, -1]
    bscale = max([1.0] + [abs(float(v)) for v in prob.b])
    if (exact and infeas > 0) or (not exact and infeas > _FEAS_TOL * bscale):
        y = _row_duals(tab, c1)
        farkas = np.zeros(m0, dtype=object if exact else float)
        if exact:
            farkas[:] = Fraction(0)
        farkas[:] = y
        farkas = farkas * prob.row_factor
        return LpSolution(Status.INFEASIBLE, farkas=farkas[: prob.nrow], iterations=tab.iterations)

    # drive artificials out of the basis; drop redundant rows
    r = 0
    while r < tab.m:
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            tol = 0 if exact else 1e-9
            cand = np.flatnonzero((abs(row) > tol).astype(bool))
            if cand.size:
                tab.pivot(r, int(cand[np.argmax(np.abs(np.asarray(row[cand], dtype=float)))]) if not exact
                          else int(cand[0]))
                r += 1
            else:
                tab.drop_row(r)
                del kept_rows[r]
        else:
            r += 1

    # phase 2
    allowed = np.zeros(tab.ncol, dtype=bool)
    allowed[:n] = True
    c2 = np.array([_zero(exact)] * tab.ncol, dtype=object if exact else float)
    c2[:n] = prob.c
    tab.set_costs(c2)
    status = tab.run(allowed)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=tab.iterations)

    xstd = np.array([_zero(exact)] * n, dtype=object if exact else float)
    for i, j in enumerate(tab.basis):
        xstd[j] = tab.T[i, -1]
    y_kept = _row_duals(tab, c2)
    if not exact:
        xstd, y_kept = _refine(prob, tab, kept_rows, xstd, y_kept)
    y = np.zeros(m0, dtype=object if exact else float)
    if exact:
        y[:] = Fraction(0)
    y[:] = y_kept
    x = prob.recover(xstd)
    value = sum((ci * xi for ci, xi in zip(prob.c_orig, x)), _zero(exact))
    dual = (y * prob.row_factor)[: prob.nrow] * prob.sign

    red = prob.c - prob.A.T @ y
    primal_obj = sum((a * b for a, b in zip(prob.c, xstd)), _zero(exact))
    dual_obj = sum((a * b for a, b in zip(prob.b, y)), _zero(exact))
    gap = abs(float(primal_obj - dual_obj))
    slack = max([0.0] + [abs(float(a * b)) for a, b in zip(xstd, red)])
    tol = 0 if exact else 1e-12
    positive = sum(1 for v in x if v > tol)
    return LpSolution(
        Status.OPTIMAL,
        primal=x,
        dual=dual,
        value=value,
        basis_size=positive,
        duality_gap=gap,
        slackness_residual=slack,
        iterations=tab.iterations,
        basis=tuple(sorted(j for j in tab.basis if j < prob.nstd)),
    )


def _dependent_rows(prob: _Problem, tol: float = 1e-9) -> list[int]:
    """Equality rows that are consistent linear combinations of earlier ones.

    Rows carrying a slack are always independent.  Dropping the others up
    front keeps phase 1 from ending on a numerically singular basis.
    """
    Q: list[np.ndarray] = []  # orthonormal rows spanning the kept [A | b]
    Qa: list[np.ndarray] = []  # same combinations restricted to A
    out = []
    for i in range(prob.m):
        if prob.slack_of_row[i] >= 0:
            continue
        a = np.asarray(prob.A[i], dtype=float)
        ab = np.append(a, float(prob.b[i]))
        ra, rab = a.copy(), ab.copy()
        for q, qa in zip(Q, Qa):
            coef = qa @ ra
            ra = ra - coef * qa
            rab = rab - coef * q
        na = np.linalg.norm(ra)
        if na <= tol * max(1.0, np.linalg.norm(a)):
            if abs(rab[-1]) <= tol * max(1.0, abs(ab[-1])):
                out.append(i)
            continue
        Qa.append(ra / na)
        Q.append(rab / na)
    return out


def _row_duals(tab: _Tableau, cost: np.ndarray) -> np.ndarray:
    """y = c_B B^-1, read from the columns of the starting identity basis."""
    cb = np.array([cost[j] for j in tab.basis], dtype=object if tab.exact else float)
    binv = tab.T[: tab.m, tab.init_cols]
    return cb @ binv if tab.m else np.array([_zero(tab.exact)] * len(tab.init_cols))


def _refine(prob: _Problem, tab: _Tableau, kept: list[int], xstd, y):
    """Recompute basic values and duals from the original data."""
    basis = tab.basis
    if not basis:
        return xstd, y
    B = prob.A[np.ix_(kept, basis)]
    try:
        cond = np.linalg.cond(B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalBreakdown(str(exc)) from exc
    if not np.isfinite(cond) or cond > 1e13:
        raise NumericalBreakdown(f"final basis is ill-conditioned (cond={cond:.3e})")
    xb = np.linalg.solve(B, prob.b[kept])
    xb = np.where(np.abs(xb) < 1e-15, 0.0, xb)
    if xb.min(initial=0.0) < -1e-9:
        return xstd, y
    x = np.zeros_like(xstd)
    x[basis] = np.maximum(xb, 0.0)
    yk = np.linalg.solve(B.T, prob.c[basis])
    yy = np.zeros(prob.m)
    yy[kept] = yk
    return x, yy


def vertex_solution(lp: LinearProgram, mode: str = "float", pricing: str = "auto") -> LpSolution:
    """Basic optimal solution; the simplex always returns one.

    Provided as a named entry point so callers that rely on support-size
    bounds document the dependency.
    """
    return solve_lp(lp, mode=mode, pricing=pricing)
