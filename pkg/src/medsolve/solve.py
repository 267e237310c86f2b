"""Persuasion, mediation and cheap-talk solvers.

Finite games are solved exactly for ``n <= 4`` by adding the vertices of
the receiver's best-response regions to the candidate posteriors: every
value function handled here is affine on each region, so an optimal
distribution can always be moved onto those vertices.  Moment games are
solved on belief grids and the results are lower bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np

from .errors import InternalError, InvalidInput, PriorOffGridHull
from .geom import BeliefGrid, in_convex_hull
from .linprog import LinearProgram, Status, solve_lp, vertex_solution
from .model import (
    BeliefPlan,
    FiniteGame,
    Game,
    MomentGame,
    OutcomeDistribution,
    as_belief,
    no_disclosure_plan,
    outcome_to_plan,
    value_bounds,
)

PROTOCOLS = ("BP", "MD", "CT_MAX", "CT_MIN", "ND")
MAX_VERTEX_STATES = 4
DEFAULT_GRID = {2: 400, 3: 40, 4: 16}
LEVEL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SolveReport:
    protocol: str
    value: float
    plan: BeliefPlan
    method: str
    grid_resolution: int | None = None
    dual_data: tuple[np.ndarray, np.ndarray] | None = None
    outcome: OutcomeDistribution | None = None

    def to_dict(self) -> dict:
        out = {
            "protocol": self.protocol,
            "value": self.value,
            "method": self.method,
            "grid_resolution": self.grid_resolution,
            "plan": self.plan.to_dict(),
        }
        if self.dual_data is not None:
            out["dual"] = {"f": list(map(float, self.dual_data[0])), "g": list(map(float, self.dual_data[1]))}
        if self.outcome is not None:
            out["outcome"] = self.outcome.table.tolist()
        return out


@dataclass(frozen=True, eq=False)
class DualProbe:
    g: np.ndarray
    cav_value: float
    plan: BeliefPlan


def default_grid(n: int) -> int:
    return DEFAULT_GRID.get(n, 8)


def as_grid(game: Game, grid: BeliefGrid | int | None) -> BeliefGrid | None:
    if grid is None:
        return None
    if isinstance(grid, BeliefGrid):
        if grid.n != game.n:
            raise InvalidInput("grid dimension does not match the game")
        return grid
    return BeliefGrid(game.n, int(grid))


def _prior(game: Game, p: Any) -> np.ndarray:
    return game.prior.copy() if p is None else as_belief(p, game.n)


@lru_cache(maxsize=64)
def _region_vertices_cached(key: bytes, n: int, m: int) -> np.ndarray:
    U = np.frombuffer(key, dtype=float).reshape(n, m)
    planes = [np.eye(n)[w] for w in range(n)]
    for a, b in itertools.combinations(range(m), 2):
        d = U[:, a] - U[:, b]
        nd = np.linalg.norm(d)
        if nd > 0:
            planes.append(d / nd)
    H = np.unique(np.round(np.array(planes), 14), axis=0)
    combos = np.array(list(itertools.combinations(range(H.shape[0]), n - 1)), dtype=np.int64)
    if combos.size == 0:
        return np.eye(n)
    M = np.concatenate([H[combos], np.ones((combos.shape[0], 1, n))], axis=1)
    det = np.linalg.det(M)
    M = M[np.abs(det) > 1e-10]
    rhs = np.zeros((M.shape[0], n, 1))
    rhs[:, -1, 0] = 1.0
    X = np.linalg.solve(M, rhs)[:, :, 0]
    X = X[X.min(axis=1) >= -1e-12]
    X = np.clip(X, 0.0, None)
    X = X / X.sum(axis=1, keepdims=True)
    return _dedupe(X)


def region_vertices(game: FiniteGame) -> np.ndarray:
    """Vertices of all best-response regions (and of their intersections).

    Enumerates intersections of ``n - 1`` hyperplanes drawn from the simplex
    facets and the receiver indifference planes.  Empty for ``n > 4``.
    """
    if game.n > MAX_VERTEX_STATES:
        return np.zeros((0, game.n))
    U = np.ascontiguousarray(game.receiver_utility, dtype=float)
    return _region_vertices_cached(U.tobytes(), game.n, game.m)


def _dedupe(X: np.ndarray, decimals: int = 12) -> np.ndarray:
    if X.shape[0] == 0:
        return X
    _, idx = np.unique(np.round(X, decimals), axis=0, return_index=True)
    return X[np.sort(idx)]


def candidate_points(game: Game, p: np.ndarray, grid: BeliefGrid | None, extra=None) -> np.ndarray:
    """Candidate posteriors: grid, the prior, region vertices, extras."""
    parts = []
    if grid is not None:
        parts.append(grid.points)
    parts.append(p[None, :])
    if isinstance(game, FiniteGame):
        parts.append(region_vertices(game))
    if extra is not None and len(extra):
        parts.append(np.atleast_2d(np.asarray(extra, dtype=float)))
    return _dedupe(np.vstack(parts))


def _plan_from_columns(points, weights, selections, col_point) -> BeliefPlan:
    npts = points.shape[0]
    w = np.bincount(col_point, weights=weights, minlength=npts)
    mass = np.bincount(col_point, weights=weights * selections, minlength=npts)
    used = np.flatnonzero(w > 1e-14)
    return BeliefPlan.from_masses(points[used], w[used], mass[used] / w[used])


def _grid_resolution(grid):
    return None if grid is None else grid.resolution


def solve_md_belief_grid(game: Game, grid: BeliefGrid | int | None = None, prior: Any = None,
                         extra=None) -> SolveReport:
    """Mediation LP over candidate posteriors.

    Each posterior gets one column per extreme selection (``V_lo`` and
    ``V_hi``); a mix of the two columns at the same posterior represents any
    selection in between, so this is the mass-weighted ``(w_i, m_i)`` program
    written in extreme-point form.  Rows: Bayes plausibility (``n``) and the
    zero-covariance conditions (``n - 1``; the last one is implied).
    """
    p = _prior(game, prior)
    grid = as_grid(game, grid if grid is not None else default_grid(game.n))
    pts = candidate_points(game, p, grid, extra)
    lo, hi = value_bounds(game, pts)
    both = np.flatnonzero(hi > lo + LEVEL_TOL)
    col_point = np.concatenate([np.arange(pts.shape[0]), both])
    sel = np.concatenate([lo, hi[both]])
    X = pts[col_point]
    n = game.n
    A = np.vstack([X.T, (sel[:, None] * (X - p)).T[: n - 1]])
    b = np.concatenate([p, np.zeros(n - 1)])
    sol = vertex_solution(LinearProgram(sel, A, ["="] * A.shape[0], b, maximize=True))
    if sol.status is Status.INFEASIBLE:
        raise PriorOffGridHull("prior is not in the convex hull of the candidate posteriors")
    if sol.status is not Status.OPTIMAL:
        raise InternalError(f"mediation LP returned {sol.status.value}")
    plan = _plan_from_columns(pts, sol.primal, sel, col_point)
    f = np.asarray(sol.dual[:n], dtype=float)
    g = np.zeros(n)
    g[: n - 1] = -np.asarray(sol.dual[n:], dtype=float)
    return SolveReport("MD", plan.value, plan, "BeliefGridLP", _grid_resolution(grid), (f, g))


def solve_bp(game: Game, grid: BeliefGrid | int | None = None, prior: Any = None, extra=None) -> SolveReport:
    """Concavification of ``V_hi`` at the prior over candidate posteriors."""
    p = _prior(game, prior)
    grid = as_grid(game, grid if grid is not None else default_grid(game.n))
    pts = candidate_points(game, p, grid, extra)
    _, hi = value_bounds(game, pts)
    plan, f = _concavify(pts, hi, p)
    return SolveReport("BP", plan.value, plan, "Concavification", _grid_resolution(grid), (f, np.zeros(game.n)))


def _concavify(pts: np.ndarray, values: np.ndarray, p: np.ndarray):
    sol = vertex_solution(LinearProgram(values, pts.T, ["="] * pts.shape[1], p, maximize=True))
    if sol.status is Status.INFEASIBLE:
        raise PriorOffGridHull("prior is not in the convex hull of the candidate posteriors")
    if sol.status is not Status.OPTIMAL:
        raise InternalError(f"concavification LP returned {sol.status.value}")
    idx = np.arange(pts.shape[0])
    plan = _plan_from_columns(pts, sol.primal, values, idx)
    return plan, np.asarray(sol.dual, dtype=float)


def solve_md_outcome(game: FiniteGame, prior: Any = None, mode: str = "float") -> SolveReport:
    """Exact sender-optimal communication equilibrium via the outcome LP."""
    if not isinstance(game, FiniteGame):
        raise InvalidInput("the outcome LP needs a finite game")
    p = _prior(game, prior)
    n, m = game.n, game.m
    U, u = game.receiver_utility, game.sender_utility
    nv = n * m
    rows, sense, rhs = [], [], []
    for w in range(n):
        r = np.zeros(nv)
        r[w * m:(w + 1) * m] = 1.0
        rows.append(r)
        sense.append("=")
        rhs.append(p[w])
    for a in range(m):
        for b in range(m):
            if a == b:
                continue
            r = np.zeros(nv)
            r[np.arange(n) * m + a] = U[:, a] - U[:, b]
            if np.any(r):
                rows.append(r)
                sense.append(">=")
                rhs.append(0.0)
    # honesty relative to the first state in the support; zero-prior states
    # carry no mass, so they have no truth-telling constraint
    support = [w for w in range(n) if p[w] > 0]
    w0 = support[0]
    base = np.zeros(nv)
    base[w0 * m:(w0 + 1) * m] = u / p[w0]
    for w in support[1:]:
        r = -base.copy()
        r[w * m:(w + 1) * m] += u / p[w]
        rows.append(r)
        sense.append("=")
        rhs.append(0.0)
    c = np.tile(u, n)
    if mode == "rational":
        from fractions import Fraction

        # feed exact ratios for the prior-dependent coefficients
        rows = [[Fraction(float(v)) for v in r] for r in rows]
        pf = [Fraction(float(v)) for v in p]
        k = n + sum(1 for s in sense[n:] if s == ">=")
        for i, w in enumerate(support[1:]):
            r = [Fraction(0)] * nv
            for a in range(m):
                r[w0 * m + a] -= Fraction(float(u[a])) / pf[w0]
                r[w * m + a] += Fraction(float(u[a])) / pf[w]
            rows[k + i] = r
        rhs = [pf[w] for w in range(n)] + [Fraction(0)] * (len(rows) - n)
    sol = vertex_solution(LinearProgram(c, rows, sense, rhs, maximize=True), mode=mode)
    if sol.status is not Status.OPTIMAL:
        raise InternalError(f"outcome LP returned {sol.status.value}; babbling should always be feasible")
    table = np.maximum(np.asarray(sol.primal, dtype=float).reshape(n, m), 0.0)
    sums = table.sum(axis=1)
    table = table * np.divide(p, sums, out=np.zeros(n), where=sums > 0)[:, None]
    pi = OutcomeDistribution(table)
    plan = outcome_to_plan(game, pi, p)
    return SolveReport("MD", float(sol.value), plan, "OutcomeLP", None, None, pi)


# ---------------------------------------------------------------- cheap talk


def _levels(game: Game, pts_vals: np.ndarray) -> np.ndarray:
    if isinstance(game, FiniteGame):
        return np.unique(game.sender_utility)
    return np.unique(pts_vals)


def _largest_level(levels, pts, vals, p, upper: bool):
    """Binary search on sorted levels for the best level whose set hulls ``p``."""

    def member(s):
        mask = vals >= s - LEVEL_TOL if upper else vals <= s + LEVEL_TOL
        if not mask.any():
            return None
        res = in_convex_hull(pts[mask], p)
        return (mask, res) if res.is_member else None

    order = levels if upper else levels[::-1]
    lo, hi = 0, len(order) - 1
    best = None
    # order[0] is always attainable (the prior itself is a candidate)
    while lo <= hi:
        mid = (lo + hi) // 2
        res = member(order[mid])
        if res is not None:
            best = (order[mid], res)
            lo = mid + 1
        else:
            hi = mid - 1
    if best is None:
        raise InternalError("no attainable cheap-talk level; babbling should always be attainable")
    return best


def _segment_entry_finite(game: FiniteGame, p, d, s, upper: bool) -> float:
    """Smallest ``x`` in [0, 1] where some best response at ``p + x d`` has
    sender payoff ``>= s`` (``upper``) or ``<= s``."""
    U, u = game.receiver_utility, game.sender_utility
    best_x = np.inf
    for a in range(game.m):
        if (upper and u[a] < s - LEVEL_TOL) or (not upper and u[a] > s + LEVEL_TOL):
            continue
        D = U[:, [a]] - U  # (n, m)
        alpha = p @ D
        beta = d @ D
        lo_x, hi_x = 0.0, 1.0
        ok = True
        for al, be in zip(alpha, beta):
            if abs(be) < 1e-15:
                if al < -game.tie_tol:
                    ok = False
                    break
            elif be > 0:
                lo_x = max(lo_x, -al / be)
            else:
                hi_x = min(hi_x, -al / be)
        if ok and lo_x <= hi_x + 1e-12:
            best_x = min(best_x, lo_x)
    if not np.isfinite(best_x):
        raise InternalError("segment never reaches the target level")
    return float(min(max(best_x, 0.0), 1.0))


def _segment_entry_moment(game: MomentGame, p, d, s, upper: bool) -> float:
    def g(x):
        v = game.values((p + x * d)[None, :])[0] - s
        return v if upper else -v

    lo, hi = 0.0, 1.0
    if g(hi) <= 0:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def _ct_plan(game: Game, p, atoms, weights, s: float, upper: bool) -> BeliefPlan:
    """Pull every atom toward ``p`` until ``s`` lies in its value interval."""
    new_atoms, new_w = [], []
    for mu, w in zip(atoms, weights):
        lo, hi = value_bounds(game, mu[None, :])
        if lo[0] - 1e-9 <= s <= hi[0] + 1e-9:
            new_atoms.append(mu)
            new_w.append(w)
            continue
        d = mu - p
        if isinstance(game, FiniteGame):
            x = _segment_entry_finite(game, p, d, s, upper)
        else:
            x = _segment_entry_moment(game, p, d, s, upper)
        x = max(x, 1e-300)
        new_atoms.append(p + x * d)
        new_w.append(w / x)
    W = np.array(new_w)
    plan = BeliefPlan(np.array(new_atoms), W / W.sum(), np.full(len(W), s))
    return plan.merged()


def _ct_solve(game: Game, prior, grid, upper: bool) -> SolveReport:
    p = _prior(game, prior)
    if grid is None and not (isinstance(game, FiniteGame) and game.n <= MAX_VERTEX_STATES):
        grid = default_grid(game.n)
    grid = as_grid(game, grid)
    pts = candidate_points(game, p, grid)
    lo, hi = value_bounds(game, pts)
    vals = hi if upper else lo
    levels = _levels(game, vals)
    plo, phi = value_bounds(game, p[None, :])
    if upper:
        levels = levels[levels >= phi[0] - LEVEL_TOL]
    else:
        levels = levels[levels <= plo[0] + LEVEL_TOL]
    s, (mask, member) = _largest_level(levels, pts, vals, p, upper)
    gens = pts[mask]
    used = member.weights > 1e-14
    plan = _ct_plan(game, p, gens[used], member.weights[used], float(s), upper)
    exact = isinstance(game, FiniteGame) and game.n <= MAX_VERTEX_STATES
    return SolveReport("CT_MAX" if upper else "CT_MIN", float(s), plan, "LevelSet",
                       None if exact else _grid_resolution(grid))


def solve_ct_max(game: Game, prior: Any = None, grid: BeliefGrid | int | None = None) -> SolveReport:
    """Sender-preferred cheap-talk value: quasiconcave envelope of ``V_hi``."""
    return _ct_solve(game, prior, grid, upper=True)


def solve_ct_min(game: Game, prior: Any = None, grid: BeliefGrid | int | None = None) -> SolveReport:
    """Sender-worst cheap-talk value: quasiconvex envelope of ``V_lo``."""
    return _ct_solve(game, prior, grid, upper=False)


def solve_nd(game: Game, prior: Any = None) -> SolveReport:
    plan = no_disclosure_plan(game, _prior(game, prior))
    return SolveReport("ND", plan.value, plan, "NoDisclosure")


def dual_probe(game: Game, g, prior: Any = None, grid: BeliefGrid | int | None = None) -> DualProbe:
    """Concavified virtual utility ``(1 + <g, mu - p>) V_sel(mu)`` at the prior.

    ``V_sel`` is ``V_hi`` where the multiplier is nonnegative and ``V_lo``
    elsewhere, the pointwise best selection for this ``g``.
    """
    p = _prior(game, prior)
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != game.n:
        raise InvalidInput("g must have one entry per state")
    grid = as_grid(game, grid if grid is not None else default_grid(game.n))
    pts = candidate_points(game, p, grid)
    lo, hi = value_bounds(game, pts)
    mult = 1.0 + (pts - p) @ g
    vals = np.where(mult >= 0, mult * hi, mult * lo)
    plan, _ = _concavify(pts, vals, p)
    return DualProbe(g, plan.value, plan)


def solve(game: Game, protocol: str, prior: Any = None, grid: BeliefGrid | int | None = None,
          method: str | None = None, exact_lp: bool = False) -> SolveReport:
    """Dispatch on protocol name (``bp``, ``md``, ``ct-max``, ``ct-min``, ``nd``)."""
    key = protocol.upper().replace("-", "_")
    extra = None
    if isinstance(game, MomentGame) and key in ("BP", "MD"):
        # cheap-talk atoms keep BP >= MD >= CT on the grid
        extra = solve_ct_max(game, prior, grid).plan.beliefs
    if key == "BP":
        return solve_bp(game, grid, prior, extra=extra)
    if key == "MD":
        if method is None:
            method = "outcome" if isinstance(game, FiniteGame) else "grid"
        if method == "outcome":
            return solve_md_outcome(game, prior, mode="rational" if exact_lp else "float")
        if method == "grid":
            return solve_md_belief_grid(game, grid, prior, extra=extra)
        raise InvalidInput(f"unknown method {method!r}")
    if key == "CT_MAX":
        return solve_ct_max(game, prior, grid)
    if key == "CT_MIN":
        return solve_ct_min(game, prior, grid)
    if key == "ND":
        return solve_nd(game, prior)
    raise InvalidInput(f"unknown protocol {protocol!r}")
