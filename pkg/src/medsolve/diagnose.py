"""Implementability checks, cheap-talk hulls, improvability and classifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import (
    ConstructionFailed,
    InternalError,
    InvalidInput,
    LevelNotAttainable,
    NotBinary,
    NotSingletonValued,
)
from .geom import AffineBasis, BeliefGrid, affine_hull, in_convex_hull
from .linprog import LinearProgram, Status, solve_lp
from .model import (
    BeliefPlan,
    FiniteGame,
    Game,
    MomentGame,
    as_belief,
    receiver_payoff,
    value_bounds,
)
from .solve import (
    MAX_VERTEX_STATES,
    as_grid,
    candidate_points,
    default_grid,
    region_vertices,
    solve_bp,
    solve_ct_max,
    solve_ct_min,
    solve_md_belief_grid,
    solve_md_outcome,
)

RESIDUAL_TOL = 1e-7
OBEDIENCE_TOL = 1e-9
VARIANCE_TOL = 1e-12
STRICT_EPS = 1e-9
EQUAL_TOL = 1e-6
LEVEL_MATCH_TOL = 1e-9

ALL_EQUAL = "ALL_EQUAL"
BP_GT_MD_EQ_CT = "BP_GT_MD_EQ_CT"
BP_GT_MD_GT_CT = "BP_GT_MD_GT_CT"


def _prior(game: Game, p: Any) -> np.ndarray:
    return game.prior.copy() if p is None else as_belief(p, game.n)


def _exact_finite(game: Game) -> bool:
    return isinstance(game, FiniteGame) and game.n <= MAX_VERTEX_STATES


def _grid_for(game: Game, grid):
    if grid is None and _exact_finite(game):
        return None
    return as_grid(game, grid if grid is not None else default_grid(game.n))


# ------------------------------------------------------------ implementability


@dataclass(frozen=True, eq=False)
class ImplementabilityReport:
    consistency_residual: np.ndarray
    covariance_residual: np.ndarray
    obedience_violations: list
    selection_variance: float
    verdict: dict

    def to_dict(self) -> dict:
        return {
            "consistency_residual": self.consistency_residual.tolist(),
            "covariance_residual": self.covariance_residual.tolist(),
            "obedience_violations": self.obedience_violations,
            "selection_variance": self.selection_variance,
            "verdict": dict(self.verdict),
        }


def check_implementable(game: Game, p: Any, plan: BeliefPlan) -> ImplementabilityReport:
    """Bayes plausibility, selection obedience and zero covariance of a plan."""
    p = _prior(game, p)
    if plan.beliefs.shape[1] != game.n:
        raise InvalidInput("plan beliefs do not match the number of states")
    w, B, s = plan.weights, plan.beliefs, plan.selections
    cons = w @ B - p
    mean_s = w @ s
    cov = (w * s) @ B - mean_s * (w @ B)
    var = float(w @ (s - mean_s) ** 2)
    lo, hi = value_bounds(game, B)
    bad = []
    for i in range(len(w)):
        if not (lo[i] - OBEDIENCE_TOL <= s[i] <= hi[i] + OBEDIENCE_TOL):
            bad.append({"atom": i, "selection": float(s[i]), "lo": float(lo[i]), "hi": float(hi[i])})
    bp_ok = float(np.max(np.abs(cons))) <= RESIDUAL_TOL and not bad
    md_ok = bp_ok and float(np.max(np.abs(cov))) <= RESIDUAL_TOL
    ct_ok = md_ok and var <= VARIANCE_TOL
    return ImplementabilityReport(cons, cov, bad, var, {"BP": bp_ok, "MD": md_ok, "CT": ct_ok})


def receiver_value(game: Game, plan: BeliefPlan) -> float:
    """Receiver's expected payoff from best responding to each posterior."""
    return float(plan.weights @ receiver_payoff(game, plan.beliefs))


# ------------------------------------------------------------ cheap-talk hull


def level_crossings(game: MomentGame, s: float, grid: BeliefGrid) -> np.ndarray:
    """Points on grid edges where a continuous ``V`` crosses the level ``s``."""
    C = grid.counts
    k = grid.resolution
    vals = game.values(grid.points) - s
    idx = grid.index
    starts, ends = [], []
    n = grid.n
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            step = np.zeros(n, dtype=np.int64)
            step[i], step[j] = 1, -1
            for a, c in enumerate(C):
                if c[j] == 0:
                    continue
                b = idx.get(tuple(int(v) for v in c + step))
                if b is not None and a < b and vals[a] * vals[b] < 0:
                    starts.append(a)
                    ends.append(b)
    if not starts:
        return np.zeros((0, n))
    P0 = grid.points[starts]
    P1 = grid.points[ends]
    f0 = vals[starts]
    lo = np.zeros(len(starts))
    hi = np.ones(len(starts))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = game.values(P0 + mid[:, None] * (P1 - P0)) - s
        same = np.sign(fm) == np.sign(f0)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    x = 0.5 * (lo + hi)
    del k
    return P0 + x[:, None] * (P1 - P0)


def _level_support(game: Game, p: np.ndarray, s: float, grid) -> np.ndarray:
    pts = candidate_points(game, p, grid)
    if isinstance(game, MomentGame) and grid is not None:
        pts = np.vstack([pts, level_crossings(game, s, grid)])
    lo, hi = value_bounds(game, pts)
    keep = (lo - LEVEL_MATCH_TOL <= s) & (s <= hi + LEVEL_MATCH_TOL)
    return pts[keep]


@dataclass(frozen=True, eq=False)
class HullReport:
    level: float
    atoms_in_play: np.ndarray
    hull_dimension: int
    full_dimensional: bool
    basis: AffineBasis
    spanning_plan: BeliefPlan

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "hull_dimension": self.hull_dimension,
            "full_dimensional": self.full_dimensional,
            "atoms_in_play": self.atoms_in_play.tolist(),
        }


def cheap_talk_hull(game: Game, p: Any, s: float, grid=None) -> HullReport:
    """Affine hull of the supports of cheap-talk distributions attaining ``s``.

    Candidate atoms are the posteriors where ``s`` lies in the value
    interval.  Each round maximises the mass placed outside the current
    affine hull; positive mass enlarges the hull, zero mass proves it is
    complete.  The witnesses are mixed with equal weights into one spanning
    distribution.
    """
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    F = _level_support(game, p, s, grid)
    if F.shape[0] == 0:
        raise LevelNotAttainable(f"no posterior has {s!r} in its value interval")
    basis = affine_hull(p[None, :])
    witnesses: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(game.n + 1):
        outside = ~basis.contains(F, tol=1e-9)
        c = outside.astype(float)
        sol = solve_lp(LinearProgram(c, F.T, ["="] * game.n, p, maximize=True))
        if sol.status is not Status.OPTIMAL:
            if not witnesses:
                raise LevelNotAttainable(f"level {s!r} is not attainable under cheap talk at this prior")
            break
        w = np.maximum(sol.primal, 0.0)
        used = w > 1e-12
        if not witnesses or sol.value > 1e-9:
            witnesses.append((F[used], w[used] / w[used].sum()))
        if sol.value <= 1e-9 or not outside.any():
            break
        atoms = np.vstack([p[None, :]] + [a for a, _ in witnesses])
        basis = affine_hull(atoms)
        if basis.dimension >= game.n - 1:
            break
    atoms = np.vstack([a for a, _ in witnesses])
    weights = np.concatenate([wt / len(witnesses) for _, wt in witnesses])
    plan = BeliefPlan(atoms, weights / weights.sum(), np.full(len(weights), s)).merged()
    basis = affine_hull(np.vstack([p[None, :], plan.beliefs]))
    dim = basis.dimension
    return HullReport(float(s), plan.beliefs, dim, dim == game.n - 1, basis, plan)


@dataclass(frozen=True, eq=False)
class FullDimensionReport:
    full_dimensional: bool
    ct_value: float
    hull: HullReport
    neighbors_constant: bool

    def to_dict(self) -> dict:
        return {
            "full_dimensional": self.full_dimensional,
            "ct_value": self.ct_value,
            "hull_dimension": self.hull.hull_dimension,
            "neighbors_constant": self.neighbors_constant,
        }


def is_full_dimensional(game: Game, p: Any = None, grid=None, step: float = 1e-3) -> FullDimensionReport:
    """Full dimensionality of the cheap-talk hull at the sender-best CT value.

    The neighbour test re-solves the cheap-talk value at ``p + step (e_i - e_j)``
    and reports whether it stays constant.
    """
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    ct = solve_ct_max(game, p, grid)
    hull = cheap_talk_hull(game, p, ct.value, grid)
    constant = True
    for i in range(game.n):
        for j in range(game.n):
            if i == j:
                continue
            q = p.copy()
            q[i] += step
            q[j] -= step
            if q.min() < 0:
                continue
            if abs(solve_ct_max(game, q, grid).value - ct.value) > LEVEL_MATCH_TOL:
                constant = False
    return FullDimensionReport(hull.full_dimensional, ct.value, hull, constant)


# ------------------------------------------------------------ improvability


@dataclass(frozen=True, eq=False)
class Improvability:
    improvable: bool
    s: float
    mu: np.ndarray | None = None
    lam: float | None = None
    local: bool = False

    def to_dict(self) -> dict:
        return {
            "improvable": self.improvable,
            "level": self.s,
            "local": self.local,
            "witness": None if self.mu is None else {"mu": self.mu.tolist(), "lambda": self.lam},
        }


def _two_hull_rows(Dp, Dm, p, C):
    n = p.size
    na, nb = Dp.shape[0], Dm.shape[0]
    top = np.hstack([Dp.T, -(Dm - p).T])
    ones = np.concatenate([np.ones(na), np.zeros(nb)])[None, :]
    rows = [top, ones]
    rhs = [p, [1.0]]
    if C is not None and C.shape[0]:
        rows.append(np.hstack([np.zeros((C.shape[0], na)), C @ (Dm - p).T]))
        rhs.append(np.zeros(C.shape[0]))
    del n
    return np.vstack(rows), np.concatenate(rhs)


def is_improvable(game: Game, p: Any = None, s: float | None = None, grid=None, local: bool = False,
                  method: str = "exact", lambda_grid: int = 256) -> Improvability:
    """Search for ``mu`` and ``lam < 1`` with ``CT_max(lam mu + (1-lam) p) > s > CT_min(mu)``.

    Both envelopes are level-set hulls: ``CT_max(x) > s`` iff ``x`` is in the
    hull of ``D+ = {V_hi > s}``, and ``CT_min(y) < s`` iff ``y`` is in the hull
    of ``D- = {V_lo < s}``.  ``method="exact"`` writes ``b = lam * (weights on
    D-)`` and minimises ``lam`` in one LP; ``method="sweep"`` tests a fixed
    lambda grid.  ``local`` restricts ``mu`` to the cheap-talk hull ``H(s)``.
    """
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    if s is None:
        s = solve_ct_max(game, p, grid).value
    pts = candidate_points(game, p, grid)
    lo, hi = value_bounds(game, pts)
    Dp = pts[hi > s + STRICT_EPS]
    Dm = pts[lo < s - STRICT_EPS]
    if Dp.shape[0] == 0 or Dm.shape[0] == 0:
        return Improvability(False, s, local=local)
    C = None
    if local:
        C = cheap_talk_hull(game, p, s, grid).basis.complement()
    if method == "sweep":
        return _sweep(Dp, Dm, p, s, C, lambda_grid, local)
    if method != "exact":
        raise InvalidInput(f"unknown method {method!r}")
    A, b = _two_hull_rows(Dp, Dm, p, C)
    na, nb = Dp.shape[0], Dm.shape[0]
    cost = np.concatenate([np.zeros(na), np.ones(nb)])
    sol = solve_lp(LinearProgram(cost, A, ["="] * A.shape[0], b))
    if sol.status is not Status.OPTIMAL or sol.value >= 1 - 1e-9:
        return Improvability(False, s, local=local)
    lam = float(sol.value)
    if lam > 1e-12:
        bw = np.maximum(sol.primal[na:], 0.0)
        mu = bw @ Dm / bw.sum()
        return Improvability(True, s, mu / mu.sum(), lam, local)
    # lam = 0: the prior already sits in co D+; any mu in co D- (within H) works
    rows = [np.vstack([Dm.T, np.ones((1, nb))])]
    rhs_parts = []
    if C is not None and C.shape[0]:
        rows.append(C @ (Dm - p).T)
        rhs_parts.append(np.zeros(C.shape[0]))
    A2 = np.vstack(rows)
    free = LinearProgram(np.concatenate([np.zeros(nb), np.zeros(game.n)]),
                         np.hstack([A2, np.vstack([-np.eye(game.n), np.zeros((A2.shape[0] - game.n, game.n))])]),
                         ["="] * A2.shape[0],
                         np.concatenate([np.zeros(game.n), [1.0]] + rhs_parts),
                         [(0, math.inf)] * nb + [(-math.inf, math.inf)] * game.n)
    sol2 = solve_lp(free)
    if sol2.status is not Status.OPTIMAL:
        return Improvability(False, s, local=local)
    mu = np.clip(np.asarray(sol2.primal[nb:], dtype=float), 0.0, None)
    return Improvability(True, s, mu / mu.sum(), 0.0, local)


def _sweep(Dp, Dm, p, s, C, L, local) -> Improvability:
    na, nb = Dp.shape[0], Dm.shape[0]
    for i in range(L):
        lam = i / L
        rows = [np.hstack([Dp.T, -lam * Dm.T]),
                np.concatenate([np.ones(na), np.zeros(nb)])[None, :],
                np.concatenate([np.zeros(na), np.ones(nb)])[None, :]]
        rhs = [(1 - lam) * p, [1.0], [1.0]]
        if C is not None and C.shape[0]:
            rows.append(np.hstack([np.zeros((C.shape[0], na)), C @ (Dm - p).T]))
            rhs.append(np.zeros(C.shape[0]))
        A = np.vstack(rows)
        sol = solve_lp(LinearProgram(np.zeros(na + nb), A, ["="] * A.shape[0], np.concatenate(rhs)))
        if sol.status is Status.OPTIMAL:
            bw = np.maximum(sol.primal[na:], 0.0)
            mu = bw @ Dm / bw.sum()
            return Improvability(True, s, mu / mu.sum(), lam, local)
    return Improvability(False, s, local=local)


@dataclass(frozen=True, eq=False)
class ImprovementCertificate:
    s: float
    mu_minus: np.ndarray
    lam: float
    tau_plus: BeliefPlan
    tau_minus: BeliefPlan
    tau_zero: BeliefPlan
    v_plus: float
    v_minus: float
    xi: float
    alpha: float
    mixed_plan: BeliefPlan
    value_gain: float
    closed_form_gain: float

    def to_dict(self) -> dict:
        return {
            "level": self.s,
            "mu_minus": self.mu_minus.tolist(),
            "lambda": self.lam,
            "v_plus": self.v_plus,
            "v_minus": self.v_minus,
            "xi": self.xi,
            "alpha": self.alpha if math.isfinite(self.alpha) else None,
            "value": self.s + self.value_gain,
            "value_gain": self.value_gain,
            "closed_form_gain": self.closed_form_gain,
            "tau_plus": self.tau_plus.to_dict(),
            "tau_minus": self.tau_minus.to_dict(),
            "tau_zero": self.tau_zero.to_dict(),
            "mixed_plan": self.mixed_plan.to_dict(),
        }


def _concat(parts) -> BeliefPlan:
    B = np.vstack([pl.beliefs for pl, _ in parts])
    W = np.concatenate([pl.weights * c for pl, c in parts])
    S = np.concatenate([pl.selections for pl, _ in parts])
    keep = W > 0
    return BeliefPlan(B[keep], W[keep] / W[keep].sum(), S[keep])


def construct_improving_plan(game: Game, p: Any, s: float, witness: Improvability | tuple,
                             grid=None) -> ImprovementCertificate:
    """Mix cheap-talk plans around ``p`` into a mediation plan worth more than ``s``.

    ``tau_plus`` attains ``s + V+`` at ``lam mu + (1 - lam) p``, ``tau_minus``
    attains ``s - V-`` at ``mu`` and ``tau_zero`` attains ``s`` at ``p`` with a
    spanning support.  With ``xi = (V-/lam) / (V+ + V-/lam)`` the mixture of the
    first two is centred at ``mu*``; ``tau_zero`` is re-weighted to be centred
    at ``alpha p + (1 - alpha) mu*`` for the largest feasible ``alpha``.
    """
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    if isinstance(witness, Improvability):
        if witness.mu is None:
            raise ConstructionFailed("witness carries no belief")
        mu, lam = witness.mu, float(witness.lam)
    else:
        mu, lam = np.asarray(witness[0], dtype=float), float(witness[1])
    mu = as_belief(mu, game.n, tol=1e-9)
    if not 0 <= lam < 1:
        raise ConstructionFailed("lambda must lie in [0, 1)")
    mu_plus = lam * mu + (1 - lam) * p
    ct_plus = solve_ct_max(game, mu_plus, grid)
    ct_minus = solve_ct_min(game, mu, grid)
    v_plus = ct_plus.value - s
    v_minus = s - ct_minus.value
    if v_plus <= 1e-12 or v_minus <= 1e-12:
        raise ConstructionFailed(f"witness does not straddle the level (V+={v_plus!r}, V-={v_minus!r})")
    hull = cheap_talk_hull(game, p, s, grid)
    tau0 = hull.spanning_plan
    if lam == 0:
        plan = ct_plus.plan
        return ImprovementCertificate(s, mu, lam, ct_plus.plan, ct_minus.plan, tau0, v_plus, v_minus,
                                      1.0, math.inf, plan, plan.value - s, v_plus)
    xi = (v_minus / lam) / (v_plus + v_minus / lam)
    mu_star = xi * mu_plus + (1 - xi) * mu
    K = len(tau0)
    # maximise a: sum c_i nu_i = a p + (1 - a) mu*, sum c_i = 1, c >= 0
    A = np.vstack([np.hstack([tau0.beliefs.T, -(p - mu_star)[:, None]]),
                   np.concatenate([np.ones(K), [0.0]])[None, :]])
    b = np.concatenate([mu_star, [1.0]])
    sol = solve_lp(LinearProgram(np.concatenate([np.zeros(K), [1.0]]), A, ["="] * A.shape[0], b,
                                 [(0, math.inf)] * K + [(-math.inf, math.inf)], maximize=True))
    tail = [(ct_plus.plan, xi), (ct_minus.plan, 1 - xi)]
    if sol.status is Status.UNBOUNDED:
        alpha = math.inf
        plan = _concat(tail)
    elif sol.status is Status.OPTIMAL:
        alpha = float(sol.primal[-1])
        if alpha <= 1 + 1e-9:
            raise ConstructionFailed(f"alpha = {alpha!r}: witness too close to the hull boundary")
        c = np.maximum(np.asarray(sol.primal[:K], dtype=float), 0.0)
        keep = c > 1e-14
        tau0_shift = BeliefPlan(tau0.beliefs[keep], c[keep] / c[keep].sum(), tau0.selections[keep])
        plan = _concat([(tau0_shift, 1 / alpha), (ct_plus.plan, (alpha - 1) / alpha * xi),
                        (ct_minus.plan, (alpha - 1) / alpha * (1 - xi))])
    else:
        raise ConstructionFailed("prior is not in the hull of the cheap-talk support")
    plan = plan.merged()
    shrink = 1.0 if math.isinf(alpha) else (alpha - 1) / alpha
    closed = (1 / lam - 1) * shrink * v_plus * v_minus / (v_plus + v_minus / lam)
    return ImprovementCertificate(s, mu, lam, ct_plus.plan, ct_minus.plan, tau0, v_plus, v_minus, xi, alpha,
                                  plan, plan.value - s, closed)


# ------------------------------------------------------------ classification


@dataclass(frozen=True)
class Trichotomy:
    label: str
    bp: float
    md: float
    ct: float

    def to_dict(self) -> dict:
        return {"label": self.label, "BP": self.bp, "MD": self.md, "CT": self.ct}


def protocol_values(game: Game, p: Any = None, grid=None) -> tuple[float, float, float]:
    """``(BP, MD, CT_MAX)``; exact for finite games with ``n <= 4``."""
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    ct = solve_ct_max(game, p, grid)
    if isinstance(game, FiniteGame):
        md = solve_md_outcome(game, p).value
        bp = solve_bp(game, grid if grid is not None else 1, p).value
    else:
        md = solve_md_belief_grid(game, grid, p, extra=ct.plan.beliefs).value
        bp = solve_bp(game, grid, p, extra=ct.plan.beliefs).value
    return bp, md, ct.value


def label_values(bp: float, md: float, ct: float, tol: float = EQUAL_TOL) -> str:
    if md - ct <= tol:
        return ALL_EQUAL if bp - md <= tol else BP_GT_MD_EQ_CT
    if bp - md <= tol:
        raise InternalError(f"BP = MD > CT contradicts the value trichotomy (BP={bp}, MD={md}, CT={ct})")
    return BP_GT_MD_GT_CT


def classify_trichotomy(game: Game, p: Any = None, grid=None) -> Trichotomy:
    bp, md, ct = protocol_values(game, p, grid)
    return Trichotomy(label_values(bp, md, ct), bp, md, ct)


# ------------------------------------------------------------ binary tests


@dataclass(frozen=True, eq=False)
class CrossingProfile:
    """Value interval sampled along the probability ``x`` of the second state."""

    x: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def binary_profile(game: Game, samples: int = 2000) -> CrossingProfile:
    if game.n != 2:
        raise NotBinary("crossing tests need exactly two states")
    xs = np.linspace(0.0, 1.0, samples + 1)
    if isinstance(game, FiniteGame):
        xs = np.union1d(xs, region_vertices(game)[:, 1])
    B = np.stack([1 - xs, xs], axis=1)
    lo, hi = value_bounds(game, B)
    return CrossingProfile(xs, lo, hi)


FROM_BELOW = "FromBelow"
FROM_ABOVE = "FromAbove"
BOTH = "Both"
NEITHER = "No"


def mono_crossing(game_or_profile, s: float, samples: int = 2000, tol: float = STRICT_EPS) -> str:
    """Classify ``V - s`` as mono-crossing from below, above, both or neither."""
    prof = game_or_profile if isinstance(game_or_profile, CrossingProfile) else binary_profile(game_or_profile, samples)
    order = np.argsort(prof.x, kind="stable")
    lo = prof.lo[order] - s
    hi = prof.hi[order] - s
    below = True
    pos = np.flatnonzero(hi > tol)
    if pos.size:
        below = bool(np.all(lo[pos[0] + 1:] >= -tol))
    above = True
    neg = np.flatnonzero(lo < -tol)
    if neg.size:
        above = bool(np.all(hi[neg[0] + 1:] <= tol))
    if below and above:
        return BOTH
    return FROM_BELOW if below else FROM_ABOVE if above else NEITHER


def single_crossing_at(game_or_profile, s: float, p_hat: float, samples: int = 2000,
                       tol: float = STRICT_EPS) -> bool:
    """``V(p_hat) = s`` and ``(V(x) - s)(x - p_hat)`` keeps one sign."""
    if isinstance(game_or_profile, CrossingProfile):
        prof = game_or_profile
        if np.any(np.abs(prof.hi - prof.lo) > tol):
            raise NotSingletonValued("the profile is interval valued")
        at = np.interp(p_hat, prof.x, prof.lo)
    else:
        game = game_or_profile
        if game.n != 2:
            raise NotBinary("crossing tests need exactly two states")
        prof = binary_profile(game, samples)
        if np.any(prof.hi - prof.lo > tol):
            raise NotSingletonValued("V is interval valued somewhere on [0, 1]")
        at = value_bounds(game, np.array([[1 - p_hat, p_hat]]))[0][0]
    if abs(at - s) > tol:
        return False
    prod = (prof.lo - s) * (prof.x - p_hat)
    return bool(np.all(prod >= -tol) or np.all(prod <= tol))


def full_disclosure_optimal(game: Game, p: Any = None, grid=None, levels: int = 64) -> bool:
    """Some common vertex selection ``s >= V_hi(p)`` that cannot be improved."""
    p = _prior(game, p)
    lo_v, hi_v = value_bounds(game, np.eye(game.n))
    _, hp = value_bounds(game, p[None, :])
    low = max(float(lo_v.max()), float(hp[0]))
    high = float(hi_v.min())
    if low > high + 1e-9:
        return False
    cands = [low, high] + list(np.linspace(low, high, levels + 2)[1:-1]) if high > low else [low]
    for s in cands:
        if not is_improvable(game, p, float(s), grid, local=False).improvable:
            return True
    return False


# ------------------------------------------------------------ state dependence


@dataclass(frozen=True, eq=False)
class HonestyReport:
    residuals: np.ndarray  # [w, w'] truth-telling gain for state w against report w'
    state_values: np.ndarray  # [atom, w]
    honest: bool
    cheap_talk_feasible: bool

    def to_dict(self) -> dict:
        return {
            "residuals": self.residuals.tolist(),
            "honest": self.honest,
            "cheap_talk_feasible": self.cheap_talk_feasible,
        }


def check_honesty_state_dependent(payoff: Callable[[np.ndarray, int], float], p: Any,
                                  plan: BeliefPlan, tol: float = 1e-8) -> HonestyReport:
    """Truth-telling constraints when the sender's value depends on the state.

    ``residuals[w, w2] = sum_i w_i V(mu_i, w) (mu_i(w)/p(w) - mu_i(w2)/p(w2))``;
    all entries ``>= -tol`` means honest reporting is optimal.  Cheap talk
    additionally needs ``V(., w)`` constant on the atoms state ``w`` can reach.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    B, w = plan.beliefs, plan.weights
    V = np.array([[float(payoff(mu, j)) for j in range(n)] for mu in B])
    cond = (w[:, None] * B) / p  # conditional weights tau^w(mu_i)
    E = V.T @ cond  # E[j, k] = expected V(., j) under tau^k
    R = np.diag(E)[:, None] - E
    honest = bool(np.all(R >= -tol))
    ct = True
    for j in range(n):
        reach = B[:, j] > 0
        vals = V[reach, j]
        if vals.size and np.ptp(vals) > 1e-9:
            ct = False
    return HonestyReport(R, V, honest, ct)


def conditional_expectation(f: Callable[[np.ndarray], float], p: Any, plan: BeliefPlan, state: int) -> float:
    """``E[f(mu) | state]`` under the state-conditional posterior distribution."""
    p = np.asarray(p, dtype=float)
    cond = plan.weights * plan.beliefs[:, state] / p[state]
    return float(sum(c * f(mu) for c, mu in zip(cond, plan.beliefs)))


IMPROVABLE = "IMPROVABLE"
NOT_IMPROVABLE = "NOT_IMPROVABLE"
INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True, eq=False)
class ImprovementStatus:
    status: str
    s: float
    local: Improvability
    global_: Improvability
    full_dimensional: bool

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "level": self.s,
            "locally_improvable": self.local.improvable,
            "improvable": self.global_.improvable,
            "full_dimensional": self.full_dimensional,
        }


def improvement_status(game: Game, p: Any = None, s: float | None = None, grid=None) -> ImprovementStatus:
    """Combine the local and global tests.

    Local improvability certifies ``MD > s``; failure of global improvability
    certifies ``MD = s``.  Improvable but not locally improvable without full
    dimensionality is left undecided.
    """
    p = _prior(game, p)
    grid = _grid_for(game, grid)
    if s is None:
        s = solve_ct_max(game, p, grid).value
    loc = is_improvable(game, p, s, grid, local=True)
    glob = is_improvable(game, p, s, grid, local=False)
    full = cheap_talk_hull(game, p, s, grid).full_dimensional
    if loc.improvable:
        status = IMPROVABLE
    elif not glob.improvable:
        status = NOT_IMPROVABLE
    else:
        status = INDETERMINATE
    return ImprovementStatus(status, s, loc, glob, full)
