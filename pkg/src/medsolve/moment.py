"""Tools for games whose sender value depends on a low-dimensional moment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .diagnose import BOTH, FROM_ABOVE, FROM_BELOW, CrossingProfile, mono_crossing
from .errors import CrossingNotFound, InvalidInput
from .linprog import LinearProgram, Status, solve_lp
from .model import BeliefPlan, MomentGame, as_belief
from .solve import as_grid, solve_bp, solve_ct_max, solve_md_belief_grid

EDGE_TOL = 1e-9
CASE1 = "CASE1"
CASE2 = "CASE2"
ND_OPTIMAL_CT = "ND_OPTIMAL_CT"
MONO_CROSSING_EQ = "MONO_CROSSING_EQ"
IMPROVABLE = "IMPROVABLE"
INDETERMINATE = "INDETERMINATE"


def _require_moment(game) -> MomentGame:
    if not isinstance(game, MomentGame):
        raise InvalidInput("this operation needs a moment game")
    return game


# ------------------------------------------------------------ edges


@dataclass(frozen=True, eq=False)
class EdgeProfile:
    """``v`` along the edges from the worst vertex ``base_state`` to every other state."""

    base_state: int
    lambdas: np.ndarray
    values: dict  # state -> sampled v along the edge
    crossings: dict  # state -> lambda where v returns to its base value, or None

    def to_dict(self) -> dict:
        return {"base_state": self.base_state, "crossings": {str(k): v for k, v in self.crossings.items()}}


def _edge_fn(game: MomentGame, base: int, w: int):
    n = game.n

    def f(lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        B = np.zeros((lam.size, n))
        B[:, w] = lam
        B[:, base] += 1 - lam
        return game.values(B)

    return f


def _bisect_crossing(f, lo: float, hi: float, target: float) -> float:
    """Root of ``f - target`` on ``[lo, hi]`` with ``f(lo) < target <= f(hi)``."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid)[0] < target:
            lo = mid
        else:
            hi = mid
    # among equally good roots prefer the shortest decimal (exact roots stay exact)
    cands = [round(lo, 12), lo, hi]
    errs = [abs(f(c)[0] - target) for c in cands]
    return cands[int(np.argmin(errs))]


def edge_profile(game: MomentGame, samples: int = 1024) -> EdgeProfile:
    game = _require_moment(game)
    vert = game.values(np.eye(game.n))
    base = int(np.argmin(vert))
    lam = np.linspace(0.0, 1.0, samples + 1)
    values, crossings = {}, {}
    for w in range(game.n):
        if w == base:
            continue
        f = _edge_fn(game, base, w)
        vals = f(lam)
        values[w] = vals
        i = int(np.argmin(vals))
        v0 = vals[0]
        if vals[i] < v0 - EDGE_TOL and vals[-1] >= v0:
            crossings[w] = _bisect_crossing(f, float(lam[i]), 1.0, float(v0))
        else:
            crossings[w] = None
    return EdgeProfile(base, lam, values, crossings)


def is_minimally_edge_non_monotone(game: MomentGame, samples: int = 1024) -> tuple[bool, EdgeProfile]:
    """Every edge out of the worst vertex both strictly rises and strictly falls."""
    prof = edge_profile(game, samples)
    ok = True
    for vals in prof.values.values():
        d = np.diff(vals)
        if not (np.any(d > EDGE_TOL) and np.any(d < -EDGE_TOL)):
            ok = False
    return ok, prof


def _single_dipped(vals: np.ndarray) -> bool:
    i = int(np.argmin(vals))
    d = np.diff(vals)
    return bool(np.all(d[:i] <= EDGE_TOL) and np.all(d[i:] >= -EDGE_TOL))


def quasiconvex_on_segments(game: MomentGame, segments: int = 32, samples: int = 1024,
                            seed: int = 0, tol: float = EDGE_TOL) -> bool:
    """Sampled check that ``v`` never exceeds its endpoint maximum along random segments.

    A black-box ``v`` cannot be verified exactly; this is a precondition probe.
    """
    game = _require_moment(game)
    gen = np.random.default_rng(seed)
    lam = np.linspace(0.0, 1.0, samples + 1)[:, None]
    ends = gen.dirichlet(np.ones(game.n), size=(segments, 2))
    for a, b in ends:
        vals = game.values(lam * b + (1 - lam) * a)
        if np.any(vals > max(vals[0], vals[-1]) + tol):
            return False
    return True


def build_tilde_simplex(game: MomentGame, samples: int = 1024) -> np.ndarray:
    """Vertices of the simplex spanned by the worst vertex and the edge crossing beliefs.

    Row 0 is the worst degenerate belief; row ``j`` for each other state is the
    point on the edge where ``v`` returns to the worst vertex value.
    """
    ok, prof = is_minimally_edge_non_monotone(game, samples)
    if not ok:
        raise CrossingNotFound("v is not minimally edge non-monotone")
    if not quasiconvex_on_segments(game, samples=samples):
        raise CrossingNotFound("v is not quasiconvex along sampled segments")
    n = game.n
    verts = [np.eye(n)[prof.base_state]]
    for w in sorted(prof.values):
        if not _single_dipped(prof.values[w]):
            raise CrossingNotFound(f"v is not single dipped along the edge to state {w}")
        lam = prof.crossings[w]
        if lam is None:
            raise CrossingNotFound(f"v never returns to its base value along the edge to state {w}")
        mu = np.zeros(n)
        mu[w] = lam
        mu[prof.base_state] = 1 - lam
        verts.append(mu)
    return np.array(verts)


def tilde_lambdas(game: MomentGame, samples: int = 1024) -> np.ndarray:
    """Edge crossing weights on the non-base states, in state order."""
    V = build_tilde_simplex(game, samples)
    base = int(np.argmax(V[0]))
    return np.array([row[w] for w, row in zip([w for w in range(game.n) if w != base], V[1:])])


# ------------------------------------------------------------ dichotomy


@dataclass(frozen=True)
class Dichotomy:
    case: str
    max_value: float
    bp: float
    md: float
    ct: float
    no_disclosure: float
    strict_chain: bool
    margins: dict

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "max_value": self.max_value,
            "BP": self.bp,
            "MD": self.md,
            "CT": self.ct,
            "ND": self.no_disclosure,
            "strict_chain": self.strict_chain,
            "margins": dict(self.margins),
        }


def quasiconvex_dichotomy(game: MomentGame, p: Any = None, grid=80, tol: float = 1e-7) -> Dichotomy:
    """Either every protocol reaches ``max V`` or all values are strictly separated."""
    game = _require_moment(game)
    p = game.prior.copy() if p is None else as_belief(p, game.n)
    g = as_grid(game, grid)
    ct = solve_ct_max(game, p, g)
    extra = ct.plan.beliefs
    bp = solve_bp(game, g, p, extra=extra).value
    md = solve_md_belief_grid(game, g, p, extra=extra).value
    vmax = float(max(game.values(g.points).max(), game.values(np.eye(game.n)).max()))
    vp = float(game.values(p[None, :])[0])
    margins = {"max-BP": vmax - bp, "BP-MD": bp - md, "MD-CT": md - ct.value, "CT-ND": ct.value - vp}
    if vmax <= ct.value + tol:
        return Dichotomy(CASE1, vmax, bp, md, ct.value, vp, False, margins)
    strict = all(m > tol for m in margins.values())
    return Dichotomy(CASE2, vmax, bp, md, ct.value, vp, strict, margins)


# ------------------------------------------------------------ one-dimensional means


@dataclass(frozen=True, eq=False)
class MeanPlan:
    atoms: np.ndarray  # (m, k)
    weights: np.ndarray

    def barycenter(self) -> np.ndarray:
        return self.weights @ self.atoms

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


def mean_projection(game: MomentGame, plan: BeliefPlan) -> MeanPlan:
    """Distribution of moments induced by a belief plan, equal moments merged."""
    X = game.moments(plan.beliefs)
    keys = np.round(X, 12)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)
    W = np.bincount(inv, weights=plan.weights, minlength=uniq.shape[0])
    atoms = np.array([X[inv == i][0] for i in range(uniq.shape[0])])
    return MeanPlan(atoms, W)


def _scalar_v(game: MomentGame):
    """``v`` on the real line for a one-dimensional moment game."""
    T = game.embedding[:, 0]
    lo_s, hi_s = int(np.argmin(T)), int(np.argmax(T))
    a, b = T[lo_s], T[hi_s]

    def v(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = (x - a) / (b - a)
        B = np.zeros((x.size, game.n))
        B[:, hi_s] = t
        B[:, lo_s] += 1 - t
        return game.values(B)

    return v, float(a), float(b)


def _need_k1(game) -> MomentGame:
    game = _require_moment(game)
    if game.embedding.shape[1] != 1:
        raise InvalidInput("this operation needs a one-dimensional moment")
    return game


def relaxed_md_mean(game: MomentGame, p: Any = None, x_grid: int = 800) -> tuple[float, MeanPlan]:
    """Mediation value over distributions of the mean, an upper bound on the mean-only value."""
    game = _need_k1(game)
    p = game.prior.copy() if p is None else as_belief(p, game.n)
    v, a, b = _scalar_v(game)
    xh = float(game.moments(p[None, :])[0, 0])
    xs = np.union1d(np.linspace(a, b, x_grid + 1), [xh])
    vals = v(xs)
    A = np.vstack([xs, vals * (xs - xh), np.ones_like(xs)])
    sol = solve_lp(LinearProgram(vals, A, ["="] * 3, np.array([xh, 0.0, 1.0]), maximize=True))
    if sol.status is not Status.OPTIMAL:
        raise InvalidInput("the prior mean lies outside the moment range")
    w = np.maximum(sol.primal, 0.0)
    keep = w > 1e-14
    return float(sol.value), MeanPlan(xs[keep][:, None], w[keep] / w[keep].sum())


def dilation_feasible(game: MomentGame, p: Any, q: MeanPlan) -> tuple[bool, np.ndarray | None]:
    """Is there a state-to-moment transport with marginals ``p`` and ``q`` that is
    mean preserving and leaves ``v`` uncorrelated with every state indicator?

    Returns the transport ``pi[state, atom]`` when feasible.
    """
    game = _require_moment(game)
    p = as_belief(p, game.n)
    X = np.atleast_2d(np.asarray(q.atoms, dtype=float))
    qw = np.asarray(q.weights, dtype=float)
    n, m = game.n, X.shape[0]
    k = game.embedding.shape[1]
    vals = _moment_values(game, X)
    c = float(qw @ vals)
    rows, rhs = [], []
    idx = lambda w, j: w * m + j  # noqa: E731
    nv = n * m
    for j in range(m):
        r = np.zeros(nv)
        for w in range(n):
            r[idx(w, j)] = 1.0
        rows.append(r)
        rhs.append(qw[j])
        for d in range(k):
            r = np.zeros(nv)
            for w in range(n):
                r[idx(w, j)] = game.embedding[w, d] - X[j, d]
            rows.append(r)
            rhs.append(0.0)
    for w in range(n):
        r = np.zeros(nv)
        r[w * m:(w + 1) * m] = 1.0
        rows.append(r)
        rhs.append(p[w])
        r = np.zeros(nv)
        r[w * m:(w + 1) * m] = vals
        rows.append(r)
        rhs.append(c * p[w])
    A = np.array(rows)
    sol = solve_lp(LinearProgram(np.zeros(nv), A, ["="] * A.shape[0], np.array(rhs)))
    if sol.status is not Status.OPTIMAL:
        return False, None
    return True, np.maximum(sol.primal, 0.0).reshape(n, m)


def _moment_values(game: MomentGame, X: np.ndarray) -> np.ndarray:
    """``v`` at moment points, through a belief in the convex hull of the vertex moments."""
    T = game.embedding
    out = np.empty(X.shape[0])
    for j, x in enumerate(X):
        A = np.vstack([T.T, np.ones(game.n)])
        sol = solve_lp(LinearProgram(np.zeros(game.n), A, ["="] * A.shape[0], np.concatenate([x, [1.0]])))
        if sol.status is not Status.OPTIMAL:
            raise InvalidInput(f"moment {x.tolist()} is outside the hull of the state moments")
        mu = np.maximum(sol.primal, 0.0)
        out[j] = game.values((mu / mu.sum())[None, :])[0]
    return out


@dataclass(frozen=True, eq=False)
class MeanClassification:
    label: str
    mean: float
    value: float
    envelope: float
    xs: np.ndarray
    envelope_curve: np.ndarray

    def to_dict(self) -> dict:
        return {"label": self.label, "mean": self.mean, "value": self.value, "envelope": self.envelope}


def quasiconcave_envelope_1d(vals: np.ndarray) -> np.ndarray:
    """``min(max v to the left, max v to the right)`` at every sample."""
    left = np.maximum.accumulate(vals)
    right = np.maximum.accumulate(vals[::-1])[::-1]
    return np.minimum(left, right)


def one_dim_mean_classifier(game: MomentGame, p: Any = None, x_grid: int = 2000,
                            tol: float = 1e-9) -> MeanClassification:
    """Classify mediation against cheap talk for a one-dimensional moment.

    Order of checks: ``v - vbar(x)`` single-crossing at the prior mean gives
    MONO_CROSSING_EQ; otherwise ``v = vbar`` at the prior mean gives
    ND_OPTIMAL_CT; otherwise, when the prior mean is strictly inside the
    level set of ``vbar``, mono-crossing of ``v - vbar`` decides between
    MONO_CROSSING_EQ and IMPROVABLE; if that interior condition fails the
    answer is INDETERMINATE.
    """
    game = _need_k1(game)
    p = game.prior.copy() if p is None else as_belief(p, game.n)
    v, a, b = _scalar_v(game)
    xh = float(game.moments(p[None, :])[0, 0])
    xs = np.union1d(np.linspace(a, b, x_grid + 1), [xh])
    vals = v(xs)
    env = quasiconcave_envelope_1d(vals)
    i = int(np.searchsorted(xs, xh))
    vh, sh = float(vals[i]), float(env[i])
    prod = (vals - sh) * (xs - xh)
    single = abs(vh - sh) <= tol and (np.all(prod >= -tol) or np.all(prod <= tol))
    result = lambda label: MeanClassification(label, xh, vh, sh, xs, env)  # noqa: E731
    if single:
        return result(MONO_CROSSING_EQ)
    if abs(vh - sh) <= tol:
        return result(ND_OPTIMAL_CT)
    # v is continuous and below the level at the mean, so the level set reaches
    # both sides of the mean exactly when each side attains the level
    reach = vals >= sh - tol
    interior = bool(np.any(reach & (xs < xh - tol)) and np.any(reach & (xs > xh + tol)) and np.all(p > 0))
    if not interior:
        return result(INDETERMINATE)
    kind = mono_crossing(CrossingProfile(xs, vals, vals), sh)
    return result(MONO_CROSSING_EQ if kind in (FROM_BELOW, FROM_ABOVE, BOTH) else IMPROVABLE)


def envelope_value(game: MomentGame, p: Any = None, x_grid: int = 2000) -> float:
    """Quasiconcave envelope of ``v`` at the prior mean (1-D moment)."""
    return one_dim_mean_classifier(game, p, x_grid).envelope


__all__ = [
    "CASE1", "CASE2", "ND_OPTIMAL_CT", "MONO_CROSSING_EQ", "IMPROVABLE", "INDETERMINATE",
    "EdgeProfile", "MeanPlan", "Dichotomy", "MeanClassification",
    "edge_profile", "is_minimally_edge_non_monotone", "build_tilde_simplex", "tilde_lambdas",
    "quasiconvex_dichotomy", "quasiconvex_on_segments", "relaxed_md_mean", "dilation_feasible", "mean_projection",
    "one_dim_mean_classifier", "quasiconcave_envelope_1d", "envelope_value",
]
