"""Simplex grids and convex-geometry predicates backed by the LP solver."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .linprog import LinearProgram, Status, solve_lp

HULL_TOL = 1e-9


class BeliefGrid:
    """All beliefs on ``n`` states with coordinates in multiples of ``1/k``."""

    def __init__(self, n: int, k: int):
        if n < 1 or k < 1:
            raise ValueError("grid needs n >= 1 and k >= 1")
        self.n = n
        self.resolution = k

    @cached_property
    def counts(self) -> np.ndarray:
        n, k = self.n, self.resolution
        rows = []
        # stars and bars over k + n - 1 slots, lexicographic order
        for bars in itertools.combinations(range(k + n - 1), n - 1):
            prev = -1
            row = []
            for b in bars:
                row.append(b - prev - 1)
                prev = b
            row.append(k + n - 2 - prev)
            rows.append(row)
        arr = np.array(rows, dtype=np.int64).reshape(-1, n)
        arr.setflags(write=False)
        return arr

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.counts / self.resolution
        pts.setflags(write=False)
        return pts

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in c): i for i, c in enumerate(self.counts)}

    def __len__(self) -> int:
        return comb(self.resolution + self.n - 1, self.n - 1)

    def locate(self, mu) -> int | None:
        c = np.rint(np.asarray(mu, dtype=float) * self.resolution).astype(np.int64)
        if np.max(np.abs(c / self.resolution - np.asarray(mu))) > 1e-12:
            return None
        return self.index.get(tuple(int(v) for v in c))


@dataclass(frozen=True, eq=False)
class Member:
    weights: np.ndarray

    is_member = True


@dataclass(frozen=True, eq=False)
class NonMember:
    separator: np.ndarray
    margin: float

    is_member = False


def in_convex_hull(generators, target, tol: float = HULL_TOL) -> Member | NonMember:
    """Decide ``target in co(generators)``.

    Members come with convex weights from a basic solution, so at most
    ``dim + 1`` generators are used.  Non-members come with ``h`` such that
    ``h.target - max_g h.g = margin > 0``.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    t = np.asarray(target, dtype=float).reshape(-1)
    if G.shape[0] == 0:
        raise ValueError("generators must be nonempty")
    A = np.vstack([G.T, np.ones(G.shape[0])])
    b = np.concatenate([t, [1.0]])
    sol = solve_lp(LinearProgram(np.zeros(G.shape[0]), A, ["="] * A.shape[0], b))
    if sol.status is Status.OPTIMAL:
        w = np.maximum(sol.primal, 0.0)
        w = w / w.sum()
        if np.max(np.abs(w @ G - t)) <= max(tol, 1e-9):
            return Member(w)
    y = sol.farkas if sol.farkas is not None else _separator_fallback(G, t)
    h = np.asarray(y[:-1], dtype=float)
    scale = np.max(np.abs(h)) or 1.0
    h = h / scale
    margin = float(h @ t - np.max(G @ h))
    return NonMember(h, margin)


def _separator_fallback(G: np.ndarray, t: np.ndarray) -> np.ndarray:
    # direction from the nearest generator; only used if phase 1 accepted a
    # point whose weights then failed the reproduction check
    d = t - G[np.argmin(np.linalg.norm(G - t, axis=1))]
    return np.concatenate([d, [0.0]])


@dataclass(frozen=True, eq=False)
class AffineBasis:
    base: np.ndarray
    directions: np.ndarray  # (d, n), orthonormal rows

    @property
    def dimension(self) -> int:
        return self.directions.shape[0]

    def distance(self, x) -> np.ndarray:
        """Euclidean distance of each row of ``x`` from the affine set."""
        X = np.atleast_2d(np.asarray(x, dtype=float)) - self.base
        if self.dimension:
            X = X - (X @ self.directions.T) @ self.directions
        return np.linalg.norm(X, axis=1)

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        return self.distance(x) <= tol

    def complement(self) -> np.ndarray:
        """Orthonormal rows spanning the orthogonal complement of the directions."""
        n = self.base.size
        if self.dimension == 0:
            return np.eye(n)
        _, s, vt = np.linalg.svd(self.directions, full_matrices=True)
        return vt[self.dimension:]


def affine_hull(points, rel_tol: float = 1e-9) -> AffineBasis:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    base = P[0].copy()
    D = P - base
    if P.shape[0] == 1 or not np.any(D):
        return AffineBasis(base, np.zeros((0, P.shape[1])))
    _, s, vt = np.linalg.svd(D, full_matrices=False)
    cut = rel_tol * max(1.0, s[0])
    d = int(np.sum(s > cut))
    return AffineBasis(base, vt[:d].copy())


def segment_hull_intersect(p, mu, generators, lambda_grid: int = 256):
    """First ``lam`` in ``{0, 1/L, ..., (L-1)/L}`` with ``lam*mu + (1-lam)*p`` in the hull."""
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    for i in range(lambda_grid):
        lam = i / lambda_grid
        if in_convex_hull(generators, lam * mu + (1 - lam) * p).is_member:
            return True, lam
    return False, None
