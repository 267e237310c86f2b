"""Seeded random games and communication-equilibrium outcomes for test batteries."""

from __future__ import annotations

import os

import numpy as np

from .linprog import LinearProgram, Status, solve_lp
from .model import FiniteGame, OutcomeDistribution

DEFAULT_SEED = 20240917


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    """Seed from ``MEDSOLVE_SEED`` if set, else ``default``."""
    raw = os.environ.get("MEDSOLVE_SEED")
    return int(raw) if raw not in (None, "") else default


def rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(seed_from_env() if seed is None else seed)


def random_game(gen: np.random.Generator, n: int | None = None, m: int | None = None) -> FiniteGame:
    """Finite game with payoffs on a 1/4 lattice (ties occur) and a Dirichlet prior."""
    n = int(gen.integers(2, 5)) if n is None else n
    m = int(gen.integers(2, 7)) if m is None else m
    U = gen.integers(-8, 9, size=(n, m)) / 4.0
    u = gen.integers(0, 9, size=m) / 4.0
    prior = gen.dirichlet(np.ones(n))
    prior = np.maximum(prior, 0.02)
    prior = prior / prior.sum()
    return FiniteGame(tuple(f"w{i}" for i in range(n)), tuple(f"a{j}" for j in range(m)), prior, u, U)


def random_games(count: int, seed: int | None = None) -> list[FiniteGame]:
    gen = rng(seed)
    return [random_game(gen) for _ in range(count)]


def ce_constraints(game: FiniteGame) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Consistency, obedience and honesty rows over the ``n*m`` outcome table."""
    n, m = game.n, game.m
    U, u, p = game.receiver_utility, game.sender_utility, game.prior
    rows, sense, rhs = [], [], []
    for w in range(n):
        r = np.zeros(n * m)
        r[w * m:(w + 1) * m] = 1.0
        rows.append(r)
        sense.append("=")
        rhs.append(p[w])
    for a in range(m):
        for b in range(m):
            if a != b:
                r = np.zeros(n * m)
                r[np.arange(n) * m + a] = U[:, a] - U[:, b]
                if np.any(r):
                    rows.append(r)
                    sense.append(">=")
                    rhs.append(0.0)
    for w in range(1, n):
        r = np.zeros(n * m)
        r[:m] = -u / p[0]
        r[w * m:(w + 1) * m] += u / p[w]
        rows.append(r)
        sense.append("=")
        rhs.append(0.0)
    return np.array(rows), sense, np.array(rhs)


def random_ce_outcome(game: FiniteGame, gen: np.random.Generator) -> OutcomeDistribution:
    """A vertex of the communication-equilibrium polytope picked by a random objective."""
    A, sense, b = ce_constraints(game)
    c = gen.normal(size=game.n * game.m)
    sol = solve_lp(LinearProgram(c, A, sense, b, maximize=True))
    if sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"CE polytope LP returned {sol.status.value}")
    t = np.asarray(sol.primal, dtype=float).reshape(game.n, game.m)
    t = np.where(t > 1e-12, t, 0.0)  # drop LP dust
    t = t * (game.prior / t.sum(axis=1))[:, None]
    return OutcomeDistribution(t)
