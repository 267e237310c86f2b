"""Built-in parametric games and the JSON game format."""

from __future__ import annotations

import itertools
import json
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import InvalidInput
from .model import FiniteGame, Game, MomentGame

ROTATED_S_DELTA = 209 / 409


def beta22_cdf(x):
    x = np.asarray(x, dtype=float)
    return 3 * x**2 - 2 * x**3


def think_tank(c: float = 2.0, v=(0.0, 1.0, 2.0, 3.0), prior=None) -> FiniteGame:
    """Three states, a status-quo action ``a0`` and one action per state.

    The receiver gets 1 for matching action ``a_i`` to state ``i``, 0 for the
    status quo and ``-c`` for a mismatch; the sender gets ``v[a]``.
    """
    n = 3
    U = np.full((n, n + 1), -float(c))
    U[:, 0] = 0.0
    for i in range(n):
        U[i, i + 1] = 1.0
    if prior is None:
        prior = np.full(n, 1 / n)
    return FiniteGame(("w1", "w2", "w3"), ("a0", "a1", "a2", "a3"), prior, np.asarray(v, dtype=float), U)


def _binary(prior) -> np.ndarray:
    if prior is None:
        return np.array([0.5, 0.5])
    prior = np.atleast_1d(np.asarray(prior, dtype=float))
    if prior.size == 1:
        return np.array([1 - prior[0], prior[0]])
    return prior


def rotated_s(delta: float = ROTATED_S_DELTA, prior=None) -> MomentGame:
    """Reputation game with ``V(mu) = (1 - delta) G(mu) - delta mu``, ``G`` the Beta(2,2) CDF.

    The receiver value is ``mu G(mu) + int_mu^1 e dG(e)``.
    """

    def v(x):
        m = np.asarray(x, dtype=float)[..., 0]
        return (1 - delta) * beta22_cdf(m) - delta * m

    def vr(x):
        m = np.asarray(x, dtype=float)[..., 0]
        return m * beta22_cdf(m) + 0.5 - 2 * m**3 + 1.5 * m**4

    return MomentGame(np.array([[0.0], [1.0]]), _binary(prior), v, vr, "rotated-s", {"delta": delta})


def sine(prior=None) -> MomentGame:
    """``V(mu) = sin(3 pi mu - pi)`` on two states."""

    def v(x):
        return np.sin(3 * np.pi * np.asarray(x, dtype=float)[..., 0] - np.pi)

    return MomentGame(np.array([[0.0], [1.0]]), _binary(prior), v, None, "sine", {})


def quadratic(prior=None) -> MomentGame:
    """``V(mu) = 4 mu (mu - 1/2) + 1/4`` on two states."""

    def v(x):
        m = np.asarray(x, dtype=float)[..., 0]
        return 4 * m * (m - 0.5) + 0.25

    return MomentGame(np.array([[0.0], [1.0]]), _binary(prior), v, None, "quadratic", {})


def polynomial(coefficients, prior=None) -> MomentGame:
    """Binary game with ``V(mu) = sum_i c_i mu^i``."""
    coef = np.asarray(coefficients, dtype=float)

    def v(x):
        m = np.asarray(x, dtype=float)[..., 0]
        return np.polynomial.polynomial.polyval(m, coef)

    return MomentGame(np.array([[0.0], [1.0]]), _binary(prior), v, None, "polynomial",
                      {"coefficients": coef.tolist()})


def salesman(y, rho, power: int = 2, prior=None) -> MomentGame:
    """States ``{0,1}^k`` embedded as themselves; ``v(x) = <y,x>^power - <rho,x>``."""
    y = np.asarray(y, dtype=float)
    rho = np.asarray(rho, dtype=float)
    k = y.size
    if rho.size != k:
        raise InvalidInput("y and rho must have the same length")
    if power < 2:
        raise InvalidInput("power must be at least 2")
    T = np.array(list(itertools.product((0.0, 1.0), repeat=k)))
    n = T.shape[0]

    def v(x):
        x = np.asarray(x, dtype=float)
        return (x @ y) ** power - x @ rho

    if prior is None:
        prior = np.full(n, 1 / n)
    return MomentGame(T, prior, v, None, "salesman", {"y": y.tolist(), "rho": rho.tolist(), "power": power})


def mean_variance(gamma: float = 4.0, states=(0.0, 0.5, 1.0), prior=None) -> MomentGame:
    """``T(delta_w) = (w, w^2)``; ``v(x) = gamma x1^2 + x1 - gamma x2`` (mean minus gamma variance).

    The receiver value is ``int_0^1 max(e, R(x)) de``, i.e. ``(1 + R^2) / 2`` for
    ``R`` in [0, 1], where ``R = v`` is the payoff from investing.
    """
    w = np.asarray(states, dtype=float)
    T = np.stack([w, w**2], axis=1)

    def v(x):
        x = np.asarray(x, dtype=float)
        return gamma * x[..., 0] ** 2 + x[..., 0] - gamma * x[..., 1]

    def vr(x):
        r = np.clip(v(x), 0.0, 1.0)
        return (1 + r**2) / 2

    if prior is None:
        prior = np.full(w.size, 1 / w.size)
    return MomentGame(T, prior, v, vr, "mean-variance", {"gamma": gamma, "states": w.tolist()})


FAMILIES: dict[str, Callable[..., Game]] = {
    "think-tank": think_tank,
    "rotated-s": rotated_s,
    "sine": sine,
    "quadratic": quadratic,
    "polynomial": polynomial,
    "salesman": salesman,
    "mean-variance": mean_variance,
}


def game_from_dict(data: dict) -> Game:
    """Build a game from the JSON schema (explicit finite game or family tag)."""
    if not isinstance(data, dict):
        raise InvalidInput("game description must be a JSON object")
    try:
        if "family" in data:
            tag = data["family"]
            if tag not in FAMILIES:
                raise InvalidInput(f"unknown family {tag!r}; known: {sorted(FAMILIES)}")
            params = dict(data.get("params") or {})
            return FAMILIES[tag](prior=data.get("prior"), **params)
        return FiniteGame(
            tuple(data["states"]),
            tuple(data["actions"]),
            data["prior"],
            data["sender_utility"],
            data["receiver_utility"],
        )
    except InvalidInput:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed game description: {exc!r}") from exc


def game_to_dict(game: Game) -> dict:
    if isinstance(game, FiniteGame):
        return {
            "states": list(game.states),
            "actions": list(game.actions),
            "prior": game.prior.tolist(),
            "sender_utility": game.sender_utility.tolist(),
            "receiver_utility": game.receiver_utility.tolist(),
        }
    if game.family is None:
        raise InvalidInput("only built-in moment families can be serialised")
    return {"family": game.family, "params": dict(game.params), "prior": game.prior.tolist()}


def load_game(path: str | Path) -> Game:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read game file {path}: {exc}") from exc
    return game_from_dict(data)
