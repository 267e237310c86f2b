"""Games, beliefs, value correspondences and plan/outcome conversions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InconsistentPrior, InvalidInput, ObedienceViolation

PRIOR_TOL = 1e-12
WEIGHT_TOL = 1e-10
SELECTION_TOL = 1e-9
TIE_TOL = 1e-9
GROUP_TOL = 1e-10


def _frozen(a: Any, ndim: int | None = None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidInput(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("all entries must be finite")
    arr.setflags(write=False)
    return arr


def as_belief(mu: Any, n: int | None = None, tol: float = PRIOR_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a float array.

    On two states a scalar is read as the probability of the second state.
    """
    arr = np.asarray(mu, dtype=float).reshape(-1)
    if n == 2 and arr.size == 1:
        arr = np.array([1.0 - arr[0], arr[0]])
    if n is not None and arr.size != n:
        raise InvalidInput(f"belief has {arr.size} coordinates, expected {n}")
    if not np.all(np.isfinite(arr)) or arr.min() < -tol or arr.max() > 1 + tol:
        raise InvalidInput("belief entries must lie in [0, 1]")
    if abs(arr.sum() - 1.0) > max(tol, 1e-12):
        raise InvalidInput(f"belief must sum to 1 (got {arr.sum()!r})")
    return np.clip(arr, 0.0, 1.0)


def binary_belief(x: float) -> np.ndarray:
    """Belief on two states from the probability of the second state."""
    return np.array([1.0 - x, x])


@dataclass(frozen=True)
class ValueInterval:
    lo: float
    hi: float
    best_actions: frozenset[int]

    def contains(self, s: float, tol: float = SELECTION_TOL) -> bool:
        return self.lo - tol <= s <= self.hi + tol


@dataclass(frozen=True, eq=False)
class FiniteGame:
    """Finite game with transparent sender motives.

    ``receiver_utility[w, a]`` is the receiver's payoff from action ``a`` in
    state ``w``; ``sender_utility[a]`` is state independent.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    prior: np.ndarray
    sender_utility: np.ndarray
    receiver_utility: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        object.__setattr__(self, "prior", _frozen(self.prior, 1))
        object.__setattr__(self, "sender_utility", _frozen(self.sender_utility, 1))
        object.__setattr__(self, "receiver_utility", _frozen(self.receiver_utility, 2))
        n, m = len(self.states), len(self.actions)
        if n < 2:
            raise InvalidInput("a game needs at least two states")
        if m < 1:
            raise InvalidInput("a game needs at least one action")
        if self.prior.shape != (n,):
            raise InvalidInput("prior length must equal the number of states")
        if self.sender_utility.shape != (m,):
            raise InvalidInput("sender_utility length must equal the number of actions")
        if self.receiver_utility.shape != (n, m):
            raise InvalidInput("receiver_utility must be states x actions")
        _check_prior(self.prior)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.actions)

    def with_prior(self, prior: Any) -> "FiniteGame":
        return FiniteGame(self.states, self.actions, prior, self.sender_utility, self.receiver_utility)

    @property
    def tie_tol(self) -> float:
        return TIE_TOL * max(1.0, float(np.abs(self.receiver_utility).max()))


@dataclass(frozen=True, eq=False)
class MomentGame:
    """Game whose sender value depends on the belief only through ``T(mu)``.

    ``embedding`` has one row ``T(delta_w)`` per state.  ``sender_value`` and
    ``receiver_value`` take an array of moments with trailing dimension ``k``
    and return one value per leading index.
    """

    embedding: np.ndarray
    prior: np.ndarray
    sender_value: Callable[[np.ndarray], Any]
    receiver_value: Callable[[np.ndarray], Any] | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        emb = np.array(self.embedding, dtype=float)
        if emb.ndim == 1:
            emb = emb[:, None]
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "prior", _frozen(self.prior, 1))
        n, k = emb.shape
        if n < 2:
            raise InvalidInput("a game needs at least two states")
        if self.prior.shape != (n,):
            raise InvalidInput("prior length must equal the number of states")
        if k > n - 1:
            raise InvalidInput("moment dimension must not exceed n - 1")
        centred = emb - emb.mean(axis=0)
        if np.linalg.matrix_rank(centred, tol=1e-12) != k:
            raise InvalidInput("state embedding must have full affine rank k")
        _check_prior(self.prior)

    @property
    def n(self) -> int:
        return self.embedding.shape[0]

    @property
    def k(self) -> int:
        return self.embedding.shape[1]

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(f"w{i}" for i in range(self.n))

    def with_prior(self, prior: Any) -> "MomentGame":
        return MomentGame(self.embedding, prior, self.sender_value, self.receiver_value, self.family, self.params)

    def moments(self, beliefs: np.ndarray) -> np.ndarray:
        return np.asarray(beliefs, dtype=float) @ self.embedding

    def values(self, beliefs: np.ndarray) -> np.ndarray:
        x = self.moments(np.atleast_2d(beliefs))
        return np.asarray(self.sender_value(x), dtype=float).reshape(-1)


Game = FiniteGame | MomentGame


def _check_prior(prior: np.ndarray) -> None:
    if prior.min() <= 0:
        raise InvalidInput("prior must have full support")
    if abs(prior.sum() - 1.0) > PRIOR_TOL * 10:
        raise InvalidInput("prior must sum to 1")


def value_bounds(game: Game, beliefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(V_lo, V_hi)`` at every row of ``beliefs``."""
    B = np.atleast_2d(np.asarray(beliefs, dtype=float))
    if isinstance(game, MomentGame):
        v = game.values(B)
        return v, v.copy()
    R = B @ game.receiver_utility
    best = R.max(axis=1, keepdims=True)
    tied = R >= best - game.tie_tol
    u = game.sender_utility[None, :]
    lo = np.where(tied, u, np.inf).min(axis=1)
    hi = np.where(tied, u, -np.inf).max(axis=1)
    return lo, hi


def value_correspondence(game: FiniteGame, mu: Any) -> ValueInterval:
    mu = as_belief(mu, game.n)
    R = mu @ game.receiver_utility
    best = R.max()
    acts = frozenset(int(a) for a in np.flatnonzero(R >= best - game.tie_tol))
    us = game.sender_utility[sorted(acts)]
    return ValueInterval(float(us.min()), float(us.max()), acts)


def moment_value(game: MomentGame, mu: Any) -> float:
    mu = as_belief(mu, game.n)
    try:
        return float(game.values(mu[None, :])[0])
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        raise InvalidInput(f"sender value could not be evaluated: {exc}") from exc


def receiver_payoff(game: Game, beliefs: np.ndarray) -> np.ndarray:
    B = np.atleast_2d(np.asarray(beliefs, dtype=float))
    if isinstance(game, FiniteGame):
        return (B @ game.receiver_utility).max(axis=1)
    if game.receiver_value is None:
        from .errors import MissingReceiverValue

        raise MissingReceiverValue("this moment game has no receiver value")
    return np.asarray(game.receiver_value(game.moments(B)), dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class BeliefPlan:
    """Finitely supported distribution of posteriors with payoff selections."""

    beliefs: np.ndarray
    weights: np.ndarray
    selections: np.ndarray

    def __post_init__(self) -> None:
        B = np.atleast_2d(np.array(self.beliefs, dtype=float))
        w = np.array(self.weights, dtype=float).reshape(-1)
        s = np.array(self.selections, dtype=float).reshape(-1)
        if B.shape[0] != w.size or s.size != w.size:
            raise InvalidInput("beliefs, weights and selections must have matching lengths")
        if w.size == 0:
            raise InvalidInput("a plan needs at least one atom")
        if w.min() <= 0:
            raise InvalidInput("plan weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidInput(f"plan weights must sum to 1 (got {w.sum()!r})")
        for arr in (B, w, s):
            arr.setflags(write=False)
        object.__setattr__(self, "beliefs", B)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "selections", s)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def value(self) -> float:
        return float(self.weights @ self.selections)

    @property
    def barycenter(self) -> np.ndarray:
        return self.weights @ self.beliefs

    def atoms(self):
        return list(zip(self.beliefs, self.weights, self.selections))

    @classmethod
    def from_masses(cls, beliefs, weights, selections, drop: float = 1e-14) -> "BeliefPlan":
        """Build a plan from raw LP weights, dropping dust and renormalising."""
        B = np.atleast_2d(np.asarray(beliefs, dtype=float))
        w = np.asarray(weights, dtype=float).reshape(-1)
        s = np.asarray(selections, dtype=float).reshape(-1)
        keep = w > drop
        w = w[keep]
        return cls(B[keep], w / w.sum(), s[keep])

    def merged(self, tol: float = GROUP_TOL) -> "BeliefPlan":
        """Merge atoms with equal posteriors; selections are mass-averaged."""
        groups = group_beliefs(self.beliefs, tol)
        B, W, S = [], [], []
        for idx in groups:
            w = self.weights[idx]
            B.append(self.weights[idx] @ self.beliefs[idx] / w.sum())
            W.append(w.sum())
            S.append(w @ self.selections[idx] / w.sum())
        return BeliefPlan(np.array(B), np.array(W), np.array(S))

    def to_dict(self, states: Sequence[str] | None = None) -> dict:
        return {
            "atoms": [
                {"belief": [float(v) for v in b], "weight": float(w), "selection": float(s)}
                for b, w, s in self.atoms()
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BeliefPlan":
        try:
            atoms = data["atoms"]
            B = [a["belief"] for a in atoms]
            W = [a["weight"] for a in atoms]
            S = [a["selection"] for a in atoms]
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed plan: {exc}") from exc
        return cls(np.array(B, dtype=float), np.array(W, dtype=float), np.array(S, dtype=float))


def no_disclosure_plan(game: Game, prior: Any = None) -> BeliefPlan:
    p = game.prior if prior is None else as_belief(prior, game.n)
    _, hi = value_bounds(game, p[None, :])
    return BeliefPlan(p[None, :], np.array([1.0]), hi)


def group_beliefs(beliefs: np.ndarray, tol: float = GROUP_TOL) -> list[list[int]]:
    """Indices grouped by posterior, first-come order, max-norm tolerance."""
    groups: list[list[int]] = []
    reps: list[np.ndarray] = []
    for i, b in enumerate(beliefs):
        for g, r in zip(groups, reps):
            if np.max(np.abs(b - r)) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
            reps.append(b)
    return groups


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Joint distribution over states x actions (recommendation form)."""

    table: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        if t.ndim != 2:
            raise InvalidInput("outcome table must be a matrix")
        if t.min() < -1e-12:
            raise InvalidInput("outcome table must be nonnegative")
        if abs(t.sum() - 1.0) > 1e-9:
            raise InvalidInput("outcome table must sum to 1")
        t = np.maximum(t, 0.0)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def sender_payoff(self, game: FiniteGame) -> float:
        return float(self.table.sum(axis=0) @ game.sender_utility)

    def honesty_rows(self, game: FiniteGame, prior: Any = None) -> np.ndarray:
        """Conditional expected sender payoff given each state."""
        p = game.prior if prior is None else np.asarray(prior, dtype=float)
        return self.table @ game.sender_utility / p

    def obedience_slack(self, game: FiniteGame) -> np.ndarray:
        """``slack[a, b]``: gain from obeying ``a`` instead of deviating to ``b``."""
        U = game.receiver_utility
        obey = np.einsum("wa,wa->a", self.table, U)
        dev = self.table.T @ U  # [a, b]
        return obey[:, None] - dev


def _two_point(game: FiniteGame, mu: np.ndarray, s: float) -> list[tuple[int, float]]:
    vi = value_correspondence(game, mu)
    if not vi.contains(s):
        raise ObedienceViolation(f"selection {s!r} outside [{vi.lo!r}, {vi.hi!r}]")
    acts = sorted(vi.best_actions)
    us = game.sender_utility
    a_lo = next(a for a in acts if us[a] == vi.lo)
    a_hi = next(a for a in acts if us[a] == vi.hi)
    if vi.hi - vi.lo <= 0:
        return [(a_hi, 1.0)]
    theta = min(1.0, max(0.0, (s - vi.lo) / (vi.hi - vi.lo)))
    return [(a_hi, theta), (a_lo, 1.0 - theta)]


def plan_to_outcome(game: FiniteGame, plan: BeliefPlan) -> OutcomeDistribution:
    """Recommendation-form outcome induced by a plan.

    Each selection is split between the lowest-index best response attaining
    ``V_lo`` and the lowest-index best response attaining ``V_hi``.
    """
    if plan.beliefs.shape[1] != game.n:
        raise InvalidInput("plan beliefs do not match the number of states")
    pi = np.zeros((game.n, game.m))
    for mu, w, s in plan.atoms():
        for a, share in _two_point(game, mu, s):
            if share > 0:
                pi[:, a] += w * share * mu
    return OutcomeDistribution(pi / pi.sum())


def outcome_to_plan(game: FiniteGame, pi: OutcomeDistribution, prior: Any = None,
                    tol: float = GROUP_TOL, drop: float = 1e-12) -> BeliefPlan:
    """Distribution of posteriors and conditional sender payoffs induced by ``pi``.

    Recommendations with total mass at most ``drop`` are LP dust and ignored.
    """
    p = game.prior if prior is None else np.asarray(prior, dtype=float)
    t = pi.table
    if t.shape != (game.n, game.m):
        raise InvalidInput("outcome table shape does not match the game")
    if np.max(np.abs(t.sum(axis=1) - p)) > 1e-9:
        raise InconsistentPrior("outcome rows do not sum to the prior")
    mass = t.sum(axis=0)
    acts = [a for a in range(game.m) if mass[a] > drop]
    post = np.array([t[:, a] / mass[a] for a in acts])
    B, W, S = [], [], []
    for idx in group_beliefs(post, tol):
        ws = mass[[acts[i] for i in idx]]
        B.append(ws @ post[idx] / ws.sum())
        W.append(ws.sum())
        S.append(ws @ game.sender_utility[[acts[i] for i in idx]] / ws.sum())
    W = np.array(W)
    return BeliefPlan(np.array(B), W / W.sum(), np.array(S))
