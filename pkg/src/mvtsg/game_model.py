"""Finite team stochastic game model, joint policies and policy algebra.

Joint actions are stored flat with a mixed-radix encoding where agent 0 is
the most significant digit, so ``np.ravel_multi_index`` / ``np.unravel_index``
with ``action_sizes`` convert between flat and per-agent indices and a C-order
reshape of any ``(S, A)`` table gives an ``(S, A_0, ..., A_{N-1})`` tensor.

Transitions are kept as a fixed-width support list per ``(s, a)``: integer
next-state indices and their probabilities.  Dense games use the full state
range as support; structured games (the microgrid benchmark) only list the
handful of reachable successors.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError

ROW_SUM_TOL = 1e-12
DEFAULT_ENUMERATION_CAP = 10**7


def _frozen(arr, dtype=None):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TsgModel:
    """Finite MV-TSG ``<N, S, A, P, r>`` with trade-off coefficient ``beta``.

    Parameters
    ----------
    action_sizes : sequence of int
        ``|A_i|`` for every agent.
    next_states : ndarray, shape (S, A, K)
        Successor state indices for each (state, joint action).
    next_probs : ndarray, shape (S, A, K)
        Probabilities matching ``next_states``; each row sums to one.
    reward : ndarray, shape (S, A)
        Common reward.
    beta : float
        Mean-variance trade-off, ``J = eta - beta * zeta``.
    states, action_sets : optional labels
        Human-readable labels; default to integer ranges.
    """

    action_sizes: tuple
    next_states: np.ndarray
    next_probs: np.ndarray
    reward: np.ndarray
    beta: float
    states: tuple = None
    action_sets: tuple = None

    def __post_init__(self):
        sizes = tuple(int(a) for a in self.action_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("every agent needs at least one action")
        object.__setattr__(self, "action_sizes", sizes)
        nxt = _frozen(self.next_states, np.int64)
        prob = _frozen(self.next_probs, float)
        rew = _frozen(self.reward, float)
        s, a = rew.shape
        if a != math.prod(sizes):
            raise ValueError(f"reward has {a} joint actions, expected {math.prod(sizes)}")
        if nxt.shape != prob.shape or nxt.shape[:2] != (s, a):
            raise ValueError("transition support arrays must have shape (S, A, K)")
        if nxt.min() < 0 or nxt.max() >= s:
            raise ValueError("successor index out of range")
        if prob.min() < 0:
            raise ValueError("negative transition probability")
        worst = np.abs(prob.sum(axis=2) - 1.0).max()
        if worst > ROW_SUM_TOL:
            raise ValueError(f"transition rows must sum to 1 (worst deviation {worst:.3g})")
        if not np.isfinite(rew).all():
            raise ValueError("reward must be finite")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        object.__setattr__(self, "next_states", nxt)
        object.__setattr__(self, "next_probs", prob)
        object.__setattr__(self, "reward", rew)
        object.__setattr__(self, "beta", float(self.beta))
        if self.states is None:
            object.__setattr__(self, "states", tuple(range(s)))
        elif len(self.states) != s:
            raise ValueError("state labels do not match reward table")
        if self.action_sets is None:
            object.__setattr__(self, "action_sets", tuple(tuple(range(n)) for n in sizes))
        elif tuple(len(x) for x in self.action_sets) != sizes:
            raise ValueError("action labels do not match action sizes")

    @classmethod
    def from_dense(cls, transition, reward, action_sizes, beta, states=None, action_sets=None):
        """Build from a dense ``(S, A, S)`` kernel."""
        transition = np.asarray(transition, dtype=float)
        s, a, s2 = transition.shape
        if s != s2:
            raise ValueError("dense transition must be (S, A, S)")
        support = np.broadcast_to(np.arange(s), (s, a, s))
        return cls(action_sizes, support, transition, reward, beta, states, action_sets)

    @property
    def num_agents(self) -> int:
        return len(self.action_sizes)

    @property
    def num_states(self) -> int:
        return self.reward.shape[0]

    @property
    def num_joint_actions(self) -> int:
        return self.reward.shape[1]

    def with_beta(self, beta: float) -> "TsgModel":
        return TsgModel(self.action_sizes, self.next_states, self.next_probs, self.reward,
                        beta, self.states, self.action_sets)

    def dense_transition(self) -> np.ndarray:
        """Dense ``P[s, a, s']``; only sensible for small games."""
        s, a, _ = self.next_states.shape
        out = np.zeros((s, a, s))
        rows = np.arange(s)[:, None, None]
        cols = np.arange(a)[None, :, None]
        np.add.at(out, (rows, cols, self.next_states), self.next_probs)
        return out

    def encode(self, per_agent_actions) -> int:
        return int(np.ravel_multi_index(tuple(per_agent_actions), self.action_sizes))

    def decode(self, joint_action) -> tuple:
        return tuple(int(x) for x in np.unravel_index(joint_action, self.action_sizes))


def _check_distribution(table, name):
    if table.ndim != 2:
        raise ValueError(f"{name} must be a (states, actions) table")
    if table.min() < 0 or np.abs(table.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
        raise ValueError(f"{name} rows must be probability distributions")


@dataclass(frozen=True, eq=False)
class JointPolicy:
    """Product policy ``mu(a|s) = prod_i mu_i(a_i|s)``.

    ``per_agent[i]`` is an ``(S, |A_i|)`` table of action probabilities.
    """

    per_agent: tuple
    kind: str = None

    def __post_init__(self):
        tables = tuple(_frozen(p, float) for p in self.per_agent)
        if not tables:
            raise ValueError("a joint policy needs at least one agent")
        if len({t.shape[0] for t in tables}) != 1:
            raise ValueError("agent policies disagree on the number of states")
        for i, t in enumerate(tables):
            _check_distribution(t, f"agent {i} policy")
        object.__setattr__(self, "per_agent", tables)
        det = all(np.all((t == 0.0) | (t == 1.0)) for t in tables)
        kind = self.kind or ("deterministic" if det else "stochastic")
        if kind not in ("deterministic", "stochastic"):
            raise ValueError(f"unknown policy kind {kind!r}")
        if kind == "deterministic" and not det:
            raise ValueError("deterministic policy must put unit mass on one action per state")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def deterministic(cls, actions, action_sizes) -> "JointPolicy":
        """From an ``(N, S)`` array of chosen action indices."""
        actions = np.asarray(actions, dtype=np.int64)
        per = []
        for i, n in enumerate(action_sizes):
            table = np.zeros((actions.shape[1], n))
            table[np.arange(actions.shape[1]), actions[i]] = 1.0
            per.append(table)
        return cls(tuple(per), "deterministic")

    @classmethod
    def uniform(cls, model: TsgModel) -> "JointPolicy":
        return cls(tuple(np.full((model.num_states, n), 1.0 / n) for n in model.action_sizes))

    @property
    def num_agents(self) -> int:
        return len(self.per_agent)

    @property
    def num_states(self) -> int:
        return self.per_agent[0].shape[0]

    @property
    def action_sizes(self) -> tuple:
        return tuple(t.shape[1] for t in self.per_agent)

    @property
    def is_deterministic(self) -> bool:
        return self.kind == "deterministic"

    def actions(self) -> np.ndarray:
        """``(N, S)`` chosen actions; only for deterministic policies."""
        if not self.is_deterministic:
            raise ValueError("actions() requires a deterministic policy")
        return np.stack([t.argmax(axis=1) for t in self.per_agent])

    def joint_actions(self) -> np.ndarray:
        """Flat joint action per state for a deterministic policy."""
        return np.ravel_multi_index(tuple(self.actions()), self.action_sizes)

    def joint_table(self) -> np.ndarray:
        out = self.per_agent[0]
        for t in self.per_agent[1:]:
            out = (out[:, :, None] * t[:, None, :]).reshape(out.shape[0], -1)
        return out

    def replace_agent(self, agent: int, table) -> "JointPolicy":
        per = list(self.per_agent)
        per[agent] = table
        return JointPolicy(tuple(per))

    def others_table(self, agent: int) -> np.ndarray:
        """``(S, A_0, .., A_N-1)`` product of all agents except ``agent``, with a
        singleton axis in the agent's slot."""
        s = self.num_states
        out = np.ones((s,) + (1,) * self.num_agents)
        for j, t in enumerate(self.per_agent):
            if j == agent:
                continue
            shape = [s] + [1] * self.num_agents
            shape[j + 1] = t.shape[1]
            out = out * t.reshape(shape)
        return out

    def same_as(self, other: "JointPolicy") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.per_agent, other.per_agent))


@dataclass(frozen=True, eq=False)
class MixedPolicy:
    """Joint mixture ``(1 - delta) * base + delta * direction`` of two joint policies.

    The mixture of two product policies is in general correlated, so it is only
    available as a joint table.
    """

    base: JointPolicy
    direction: JointPolicy
    delta: float

    def joint_table(self) -> np.ndarray:
        d = self.delta
        return (1.0 - d) * self.base.joint_table() + d * self.direction.joint_table()


def as_joint_table(policy) -> np.ndarray:
    """``(S, A)`` joint action distribution for any policy-like object."""
    if hasattr(policy, "joint_table"):
        return policy.joint_table()
    table = np.asarray(policy, dtype=float)
    _check_distribution(table, "joint policy table")
    return table


def joint_probability(model: TsgModel, policy: JointPolicy, state: int, joint_action: int) -> float:
    if not 0 <= state < model.num_states:
        raise IndexError(f"state {state} out of range")
    if not 0 <= joint_action < model.num_joint_actions:
        raise IndexError(f"joint action {joint_action} out of range")
    acts = model.decode(joint_action)
    return float(math.prod(policy.per_agent[i][state, a] for i, a in enumerate(acts)))


def mix(base, direction, delta: float):
    """Convex combination ``(1 - delta) base + delta direction``.

    Agent-policy arrays mix to an array, joint policies to a :class:`MixedPolicy`.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if isinstance(base, JointPolicy) and isinstance(direction, JointPolicy):
        if base.action_sizes != direction.action_sizes or base.num_states != direction.num_states:
            raise ValueError("policies have different shapes")
        return MixedPolicy(base, direction, float(delta))
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if base.shape != direction.shape:
        raise ValueError("policies have different shapes")
    if delta == 0.0:
        return base.copy()
    if delta == 1.0:
        return direction.copy()
    out = (1.0 - delta) * base + delta * direction
    _check_distribution(out, "mixed policy")
    return out


def mix_agent(policy: JointPolicy, agent: int, direction, delta: float) -> JointPolicy:
    """Unilateral mixture: agent ``agent`` plays ``(1-delta) mu_i + delta mu_i'``."""
    return policy.replace_agent(agent, mix(policy.per_agent[agent], direction, delta))


def count_deterministic_policies(action_sizes, num_states) -> int:
    return math.prod(n**num_states for n in action_sizes)


def enumerate_deterministic_policies(model: TsgModel, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[JointPolicy]:
    """Every deterministic joint policy, lexicographic over (agent, state) slots."""
    required = count_deterministic_policies(model.action_sizes, model.num_states)
    if required > cap:
        raise CapacityError(required, cap)
    s = model.num_states
    ranges = [range(n) for n in model.action_sizes for _ in range(s)]
    for flat in itertools.product(*ranges):
        yield JointPolicy.deterministic(np.reshape(flat, (model.num_agents, s)), model.action_sizes)


def enumerate_agent_policies(num_actions: int, num_states: int) -> np.ndarray:
    """All deterministic single-agent policies as an ``(n^S, S)`` action array."""
    grids = np.meshgrid(*[np.arange(num_actions)] * num_states, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def random_toy_game(seed: int, num_agents: int = 2, num_states: int = 2,
                    actions_per_agent: int = 2, beta: float = 1.0) -> TsgModel:
    """Small dense game with strictly positive transitions and rewards in [0, 1)."""
    if min(num_agents, num_states, actions_per_agent) < 1:
        raise ValueError("game dimensions must be positive")
    rng = np.random.default_rng(seed)
    sizes = (actions_per_agent,) * num_agents
    a = math.prod(sizes)
    raw = rng.gamma(1.0, size=(num_states, a, num_states)) + 0.05
    transition = raw / raw.sum(axis=2, keepdims=True)
    reward = rng.uniform(0.0, 1.0, size=(num_states, a))
    return TsgModel.from_dense(transition, reward, sizes, beta)


def random_policy(model: TsgModel, rng: np.random.Generator, deterministic: bool = False) -> JointPolicy:
    if deterministic:
        acts = np.stack([rng.integers(n, size=model.num_states) for n in model.action_sizes])
        return JointPolicy.deterministic(acts, model.action_sizes)
    tables = []
    for n in model.action_sizes:
        raw = rng.gamma(1.0, size=(model.num_states, n)) + 1e-3
        tables.append(raw / raw.sum(axis=1, keepdims=True))
    return JointPolicy(tuple(tables))


def model_to_dict(model: TsgModel) -> dict:
    return {
        "num_agents": model.num_agents,
        "states": list(model.states),
        "action_sets": [list(x) for x in model.action_sets],
        "transition": model.dense_transition().tolist(),
        "reward": model.reward.tolist(),
        "beta": model.beta,
    }


def model_from_dict(doc: dict) -> TsgModel:
    action_sets = [tuple(x) for x in doc["action_sets"]]
    if len(action_sets) != doc["num_agents"]:
        raise ValueError("num_agents does not match action_sets")
    return TsgModel.from_dense(doc["transition"], doc["reward"], [len(x) for x in action_sets],
                               doc["beta"], tuple(doc["states"]), tuple(action_sets))


def save_model(model: TsgModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path) -> TsgModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def policy_from_actions(model: TsgModel, actions: Sequence[Sequence[int]]) -> JointPolicy:
    return JointPolicy.deterministic(actions, model.action_sizes)
