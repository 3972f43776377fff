"""Brute-force ground truth for desk-scale games.

Nothing here reuses the advantage machinery: the global optimum and the
Nash checks go through ``J`` values of enumerated policies, derivatives come
from finite differences of ``J`` along mixtures, and long-run statistics from
direct simulation.  The only shared piece is the stationary solve inside
:func:`evaluate`, which :func:`kemeny_by_first_passage` and the simulator
check independently.
"""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .chain_analytics import evaluate, induced_chain, is_ergodic, kemeny_constant
from .game_model import (DEFAULT_ENUMERATION_CAP, JointPolicy, TsgModel, as_joint_table,
                         count_deterministic_policies, enumerate_agent_policies,
                         enumerate_deterministic_policies, mix, mix_agent)
from .errors import CapacityError, NonErgodicChainError

LOCAL_DELTA_BAR = 0.05
LOCAL_GRID = 10
LOCAL_NE_NOTE = ("certificate covers deterministic deviation directions on a finite "
                 "delta grid; stochastic deviations are covered only through linearity")


@dataclass
class EnumerationResult:
    global_max_j: float
    global_argmax: JointPolicy
    ne_set: list
    kemeny_star: float
    table: list = None

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "actions", "eta", "zeta", "j", "kemeny", "is_ne"])
        for row in self.table or []:
            w.writerow([row["index"], " ".join(map(str, row["actions"])), repr(row["eta"]),
                        repr(row["zeta"]), repr(row["j"]), repr(row["kemeny"]), int(row["is_ne"])])
        return buf.getvalue()


def exhaustive_search(model: TsgModel, cap: int = DEFAULT_ENUMERATION_CAP, keep_table: bool = False,
                      ne_tol: float = 1e-12) -> EnumerationResult:
    """Evaluate every deterministic joint policy."""
    policies, js, etas, zetas, kem = [], [], [], [], []
    for pol in enumerate_deterministic_policies(model, cap):
        ev = evaluate(model, pol)
        policies.append(pol)
        js.append(ev.j_value)
        etas.append(ev.eta)
        zetas.append(ev.zeta)
        try:
            kem.append(kemeny_constant(ev.chain))
        except NonErgodicChainError:
            kem.append(float("nan"))
    j = np.array(js)
    # enumeration is lexicographic over (agent, state), so each agent's
    # deterministic policy is one axis of this reshape
    grid = j.reshape([n**model.num_states for n in model.action_sizes])
    is_ne = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.ndim):
        is_ne &= grid >= grid.max(axis=axis, keepdims=True) - ne_tol
    is_ne = is_ne.ravel()
    best = int(np.argmax(j))
    table = None
    if keep_table:
        table = [{"index": k, "actions": p.actions().ravel().tolist(), "eta": etas[k], "zeta": zetas[k],
                  "j": js[k], "kemeny": kem[k], "is_ne": bool(is_ne[k])} for k, p in enumerate(policies)]
    return EnumerationResult(float(j[best]), policies[best],
                             [p for p, ne in zip(policies, is_ne) if ne],
                             float(np.nanmax(kem)), table)


def kemeny_by_first_passage(chain) -> np.ndarray:
    """Per-start ``sum_j pi_j m_ij`` from mean first-passage times, one linear
    system per target state (``m_jj`` taken as the mean return time)."""
    chain = np.asarray(chain, dtype=float)
    n = chain.shape[0]
    m = np.zeros((n, n))
    for j in range(n):
        keep = [k for k in range(n) if k != j]
        sub = chain[np.ix_(keep, keep)]
        hit = np.linalg.solve(np.eye(n - 1) - sub, np.ones(n - 1))
        m[keep, j] = hit
        m[j, j] = 1.0 + chain[j, keep] @ hit
    # stationary vector from return times (Kac); independent of any LU solve
    pi = 1.0 / np.diag(m)
    return m @ pi


def max_kemeny(model: TsgModel, policies) -> float:
    return max(kemeny_constant(induced_chain(model, p)[0]) for p in policies)


# ---------------------------------------------------------------- simulation


@dataclass
class SimulationResult:
    eta_hat: float
    zeta_hat: float
    eta_se: float
    zeta_se: float
    rewards: np.ndarray = None


def _batch_se(x, batches=100):
    means = np.array([b.mean() for b in np.array_split(x, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


def simulate(model: TsgModel, policy, steps: int, seed: int = 0,
             keep_trajectory: bool = False) -> SimulationResult:
    """Run the chain from state 0; two-pass mean then squared deviation.
    Standard errors use 100 batch means."""
    if steps < 1:
        raise ValueError("steps must be positive")
    mu = as_joint_table(policy)
    act_cdf = [list(np.cumsum(row)) for row in mu]
    nxt = model.next_states.tolist()
    nxt_cdf = np.cumsum(model.next_probs, axis=2).tolist()
    rew = model.reward.tolist()
    rng = np.random.default_rng(seed)
    u_act = rng.random(steps).tolist()
    u_next = rng.random(steps).tolist()
    n_act = mu.shape[1] - 1
    k_max = model.next_states.shape[2] - 1
    out = [0.0] * steps
    s = 0
    for t in range(steps):
        a = min(bisect.bisect_right(act_cdf[s], u_act[t]), n_act)
        out[t] = rew[s][a]
        k = min(bisect.bisect_right(nxt_cdf[s][a], u_next[t]), k_max)
        s = nxt[s][a][k]
    r = np.array(out)
    eta = float(r.mean())
    dev = (r - eta) ** 2
    se = (_batch_se(r), _batch_se(dev)) if steps >= 200 else (float("nan"), float("nan"))
    return SimulationResult(eta, float(dev.mean()), se[0], se[1], r if keep_trajectory else None)


# ---------------------------------------------------------------- finite differences


def _j_along(model, mu, direction, delta):
    return evaluate(model, mix(mu, direction, delta)).j_value


def finite_difference_derivative(model: TsgModel, mu: JointPolicy, direction: JointPolicy,
                                 h: float = 1e-4) -> float:
    """One-sided Richardson estimate of ``dJ/d delta`` at ``delta = 0``.

    With ``D(h) = (J(h) - J(0)) / h``, the combination ``2 D(h/2) - D(h)``
    removes the first-order error term.
    """
    if not 0.0 < h <= 0.1:
        raise ValueError("h must lie in (0, 0.1]")
    j0 = evaluate(model, mu).j_value
    d_full = (_j_along(model, mu, direction, h) - j0) / h
    d_half = (_j_along(model, mu, direction, h / 2) - j0) / (h / 2)
    return 2.0 * d_half - d_full


def second_difference(model: TsgModel, mu: JointPolicy, direction: JointPolicy, h: float = 1e-3) -> float:
    """``(J(2h) - 2 J(h) + J(0)) / h^2`` along the joint mixture."""
    j = [_j_along(model, mu, direction, k * h) for k in range(3)]
    return (j[2] - 2 * j[1] + j[0]) / h**2


def deterministic_directions(policy: JointPolicy, agent: int, cap: int = 10**5):
    """Every deterministic policy of ``agent`` other than its current one."""
    n = policy.action_sizes[agent]
    s = policy.num_states
    if n**s > cap:
        raise CapacityError(n**s, cap)
    current = policy.per_agent[agent]
    for acts in enumerate_agent_policies(n, s):
        table = np.zeros((s, n))
        table[np.arange(s), acts] = 1.0
        if not np.array_equal(table, current):
            yield table


def verify_local_ne(model: TsgModel, policy: JointPolicy, grid: int = LOCAL_GRID,
                    delta_bar: float = LOCAL_DELTA_BAR, tol: float = 1e-10) -> bool:
    """No unilateral mixture toward a deterministic alternative on the grid
    ``delta_bar * k / grid`` raises ``J`` by more than ``tol``."""
    base = evaluate(model, policy).j_value
    deltas = [delta_bar * k / grid for k in range(1, grid + 1)]
    for agent in range(policy.num_agents):
        for direction in deterministic_directions(policy, agent):
            for d in deltas:
                if evaluate(model, mix_agent(policy, agent, direction, d)).j_value > base + tol:
                    return False
    return True


# ---------------------------------------------------------------- constructed games


def saddle_game(beta: float = 1.0) -> TsgModel:
    """Single-state two-agent game whose all-zero policy is a stationary
    saddle: agent 0 switching to action 1 raises the reward by exactly
    ``1 / beta``, which leaves the first-order term at zero."""
    if beta <= 0:
        raise ValueError("the saddle construction needs beta > 0")
    gap = 1.0 / beta
    reward = np.array([[0.0, -0.5 * gap, gap, 0.5 * gap]])
    transition = np.ones((1, 4, 1))
    return TsgModel.from_dense(transition, reward, (2, 2), beta)


def single_agent_saddle(beta: float = 1.0) -> TsgModel:
    reward = np.array([[0.0, 1.0 / beta]])
    return TsgModel.from_dense(np.ones((1, 2, 1)), reward, (2,), beta)


def duplicate_action_game(seed: int, num_states: int = 2, beta: float = 1.0) -> TsgModel:
    """Two agents with two actions each where agent 0's actions are exact
    copies for every choice of agent 1."""
    rng = np.random.default_rng(seed)
    base_p = rng.gamma(1.0, size=(num_states, 2, num_states)) + 0.05
    base_p /= base_p.sum(axis=2, keepdims=True)
    base_r = rng.uniform(0.0, 1.0, size=(num_states, 2))
    # joint index = a0 * 2 + a1, so tiling over a0 duplicates the rows
    transition = np.concatenate([base_p, base_p], axis=1)
    reward = np.concatenate([base_r, base_r], axis=1)
    return TsgModel.from_dense(transition, reward, (2, 2), beta)


def average_reward_policy_iteration_step(transition, reward, actions):
    """Classical average-reward improvement step for a single-agent MDP.

    ``transition`` is ``(S, A, S)``, ``reward`` ``(S, A)``; ``actions`` the
    current deterministic choice.  Uses the bias normalisation ``h[0] = 0``.
    """
    s = reward.shape[0]
    p = transition[np.arange(s), actions]
    r = reward[np.arange(s), actions]
    # unknowns: gain g and bias h[1:]; equations h = r - g + P h
    system = np.zeros((s, s))
    system[:, 0] = 1.0
    system[:, 1:] = (np.eye(s) - p)[:, 1:]
    sol = np.linalg.solve(system, r)
    gain, bias = sol[0], np.concatenate([[0.0], sol[1:]])
    q = reward + transition @ bias
    current = q[np.arange(s), actions]
    best = q.argmax(axis=1)
    improved = np.where(q[np.arange(s), best] > current + 1e-10, best, actions)
    return improved, gain


def is_ergodic_policy(model: TsgModel, policy) -> bool:
    return is_ergodic(induced_chain(model, policy)[0])


def deterministic_count(model: TsgModel) -> int:
    return count_deterministic_policies(model.action_sizes, model.num_states)
