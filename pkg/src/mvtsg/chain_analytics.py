"""Exact evaluation of joint policies on a :class:`TsgModel`.

Everything here works on the joint action table ``mu[s, a]`` so correlated
mixtures (as produced by :func:`mvtsg.game_model.mix`) evaluate the same way
as product policies.  The value function is the fundamental-matrix solution
``(I - P + e pi) V = f``, which satisfies ``pi V = J``; advantages do not
depend on that normalisation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import NonErgodicChainError, PreconditionError
from .game_model import JointPolicy, TsgModel, as_joint_table
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True, eq=False)
class PolicyEval:
    stationary: np.ndarray
    eta: float
    zeta: float
    j_value: float
    surrogate_reward: np.ndarray
    value: np.ndarray
    q_value: np.ndarray
    advantage: np.ndarray
    chain: np.ndarray
    policy_table: np.ndarray

    def state_advantage(self, table) -> np.ndarray:
        """``E_{a ~ table(.|s)} A_f(s, a)`` for every state."""
        return (np.asarray(table) * self.advantage).sum(axis=1)


@dataclass(frozen=True)
class BoundReport:
    surrogate_gain: float
    eta_surrogate_gain: float
    kemeny_star: float
    eps_f: float
    eps_eta: float
    tv_divergence: float
    h_term: float
    lower_bound: float
    actual_difference: float

    @property
    def holds(self) -> bool:
        return self.actual_difference >= self.lower_bound - 1e-8

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def induced_chain(model: TsgModel, policy) -> tuple[np.ndarray, np.ndarray]:
    """State transition matrix ``P^mu`` and per-state expected reward."""
    mu = as_joint_table(policy)
    s = model.num_states
    rows, cols = np.nonzero(mu)
    w = mu[rows, cols][:, None] * model.next_probs[rows, cols]
    flat = rows[:, None] * s + model.next_states[rows, cols]
    chain = np.bincount(flat.ravel(), weights=w.ravel(), minlength=s * s).reshape(s, s)
    rbar = (mu * model.reward).sum(axis=1)
    return chain, rbar


def _lu_checked(matrix, tol: Tolerances, what: str):
    with warnings.catch_warnings():
        # singularity is reported through the condition estimate below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(matrix, check_finite=False)
    anorm = np.abs(matrix).sum(axis=0).max()
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or not rcond > tol.rcond:
        raise NonErgodicChainError(f"{what} is singular (rcond={rcond:.3g}); chain is not ergodic")
    return lu, piv


def stationary_distribution(chain, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Solve ``pi (I - P) = 0, pi e = 1`` with the last balance equation
    replaced by the normalisation constraint."""
    chain = np.asarray(chain, dtype=float)
    n = chain.shape[0]
    system = np.eye(n) - chain.T
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    lu = _lu_checked(system, tol, "stationary system")
    pi = sla.lu_solve(lu, rhs, check_finite=False)
    if pi.min() < -1e-10 or np.abs(pi @ chain - pi).max() > tol.stationary_residual:
        raise NonErgodicChainError("stationary solve produced an invalid distribution")
    return np.clip(pi, 0.0, None)


def _gather_next(model: TsgModel, vector) -> np.ndarray:
    """``sum_s' P(s'|s,a) vector[s']`` for every (s, a)."""
    return np.einsum("sak,sak->sa", model.next_probs, vector[model.next_states])


def _poisson(chain, pi, state_reward, tol):
    n = chain.shape[0]
    system = np.eye(n) - chain + np.outer(np.ones(n), pi)
    lu = _lu_checked(system, tol, "Poisson system")
    return sla.lu_solve(lu, state_reward, check_finite=False)


def evaluate(model: TsgModel, policy, tol: Tolerances = DEFAULT) -> PolicyEval:
    """Stationary distribution, mean, variance, ``J``, surrogate reward and
    the Poisson value / Q / advantage tables for ``policy``."""
    mu = as_joint_table(policy)
    chain, rbar = induced_chain(model, mu)
    pi = stationary_distribution(chain, tol)
    r = model.reward
    eta = float(pi @ rbar)
    dev2 = (r - eta) ** 2
    zeta = float(pi @ (mu * dev2).sum(axis=1))
    f = r - model.beta * dev2
    j = eta - model.beta * zeta
    value = _poisson(chain, pi, (mu * f).sum(axis=1), tol)
    q = f - j + _gather_next(model, value)
    return PolicyEval(pi, eta, zeta, j, f, value, q, q - value[:, None], chain, mu)


def reward_advantage(model: TsgModel, ev: PolicyEval, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Average-reward advantage of the raw reward (the ``beta = 0`` case)."""
    mu = ev.policy_table
    value = _poisson(ev.chain, ev.stationary, (mu * model.reward).sum(axis=1), tol)
    return model.reward - ev.eta + _gather_next(model, value) - value[:, None]


def poisson_residual(model: TsgModel, ev: PolicyEval) -> float:
    """``max_s |V(s) - [f(s) - J + sum_s' P(s'|s) V(s')]|``."""
    f_state = (ev.policy_table * ev.surrogate_reward).sum(axis=1)
    return float(np.abs(ev.value - (f_state - ev.j_value + ev.chain @ ev.value)).max())


# ---------------------------------------------------------------- ergodicity


def chain_period(chain) -> int:
    """Period of an irreducible chain (gcd of level differences along edges)."""
    adj = np.asarray(chain) > 0
    order, pred = breadth_first_order(adj.astype(float), 0, directed=True, return_predecessors=True)
    level = np.full(adj.shape[0], -1)
    level[0] = 0
    for node in order[1:]:
        level[node] = level[pred[node]] + 1
    src, dst = np.nonzero(adj)
    ok = (level[src] >= 0) & (level[dst] >= 0)
    diffs = np.abs(level[src[ok]] + 1 - level[dst[ok]])
    return int(reduce(math.gcd, diffs.tolist(), 0))


def is_irreducible(chain) -> bool:
    n, _ = connected_components(np.asarray(chain) > 0, directed=True, connection="strong")
    return n == 1


def is_ergodic(chain) -> bool:
    return is_irreducible(chain) and chain_period(chain) == 1


def check_ergodic(model: TsgModel, policy=None) -> bool:
    """Irreducibility and aperiodicity of the induced chain (uniform policy by default)."""
    policy = policy if policy is not None else JointPolicy.uniform(model)
    ok = is_ergodic(induced_chain(model, policy)[0])
    if not ok:
        warnings.warn("induced chain is not irreducible and aperiodic", RuntimeWarning, stacklevel=2)
    return ok


# ---------------------------------------------------------------- Kemeny


def fundamental_matrix(chain, pi=None, tol: Tolerances = DEFAULT) -> np.ndarray:
    chain = np.asarray(chain, dtype=float)
    pi = stationary_distribution(chain, tol) if pi is None else pi
    n = chain.shape[0]
    lu = _lu_checked(np.eye(n) - chain + np.outer(np.ones(n), pi), tol, "fundamental matrix")
    return sla.lu_solve(lu, np.eye(n), check_finite=False)


def kemeny_constant(chain, tol: Tolerances = DEFAULT) -> float:
    """``sum_j pi_j m_ij`` with ``m_jj = 1 / pi_j``; equals ``trace(Z)``."""
    chain = np.asarray(chain, dtype=float)
    if not is_ergodic(chain):
        raise NonErgodicChainError("Kemeny's constant needs an irreducible aperiodic chain")
    pi = stationary_distribution(chain, tol)
    z = fundamental_matrix(chain, pi, tol)
    diag = np.diag(z)
    # m_ij = (z_jj - z_ij) / pi_j off the diagonal, 1 / pi_j on it
    passage = (diag[None, :] - z) / pi[None, :]
    passage[np.diag_indices_from(passage)] = 1.0 / pi
    per_start = passage @ pi
    if np.ptp(per_start) > tol.kemeny_start * max(1.0, abs(per_start[0])):
        raise ArithmeticError("Kemeny constant depends on the start state")
    return float(np.trace(z))


def policy_kemeny(model: TsgModel, policy, tol: Tolerances = DEFAULT) -> float:
    return kemeny_constant(induced_chain(model, policy)[0], tol)


# ---------------------------------------------------------------- sensitivity formulas


def performance_difference_residual(model: TsgModel, mu, mu_prime, tol: Tolerances = DEFAULT,
                                    mean_shift_sign: float = 1.0) -> float:
    """``|J(mu') - J(mu) - E_{pi', mu'}[A_f^mu] - beta (eta' - eta)^2|``.

    ``mean_shift_sign`` flips the sign of the squared-mean term; it is a
    fault-injection hook for the verification suite.
    """
    ev = evaluate(model, mu, tol)
    ev2 = evaluate(model, mu_prime, tol)
    first = float(ev2.stationary @ ev.state_advantage(ev2.policy_table))
    rhs = first + mean_shift_sign * model.beta * (ev2.eta - ev.eta) ** 2
    return abs((ev2.j_value - ev.j_value) - rhs)


def performance_derivative(model: TsgModel, mu, direction, ev: PolicyEval = None,
                           tol: Tolerances = DEFAULT) -> float:
    """``dJ/d delta`` at ``delta = 0`` along the joint mixture toward ``direction``."""
    ev = ev if ev is not None else evaluate(model, mu, tol)
    return float(ev.stationary @ ev.state_advantage(as_joint_table(direction)))


def tv_divergence(pi, table_new, table_old) -> float:
    return float(pi @ (0.5 * np.abs(table_new - table_old).sum(axis=1)))


def trust_region_bound(model: TsgModel, mu, mu_prime, kemeny_star: float,
                       tol: Tolerances = DEFAULT, check_kemeny: bool = True) -> BoundReport:
    """Mean-variance trust-region lower bound on ``J(mu') - J(mu)``."""
    ev = evaluate(model, mu, tol)
    ev2 = evaluate(model, mu_prime, tol)
    new = ev2.policy_table
    if check_kemeny:
        need = max(kemeny_constant(ev.chain, tol), kemeny_constant(ev2.chain, tol))
        if kemeny_star < need - 1e-9:
            raise PreconditionError(f"kemeny_star={kemeny_star} below policy Kemeny constant {need}")
    pi = ev.stationary
    per_f = ev.state_advantage(new)
    per_r = (new * reward_advantage(model, ev, tol)).sum(axis=1)
    l_f, l_r = float(pi @ per_f), float(pi @ per_r)
    eps_f, eps_r = float(np.abs(per_f).max()), float(np.abs(per_r).max())
    d_tv = tv_divergence(pi, new, ev.policy_table)
    slack = 2.0 * (kemeny_star - 1.0)
    h = max(0.0, l_r - slack * eps_r * d_tv, -l_r - slack * eps_r * d_tv)
    lower = l_f - slack * eps_f * d_tv + model.beta * h * h
    return BoundReport(l_f, l_r, float(kemeny_star), eps_f, eps_r, d_tv, h, lower,
                       ev2.j_value - ev.j_value)


# ---------------------------------------------------------------- multi-agent decomposition


def expected_over_agents(table, action_sizes: Sequence[int], dists: Sequence) -> np.ndarray:
    """``sum_a prod_i dists[i](a_i|s) table(s, a)`` for every state."""
    out = np.asarray(table).reshape((table.shape[0],) + tuple(action_sizes))
    for d in dists:
        # contract the leading agent axis each time
        out = np.einsum("sa...,sa->s...", out, np.asarray(d))
    return out


def multi_agent_advantage(ev: PolicyEval, base: JointPolicy, order: Sequence[int], h: int,
                          prefix: JointPolicy, candidate) -> np.ndarray:
    """Per-state ``E_{a_{i_1:h-1} ~ prefix, a_{i_h} ~ candidate}[A_{f,i_h}^mu]``.

    Computed by marginalising the joint advantage over the agents outside
    ``i_{1:h}`` under ``base`` (the multi-agent Q/advantage definition).
    ``h`` is 1-based.
    """
    sizes = base.action_sizes
    leading = set(order[: h - 1])

    def dists(with_candidate):
        out = []
        for j in range(base.num_agents):
            if j in leading:
                out.append(prefix.per_agent[j])
            elif j == order[h - 1] and with_candidate:
                out.append(candidate)
            else:
                out.append(base.per_agent[j])
        return out

    return (expected_over_agents(ev.advantage, sizes, dists(True))
            - expected_over_agents(ev.advantage, sizes, dists(False)))


def _mean_kl(pi, p, q) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    return float(pi @ terms.sum(axis=1))


def sequential_lower_bound(model: TsgModel, mu: JointPolicy, mu_prime: JointPolicy,
                           order: Sequence[int], kemeny_star: float,
                           tol: Tolerances = DEFAULT) -> dict:
    """Per-agent decomposition ``J(mu) + sum_h [L_h - W_h]`` of the KL bound."""
    ev = evaluate(model, mu, tol)
    pi = ev.stationary
    eps_f = float(np.abs(ev.state_advantage(mu_prime.joint_table())).max())
    gains, penalties = [], []
    for h, agent in enumerate(order, start=1):
        per = multi_agent_advantage(ev, mu, order, h, mu_prime, mu_prime.per_agent[agent])
        gains.append(float(pi @ per))
        kl = _mean_kl(pi, mu_prime.per_agent[agent], mu.per_agent[agent])
        penalties.append((kemeny_star - 1.0) * eps_f * math.sqrt(2.0 * kl))
    return {
        "gains": gains,
        "penalties": penalties,
        "lower_bound": ev.j_value + sum(gains) - sum(penalties),
        "j_new": evaluate(model, mu_prime, tol).j_value,
        "j_old": ev.j_value,
    }
