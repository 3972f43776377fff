"""Per-agent policy updates: natural-gradient trust region and clipped surrogate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import NumericalDegeneracyError
from .batch import Samples
from .params import Adam, SoftmaxPolicyParams, clip_norm, scatter_rows, softmax

CG_ITERS = 10
CG_DAMPING = 1e-5
BACKTRACK_TRIES = 10


@dataclass
class StepInfo:
    accepted: bool
    mean_kl: float
    improvement: float
    scale: float = 0.0


def _onehot(actions, width):
    out = np.zeros((len(actions), width))
    out[np.arange(len(actions)), actions] = 1.0
    return out


def mean_kl(p_old, p_new, weights) -> float:
    """Sample-weighted ``KL(old || new)`` of the agent's action distribution."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p_old > 0, p_old * (np.log(p_old) - np.log(p_new)), 0.0).sum(axis=1)
    return float(weights @ terms / weights.sum())


def surrogate(ratio, m_weights, weights) -> float:
    return float(weights @ (ratio * m_weights) / weights.sum())


def surrogate_gradient(theta, samples: Samples, agent: int) -> np.ndarray:
    """Gradient at ``theta`` of ``sum_n w_n M_n mu_theta(a_n|s_n) / mu_theta0(a_n|s_n)``
    evaluated at ``theta = theta0``."""
    p = softmax(theta[samples.feats].sum(axis=1))
    a = samples.actions[:, agent]
    coef = samples.weights * samples.m_weights / samples.weights.sum()
    return scatter_rows(samples.feats, coef[:, None] * (_onehot(a, p.shape[1]) - p), theta.shape[0])


def fisher_vector_product(p, samples: Samples, weights, num_features):
    """Closure computing ``F v`` for the state-weighted categorical Fisher
    (the Hessian of the mean KL at the current parameters)."""
    w = weights / weights.sum()

    def apply(v):
        u = v[samples.feats].sum(axis=1)
        pu = p * u
        out = pu - p * pu.sum(axis=1, keepdims=True)
        return scatter_rows(samples.feats, w[:, None] * out, num_features)

    return apply


def trust_region_step(agent: int, samples: Samples, policy: SoftmaxPolicyParams, kl_epsilon: float = 0.01,
                      cg_iters: int = CG_ITERS, damping: float = CG_DAMPING,
                      tries: int = BACKTRACK_TRIES) -> tuple[SoftmaxPolicyParams, StepInfo]:
    """Natural-gradient step of ``agent`` on the importance-weighted surrogate,
    backtracked until the surrogate improves and the mean KL stays within
    ``kl_epsilon``; otherwise the current parameters are kept."""
    theta = policy.logits[agent]
    a = samples.actions[:, agent]
    rows = np.arange(len(samples))
    p_old = softmax(theta[samples.feats].sum(axis=1))
    g = surrogate_gradient(theta, samples, agent)
    if not np.all(np.isfinite(g)):
        raise NumericalDegeneracyError("non-finite surrogate gradient")
    if not np.any(g):
        return policy, StepInfo(False, 0.0, 0.0)
    fvp = fisher_vector_product(p_old, samples, samples.weights, theta.shape[0])
    shape = theta.shape
    op = LinearOperator((g.size, g.size), matvec=lambda v: (fvp(v.reshape(shape)) + damping * v.reshape(shape)).ravel(),
                        dtype=float)
    x, _ = cg(op, g.ravel(), rtol=1e-10, atol=0.0, maxiter=cg_iters)
    x = x.reshape(shape)
    gx = float(np.sum(g * x))
    if not gx > 0:
        return policy, StepInfo(False, 0.0, 0.0)
    step = math.sqrt(2.0 * kl_epsilon / gx) * x
    base = surrogate(np.ones(len(samples)), samples.m_weights, samples.weights)
    scale = 1.0
    for _ in range(tries):
        cand = theta + scale * step
        p_new = softmax(cand[samples.feats].sum(axis=1))
        kl = mean_kl(p_old, p_new, samples.weights)
        gain = surrogate(p_new[rows, a] / p_old[rows, a], samples.m_weights, samples.weights) - base
        if gain > 0 and kl <= kl_epsilon:
            return policy.with_agent(agent, cand), StepInfo(True, kl, gain, scale)
        scale *= 0.5
    return policy, StepInfo(False, 0.0, 0.0)


def clip_surrogate_gradient(theta, p_old_a, samples: Samples, agent: int, idx, clip_epsilon: float):
    feats = samples.feats[idx]
    a = samples.actions[idx, agent]
    p = softmax(theta[feats].sum(axis=1))
    ratio = p[np.arange(len(idx)), a] / p_old_a[idx]
    m = samples.m_weights[idx]
    w = samples.weights[idx] / samples.weights[idx].sum()
    clipped = ((m > 0) & (ratio > 1 + clip_epsilon)) | ((m < 0) & (ratio < 1 - clip_epsilon))
    coef = np.where(clipped, 0.0, w * m * ratio)
    return scatter_rows(feats, coef[:, None] * (_onehot(a, p.shape[1]) - p), theta.shape[0])


def clip_step(agent: int, samples: Samples, policy: SoftmaxPolicyParams, clip_epsilon: float = 0.2,
              lr: float = 5e-3, epochs: int = 5, num_minibatch: int = 40, max_grad_norm: float = 0.5,
              rng: np.random.Generator = None) -> tuple[SoftmaxPolicyParams, StepInfo]:
    """Adam ascent on ``min(ratio M, clip(ratio, 1 -+ eps) M)``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    theta = policy.logits[agent].copy()
    rows = np.arange(len(samples))
    a = samples.actions[:, agent]
    p_old = softmax(theta[samples.feats].sum(axis=1))
    p_old_a = p_old[rows, a]
    opt = Adam(theta.shape, lr)
    k = max(1, min(num_minibatch, len(samples)))
    for _ in range(epochs):
        for idx in np.array_split(rng.permutation(len(samples)), k):
            grad = clip_surrogate_gradient(theta, p_old_a, samples, agent, idx, clip_epsilon)
            if not np.all(np.isfinite(grad)):
                raise NumericalDegeneracyError("non-finite clip gradient")
            # Adam descends, so feed the negated ascent direction
            theta += opt.step(-clip_norm(grad, max_grad_norm))
    p_new = softmax(theta[samples.feats].sum(axis=1))
    gain = surrogate(p_new[rows, a] / p_old_a, samples.m_weights, samples.weights) - \
        surrogate(np.ones(len(samples)), samples.m_weights, samples.weights)
    return policy.with_agent(agent, theta), StepInfo(True, mean_kl(p_old, p_new, samples.weights), gain, 1.0)
