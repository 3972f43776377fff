"""Linear-softmax actors, linear critics and a small Adam optimiser.

States reach the learner as a fixed-width list of active binary feature
indices.  A tabular parameterisation is the special case of one index per
state, so ``theta[feature, action]`` is then literally a logit table.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def scatter_rows(feats, values, num_features):
    """``out[f] += values[n]`` for every active feature ``f`` of sample ``n``.

    ``feats`` is ``(n, m)``; ``values`` is ``(n,)`` or ``(n, A)``.
    """
    n, m = feats.shape
    flat = feats.ravel()
    if values.ndim == 1:
        return np.bincount(flat, weights=np.repeat(values, m), minlength=num_features)
    width = values.shape[1]
    idx = (flat[:, None] * width + np.arange(width)[None, :]).ravel()
    rep = np.repeat(values, m, axis=0).ravel()
    return np.bincount(idx, weights=rep, minlength=num_features * width).reshape(num_features, width)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class SoftmaxPolicyParams:
    """One ``(num_features, |A_i|)`` weight table per agent."""

    logits: list
    temperature: float = 1.0

    @classmethod
    def zeros(cls, num_features: int, action_sizes) -> "SoftmaxPolicyParams":
        return cls([np.zeros((num_features, n)) for n in action_sizes])

    @property
    def num_agents(self) -> int:
        return len(self.logits)

    def agent_logits(self, agent: int, feats) -> np.ndarray:
        return self.logits[agent][feats].sum(axis=-2)

    def probs(self, agent: int, feats) -> np.ndarray:
        return softmax(self.agent_logits(agent, feats))

    def with_agent(self, agent: int, theta) -> "SoftmaxPolicyParams":
        out = list(self.logits)
        out[agent] = theta
        return SoftmaxPolicyParams(out, self.temperature)

    def copy(self) -> "SoftmaxPolicyParams":
        return SoftmaxPolicyParams([t.copy() for t in self.logits], self.temperature)

    def tables(self, state_feats) -> list:
        """Per-agent ``(S, |A_i|)`` probability tables over enumerated states."""
        return [self.probs(i, state_feats) for i in range(self.num_agents)]


@dataclass
class CriticParams:
    """Linear value function ``V(s) = sum of weights over active features``."""

    weights: np.ndarray

    @classmethod
    def zeros(cls, num_features: int) -> "CriticParams":
        return cls(np.zeros(num_features))

    def value(self, feats) -> np.ndarray:
        return self.weights[feats].sum(axis=-1)

    def copy(self) -> "CriticParams":
        return CriticParams(self.weights.copy())


class Adam:
    def __init__(self, shape, lr=5e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, grad) -> np.ndarray:
        """Increment to add to the parameters for descent on ``grad``."""
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        m_hat = self.m / (1 - self.b1**self.t)
        v_hat = self.v / (1 - self.b2**self.t)
        return -self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_norm(grad, max_norm):
    if max_norm is None:
        return grad
    norm = float(np.sqrt(np.sum(grad * grad)))
    return grad * (max_norm / norm) if norm > max_norm else grad


def tabular_features(num_states: int) -> np.ndarray:
    return np.arange(num_states)[:, None]
