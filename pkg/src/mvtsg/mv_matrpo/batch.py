"""Trajectory collection and the per-batch estimates (running statistics,
surrogate reward, GAE, critic targets, importance-weight propagation)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chain_analytics import evaluate
from ..errors import NumericalDegeneracyError
from ..game_model import JointPolicy, TsgModel
from .params import Adam, CriticParams, SoftmaxPolicyParams, clip_norm, scatter_rows, tabular_features


class ExactEnv:
    """Sampling view of a :class:`TsgModel`.

    ``features="tabular"`` gives one indicator per state.  ``"components"``
    one-hot encodes each coordinate of tuple-valued state labels and adds a
    bias feature, so values and logits are shared across states.
    """

    def __init__(self, model: TsgModel, features: str = "tabular"):
        self.model = model
        self.action_sizes = model.action_sizes
        if features == "tabular":
            self._table = tabular_features(model.num_states)
        elif features == "components":
            labels = np.array(model.states, dtype=np.int64)
            if labels.ndim != 2:
                raise ValueError("component features need tuple-valued state labels")
            widths = labels.max(axis=0) + 1
            offsets = np.concatenate([[0], np.cumsum(widths)[:-1]])
            bias = np.full((model.num_states, 1), widths.sum())
            self._table = np.concatenate([labels + offsets, bias], axis=1)
        else:
            raise ValueError(f"unknown feature map {features!r}")
        self.features = features
        self.num_features = int(self._table.max()) + 1

    def state_features(self, states) -> np.ndarray:
        return self._table[np.asarray(states)]

    def all_state_features(self) -> np.ndarray:
        return self._table


class Collector:
    """``B`` persistent workers, each with its own generator and current state."""

    def __init__(self, env, num_workers: int, seeds):
        self.env = env
        self.num_workers = num_workers
        ss = seeds if isinstance(seeds, np.random.SeedSequence) else np.random.SeedSequence(seeds)
        self.rngs = [np.random.default_rng(s) for s in ss.spawn(num_workers)]
        if isinstance(env, ExactEnv):
            self.states = np.zeros(num_workers, dtype=np.int64)
        else:
            self.workers = []
            for rng in self.rngs:
                w = type(env)(env.spec, env.beta, 0)
                w.rng = rng
                self.workers.append(w)

    def collect(self, policy: SoftmaxPolicyParams, T: int) -> "Batch":
        if T < 2:
            raise ValueError("trajectory length must be at least 2")
        if isinstance(self.env, ExactEnv):
            return self._collect_exact(policy, T)
        return self._collect_sampled(policy, T)

    def _sample(self, probs, u):
        cdf = np.cumsum(probs, axis=-1)
        return np.minimum((u[..., None] > cdf).sum(axis=-1), probs.shape[-1] - 1)

    def _collect_exact(self, policy, T):
        model = self.env.model
        n_agents = model.num_agents
        B = self.num_workers
        draws = np.stack([rng.random((T, n_agents + 1)) for rng in self.rngs], axis=1)  # (T, B, N+1)
        states = np.zeros((B, T + 1), dtype=np.int64)
        actions = np.zeros((B, T, n_agents), dtype=np.int64)
        rewards = np.zeros((B, T))
        s = self.states.copy()
        for t in range(T):
            states[:, t] = s
            f = self.env.state_features(s)
            acts = [self._sample(policy.probs(i, f), draws[t, :, i]) for i in range(n_agents)]
            actions[:, t] = np.stack(acts, axis=1)
            joint = np.ravel_multi_index(tuple(acts), model.action_sizes)
            rewards[:, t] = model.reward[s, joint]
            k = self._sample(model.next_probs[s, joint], draws[t, :, n_agents])
            s = model.next_states[s, joint, k]
        states[:, T] = s
        self.states = s
        return Batch(self.env.state_features(states), actions, rewards, states)

    def _collect_sampled(self, policy, T):
        B = self.num_workers
        n_agents = policy.num_agents
        m = self.workers[0].features().shape[0]
        feats = np.zeros((B, T + 1, m), dtype=np.int64)
        actions = np.zeros((B, T, n_agents), dtype=np.int64)
        rewards = np.zeros((B, T))
        for b, (w, rng) in enumerate(zip(self.workers, self.rngs)):
            for t in range(T):
                f = w.features()
                feats[b, t] = f
                u = rng.random(n_agents)
                a = [int(self._sample(policy.probs(i, f[None, :])[0], u[i])) for i in range(n_agents)]
                actions[b, t] = a
                _, rewards[b, t] = w.step(a)
                if not (0 <= w.state[:, 2].min() and w.state[:, 2].max() <= w.spec.storage_capacity):
                    raise AssertionError("storage left its admissible range")
            feats[b, T] = w.features()
        return Batch(feats, actions, rewards)


@dataclass
class Batch:
    """``B x T`` trajectories; ``feats`` has ``T + 1`` entries per worker."""

    feats: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    states: np.ndarray = None
    surrogate_rewards: np.ndarray = None
    advantages: np.ndarray = None
    critic_targets: np.ndarray = None
    m_weights: np.ndarray = None

    @property
    def shape(self):
        return self.rewards.shape

    def samples(self) -> "Samples":
        """Flatten to equally weighted samples for the update steps."""
        B, T = self.shape
        n = B * T
        flat = lambda x: None if x is None else x.reshape(n, *x.shape[2:])
        return Samples(self.feats[:, :T].reshape(n, -1), self.actions.reshape(n, -1),
                       np.full(n, 1.0 / n), flat(self.m_weights), flat(self.critic_targets))


@dataclass
class Samples:
    feats: np.ndarray
    actions: np.ndarray
    weights: np.ndarray
    m_weights: np.ndarray = None
    targets: np.ndarray = None

    def __len__(self):
        return len(self.weights)


def collect(env, policy: SoftmaxPolicyParams, B: int, T: int, seeds) -> Batch:
    """One-shot collection from state 0 with ``B`` independent workers."""
    return Collector(env, B, seeds).collect(policy, T)


def policy_from_params(env: ExactEnv, policy: SoftmaxPolicyParams) -> JointPolicy:
    return JointPolicy(tuple(policy.tables(env.all_state_features())))


def exact_samples(model: TsgModel, joint: JointPolicy, min_weight: float = 1e-12) -> Samples:
    """Every (state, joint action) pair weighted by ``pi(s) mu(a|s)``, with the
    exact advantage as ``m_weights``; the infinite-batch limit of a batch.

    Pairs with weight below ``min_weight`` are dropped: a finite batch would
    essentially never log them and their ratios are numerically meaningless.
    """
    ev = evaluate(model, joint)
    w = (ev.stationary[:, None] * ev.policy_table).ravel()
    s_idx, a_idx = np.meshgrid(np.arange(model.num_states), np.arange(model.num_joint_actions), indexing="ij")
    keep = w >= min_weight
    per_agent = np.stack(np.unravel_index(a_idx.ravel()[keep], model.action_sizes), axis=1)
    return Samples(s_idx.ravel()[keep][:, None], per_agent, w[keep], ev.advantage.ravel()[keep].copy())


# ---------------------------------------------------------------- estimates


def update_running_stats(eta_hat, zeta_hat, rewards, alpha, beta):
    """EMA of the mean, then of the squared deviation from the new mean."""
    r = np.asarray(rewards, dtype=float)
    eta = (1 - alpha) * eta_hat + alpha * r.mean()
    zeta = (1 - alpha) * zeta_hat + alpha * np.mean((r - eta) ** 2)
    return float(eta), float(zeta), float(eta - beta * zeta)


def surrogate_rewards(rewards, eta_hat, beta):
    return rewards - beta * (rewards - eta_hat) ** 2


def compute_gae(surrogate, values, j_hat, lam):
    """GAE over ``(B, T)`` surrogate rewards; ``values`` is ``(B, T + 1)``.

    TD error ``f - J + V(s') - V(s)``, accumulated backwards with weight
    ``lam`` and a zero tail after the last step.
    """
    B, T = surrogate.shape
    delta = surrogate - j_hat + values[:, 1:] - values[:, :-1]
    adv = np.zeros((B, T))
    acc = np.zeros(B)
    for t in range(T - 1, -1, -1):
        acc = delta[:, t] + lam * acc
        adv[:, t] = acc
    return adv


def avc_critic_targets(advantages, values):
    """Targets ``A + V(s_t)`` for the critic regression."""
    return advantages + values[:, :-1]


def avc_loss(critic: CriticParams, feats, targets, weights, avc_coefficient: float) -> float:
    v = critic.value(feats)
    w = weights / weights.sum()
    return float(w @ (v - targets) ** 2 + avc_coefficient * (w @ v) ** 2)


def avc_loss_grad(critic: CriticParams, feats, targets, weights, avc_coefficient: float) -> np.ndarray:
    v = critic.value(feats)
    w = weights / weights.sum()
    dv = 2.0 * w * (v - targets) + 2.0 * avc_coefficient * (w @ v) * w
    return scatter_rows(feats, dv, critic.weights.shape[0])


def fit_critic(critic: CriticParams, samples: Samples, avc_coefficient: float, lr=5e-3, epochs=5,
               num_minibatch=40, max_grad_norm=0.5, rng=None, optimizer: Adam = None) -> CriticParams:
    """Adam on the AVC-regularised squared error, ``epochs`` passes over
    ``num_minibatch`` shuffled minibatches."""
    rng = rng if rng is not None else np.random.default_rng(0)
    theta = critic.weights.copy()
    opt = optimizer or Adam(theta.shape, lr)
    n = len(samples)
    k = max(1, min(num_minibatch, n))
    for _ in range(epochs):
        for idx in np.array_split(rng.permutation(n), k):
            grad = avc_loss_grad(CriticParams(theta), samples.feats[idx], samples.targets[idx],
                                 samples.weights[idx], avc_coefficient)
            theta += opt.step(clip_norm(grad, max_grad_norm))
    return CriticParams(theta)


def propagate_m_weights(m_weights, old_probs_at_action, new_probs_at_action):
    """``M <- (mu_new(a_i|s) / mu_old(a_i|s)) M`` at the logged actions."""
    old = np.asarray(old_probs_at_action)
    if np.any(old < 1e-12):
        raise NumericalDegeneracyError("importance ratio denominator below 1e-12")
    return m_weights * (np.asarray(new_probs_at_action) / old)


def action_probs(policy: SoftmaxPolicyParams, agent: int, samples: Samples) -> np.ndarray:
    p = policy.probs(agent, samples.feats)
    return p[np.arange(len(samples)), samples.actions[:, agent]]


def importance_weighted_advantage(ev, joint_old: JointPolicy, prefix: JointPolicy, candidate, order, h):
    """Exact ``E_{a ~ mu}[(mu_hat/mu - 1) prod_{j<h} (mu'_j/mu_j) A_f]`` per state,
    summed over the full joint action table with explicit ratios."""
    s = joint_old.num_states
    agent = order[h - 1]
    ratio = np.ones(ev.advantage.shape)
    sizes = joint_old.action_sizes
    idx = np.unravel_index(np.arange(ev.advantage.shape[1]), sizes)
    for j in order[: h - 1]:
        ratio = ratio * prefix.per_agent[j][:, idx[j]] / joint_old.per_agent[j][:, idx[j]]
    own = np.asarray(candidate)[:, idx[agent]] / joint_old.per_agent[agent][:, idx[agent]]
    return (joint_old.joint_table() * (own - 1.0) * ratio * ev.advantage).sum(axis=1).reshape(s)
