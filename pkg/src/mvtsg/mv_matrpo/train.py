"""Training loop for the sample-based mean-variance multi-agent learner."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..chain_analytics import evaluate
from ..errors import NonErgodicChainError
from ..game_model import TsgModel
from . import batch as B
from .params import Adam, CriticParams, SoftmaxPolicyParams
from .steps import clip_step, trust_region_step


@dataclass
class TrainConfig:
    total_steps: int = 400_000
    num_envs: int = 8
    episode_length: int = 100
    num_minibatch: int = 40
    lr: float = 5e-3
    epochs: int = 5
    max_grad_norm: float = 0.5
    gae_lambda: float = 0.95
    alpha: float = 0.1
    avc_coefficient: float = 0.01
    kl_epsilon: float = 0.01
    clip_epsilon: float = 0.2
    variant: str = "trust_region"
    # feature map for exact model environments: tabular or components
    features: str = "tabular"
    beta: float = None
    seed: int = 0
    # exact evaluation cadence for model environments (0 disables)
    eval_every: int = 1
    # first batch initialises the running statistics instead of the EMA from 0
    init_stats_from_batch: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown training keys: {sorted(unknown)}")
        return cls(**doc)

    @property
    def iterations(self) -> int:
        return max(1, self.total_steps // (self.num_envs * self.episode_length))

    def validate(self):
        if self.variant not in ("trust_region", "clip"):
            raise ValueError(f"unknown variant {self.variant!r}")
        for name in ("total_steps", "num_envs", "num_minibatch", "lr", "epochs", "alpha", "kl_epsilon",
                     "clip_epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.episode_length < 2:
            raise ValueError("episode_length must be at least 2")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must lie in [0, 1]")


@dataclass
class LearnerState:
    policies: SoftmaxPolicyParams
    critic: CriticParams
    eta_hat: float = 0.0
    zeta_hat: float = 0.0
    j_hat: float = 0.0
    alpha: float = 0.1
    lam: float = 0.95
    kl_epsilon: float = 0.01
    clip_epsilon: float = 0.2
    batch: tuple = (8, 100)
    avc_coefficient: float = 0.01
    iteration: int = 0
    beta: float = 0.0


def update_running_stats(state: LearnerState, batch: B.Batch, first: bool = False) -> LearnerState:
    alpha = 1.0 if first else state.alpha
    eta, zeta, j = B.update_running_stats(state.eta_hat, state.zeta_hat, batch.rewards, alpha, state.beta)
    state.eta_hat, state.zeta_hat, state.j_hat = eta, zeta, j
    return state


@dataclass
class TrainingTrace:
    rows: list = field(default_factory=list)
    num_agents: int = 0

    def columns(self):
        return (["iteration", "eta_hat", "zeta_hat", "j_hat", "eta_exact", "zeta_exact", "j_exact"]
                + [f"mean_kl_{i}" for i in range(self.num_agents)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for r in self.rows:
            w.writerow([r["iteration"]] + [repr(r[k]) for k in self.columns()[1:]])
        return buf.getvalue()

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


def _prepare(env, features="tabular"):
    if isinstance(env, TsgModel):
        env = B.ExactEnv(env, features)
    return env


def initial_state(env, config: TrainConfig, beta: float) -> LearnerState:
    return LearnerState(
        policies=SoftmaxPolicyParams.zeros(env.num_features, env.action_sizes),
        critic=CriticParams.zeros(env.num_features),
        alpha=config.alpha, lam=config.gae_lambda, kl_epsilon=config.kl_epsilon,
        clip_epsilon=config.clip_epsilon, batch=(config.num_envs, config.episode_length),
        avc_coefficient=config.avc_coefficient, beta=beta)


def estimate_batch(state: LearnerState, batch: B.Batch) -> B.Batch:
    """Fill surrogate rewards, GAE advantages, critic targets and M weights."""
    values = state.critic.value(batch.feats)
    batch.surrogate_rewards = B.surrogate_rewards(batch.rewards, state.eta_hat, state.beta)
    batch.advantages = B.compute_gae(batch.surrogate_rewards, values, state.j_hat, state.lam)
    batch.critic_targets = B.avc_critic_targets(batch.advantages, values)
    batch.m_weights = batch.advantages.copy()
    return batch


def sequential_sweep(state: LearnerState, samples: B.Samples, order, variant="trust_region",
                     config: TrainConfig = None, rng=None):
    """Update agents one by one in ``order``, propagating the M weights."""
    config = config or TrainConfig()
    kls = {}
    for agent in order:
        old = state.policies
        if variant == "trust_region":
            new, info = trust_region_step(agent, samples, old, state.kl_epsilon)
        else:
            new, info = clip_step(agent, samples, old, state.clip_epsilon, config.lr, config.epochs,
                                  config.num_minibatch, config.max_grad_norm, rng)
        samples.m_weights = B.propagate_m_weights(samples.m_weights, B.action_probs(old, agent, samples),
                                                  B.action_probs(new, agent, samples))
        state.policies = new
        kls[agent] = info.mean_kl
    return state, kls


def train(env, config: TrainConfig = None, beta: float = None, progress=None):
    """Run the full loop; returns ``(LearnerState, TrainingTrace)``."""
    config = config or TrainConfig()
    config.validate()
    env = _prepare(env, config.features)
    if beta is None:
        beta = config.beta if config.beta is not None else getattr(env, "beta", None)
        if beta is None:
            beta = env.model.beta
    model = env.model.with_beta(beta) if isinstance(env, B.ExactEnv) else None
    seq = np.random.SeedSequence(config.seed)
    worker_seq, own_seq = seq.spawn(2)
    rng = np.random.default_rng(own_seq)
    collector = B.Collector(env, config.num_envs, worker_seq)
    state = initial_state(env, config, beta)
    critic_opt = Adam(state.critic.weights.shape, config.lr)
    trace = TrainingTrace(num_agents=len(env.action_sizes))
    nan = float("nan")
    for k in range(config.iterations):
        batch = collector.collect(state.policies, config.episode_length)
        update_running_stats(state, batch, first=(k == 0 and config.init_stats_from_batch))
        estimate_batch(state, batch)
        samples = batch.samples()
        order = [int(i) for i in rng.permutation(len(env.action_sizes))]
        state, kls = sequential_sweep(state, samples, order, config.variant, config, rng)
        state.critic = B.fit_critic(state.critic, samples, state.avc_coefficient, config.lr, config.epochs,
                                    config.num_minibatch, config.max_grad_norm, rng, critic_opt)
        state.iteration = k + 1
        row = {"iteration": k + 1, "eta_hat": state.eta_hat, "zeta_hat": state.zeta_hat, "j_hat": state.j_hat,
               "eta_exact": nan, "zeta_exact": nan, "j_exact": nan}
        row.update({f"mean_kl_{i}": kls.get(i, 0.0) for i in range(len(env.action_sizes))})
        last = k + 1 == config.iterations
        if model is not None and config.eval_every and ((k + 1) % config.eval_every == 0 or last):
            try:
                ev = evaluate(model, B.policy_from_params(env, state.policies))
                row.update(eta_exact=ev.eta, zeta_exact=ev.zeta, j_exact=ev.j_value)
            except NonErgodicChainError:
                pass
        trace.rows.append(row)
        if progress is not None:
            progress(row)
    return state, trace


def learner_summary(state: LearnerState, trace: TrainingTrace) -> dict:
    last = trace.rows[-1] if trace.rows else {}
    out = {k: v for k, v in last.items() if isinstance(v, (int, float)) and not (isinstance(v, float) and math.isnan(v))}
    out.update(eta_hat=state.eta_hat, zeta_hat=state.zeta_hat, j_hat=state.j_hat, iterations=state.iteration)
    return out


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
