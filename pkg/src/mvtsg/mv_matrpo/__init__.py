"""Sample-based mean-variance multi-agent trust-region learner."""
from .batch import (Batch, Collector, ExactEnv, Samples, avc_critic_targets, collect, compute_gae,
                    exact_samples, fit_critic, policy_from_params, propagate_m_weights)
from .params import CriticParams, SoftmaxPolicyParams
from .steps import clip_step, trust_region_step
from .train import LearnerState, TrainConfig, TrainingTrace, train, update_running_stats

__all__ = [
    "Batch", "Collector", "CriticParams", "ExactEnv", "LearnerState", "Samples", "SoftmaxPolicyParams",
    "TrainConfig", "TrainingTrace", "avc_critic_targets", "clip_step", "collect", "compute_gae",
    "exact_samples", "fit_critic", "policy_from_params", "propagate_m_weights", "train",
    "trust_region_step", "update_running_stats",
]
