import numpy as np
import pytest

from mvtsg.chain_analytics import evaluate, kemeny_constant, multi_agent_advantage, sequential_lower_bound
from mvtsg.errors import NumericalDegeneracyError
from mvtsg.game_model import JointPolicy, TsgModel, random_policy, random_toy_game
from mvtsg.mv_mapi import run_mv_mapi
from mvtsg.mv_matrpo import (ExactEnv, Samples, SoftmaxPolicyParams, TrainConfig, avc_critic_targets, clip_step,
                             collect, compute_gae, exact_samples, fit_critic, policy_from_params,
                             propagate_m_weights, train, trust_region_step)
from mvtsg.mv_matrpo.batch import (Collector, action_probs, avc_loss_grad, importance_weighted_advantage,
                                   surrogate_rewards, update_running_stats)
from mvtsg.mv_matrpo.params import CriticParams, softmax
from mvtsg.mv_matrpo.steps import clip_surrogate_gradient, mean_kl, surrogate_gradient
from mvtsg.mv_matrpo.train import LearnerState, estimate_batch, sequential_sweep
from mvtsg.oracle import exhaustive_search


def _params_for(joint: JointPolicy) -> SoftmaxPolicyParams:
    return SoftmaxPolicyParams([np.log(t) for t in joint.per_agent])


def _mapi_best(model):
    best = -np.inf
    for a in range(2):
        for b in range(2):
            init = JointPolicy.deterministic(np.array([[a, b], [b, a]]), model.action_sizes)
            best = max(best, run_mv_mapi(model, init, a + 2 * b).iterations[-1]["j"])
    return best


# ---------------------------------------------------------------- collection


def test_single_state_constant_reward_batch():
    m = TsgModel.from_dense(np.ones((1, 4, 1)), np.full((1, 4), 1.5), (2, 2), 1.0)
    env = ExactEnv(m)
    params = SoftmaxPolicyParams.zeros(1, (2, 2))
    batch = collect(env, params, 4, 50, seeds=1)
    assert np.all(batch.rewards == 1.5)
    state = LearnerState(params, CriticParams(np.array([0.7])), beta=1.0)
    eta, zeta, j = update_running_stats(0.0, 0.0, batch.rewards, 1.0, 1.0)
    state.eta_hat, state.zeta_hat, state.j_hat = eta, zeta, j
    estimate_batch(state, batch)
    assert np.all(batch.advantages == 0)


def test_same_seed_same_batch():
    m = random_toy_game(7)
    p = SoftmaxPolicyParams([np.random.default_rng(0).normal(size=(2, 2)) for _ in range(2)])
    a = collect(ExactEnv(m), p, 3, 40, seeds=5)
    b = collect(ExactEnv(m), p, 3, 40, seeds=5)
    assert np.array_equal(a.actions, b.actions) and np.array_equal(a.rewards, b.rewards)
    c = collect(ExactEnv(m), p, 3, 40, seeds=6)
    assert not np.array_equal(a.actions, c.actions)


def test_action_frequencies_match_policy():
    m = random_toy_game(7)
    env = ExactEnv(m)
    p = SoftmaxPolicyParams([np.array([[0.3, -0.4], [1.0, 0.0]]), np.array([[0.0, 0.9], [-0.2, 0.2]])])
    batch = collect(env, p, 8, 5000, seeds=2)
    states = batch.states[:, :-1].ravel()
    for agent in range(2):
        acts = batch.actions[..., agent].ravel()
        probs = p.probs(agent, env.all_state_features())
        for s in range(2):
            sel = acts[states == s]
            freq = np.mean(sel == 1)
            se = np.sqrt(probs[s, 1] * (1 - probs[s, 1]) / len(sel))
            assert abs(freq - probs[s, 1]) < 3 * se


def test_collect_rejects_short_trajectories():
    with pytest.raises(ValueError):
        collect(ExactEnv(random_toy_game(1)), SoftmaxPolicyParams.zeros(2, (2, 2)), 2, 1, seeds=0)


# ---------------------------------------------------------------- running statistics


def test_alpha_one_is_batch_mean():
    r = np.array([[1.0, 2.0], [3.0, 6.0]])
    eta, zeta, j = update_running_stats(10.0, 5.0, r, 1.0, 0.5)
    assert eta == 3.0 and zeta == pytest.approx(np.mean((r - 3.0) ** 2)) and j == eta - 0.5 * zeta


def test_zeta_uses_updated_mean():
    r = np.array([2.0, 4.0])
    eta, zeta, _ = update_running_stats(0.0, 0.0, r, 0.5, 0.0)
    assert eta == 1.5 and zeta == pytest.approx(0.5 * np.mean((r - 1.5) ** 2))


def test_constant_reward_contracts_geometrically():
    eta, zeta = 0.0, 4.0
    gaps = []
    for _ in range(30):
        eta, zeta, _ = update_running_stats(eta, zeta, np.full(10, 2.0), 0.1, 1.0)
        gaps.append(abs(eta - 2.0))
    assert gaps[-1] == pytest.approx(2.0 * 0.9**30, rel=1e-9)
    for _ in range(170):
        eta, zeta, _ = update_running_stats(eta, zeta, np.full(10, 2.0), 0.1, 1.0)
    assert zeta < 1e-6


def test_running_mean_tracks_exact_eta():
    m = random_toy_game(7)
    env = ExactEnv(m)
    p = SoftmaxPolicyParams([np.array([[0.5, -0.5], [0.0, 0.2]]), np.array([[0.0, 0.0], [1.0, -1.0]])])
    exact = evaluate(m, policy_from_params(env, p)).eta
    col = Collector(env, 8, 3)
    eta = zeta = 0.0
    for _ in range(200):
        eta, zeta, _ = update_running_stats(eta, zeta, col.collect(p, 100).rewards, 0.1, 1.0)
    assert abs(eta - exact) < 0.01 * exact


# ---------------------------------------------------------------- GAE and critic


def test_gae_lambda_zero_is_td_error():
    f = np.array([[1.0, 2.0, 3.0]])
    v = np.array([[0.5, -1.0, 2.0, 0.25]])
    adv = compute_gae(f, v, 0.7, 0.0)
    np.testing.assert_allclose(adv, f - 0.7 + v[:, 1:] - v[:, :-1])


def test_gae_zero_values_suffix_sums():
    f = np.array([[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]])
    adv = compute_gae(f, np.zeros((2, 4)), 0.5, 1.0)
    expected = np.cumsum((f - 0.5)[:, ::-1], axis=1)[:, ::-1]
    np.testing.assert_allclose(adv, expected)


def test_gae_with_exact_critic_is_unbiased():
    m = random_toy_game(7)
    env = ExactEnv(m)
    p = SoftmaxPolicyParams.zeros(2, (2, 2))
    joint = policy_from_params(env, p)
    ev = evaluate(m, joint)
    batch = collect(env, p, 8, 25_000, seeds=4)
    values = ev.value[batch.states]
    f = surrogate_rewards(batch.rewards, ev.eta, m.beta)
    adv = compute_gae(f, values, ev.j_value, 0.0)
    s = batch.states[:, :-1].ravel()
    a = np.ravel_multi_index((batch.actions[..., 0].ravel(), batch.actions[..., 1].ravel()), m.action_sizes)
    flat = adv.ravel()
    for si in range(2):
        for ai in range(4):
            sel = flat[(s == si) & (a == ai)]
            se = sel.std(ddof=1) / np.sqrt(len(sel))
            assert abs(sel.mean() - ev.advantage[si, ai]) < 3 * se + 1e-12


def test_zero_advantage_targets_and_avc_pull():
    values = np.array([[1.0, 2.0, 3.0]])
    targets = avc_critic_targets(np.zeros((1, 2)), values)
    np.testing.assert_array_equal(targets, values[:, :-1])
    critic = CriticParams(np.array([1.0, 2.0]))
    feats = np.array([[0], [1]])
    g = avc_loss_grad(critic, feats, np.array([1.0, 2.0]), np.ones(2), 0.01)
    np.testing.assert_allclose(g, 2 * 0.01 * 1.5 * np.array([0.5, 0.5]))


def test_critic_least_squares_without_avc():
    rng = np.random.default_rng(0)
    feats = rng.integers(3, size=(3000, 1))
    targets = np.array([1.0, -2.0, 4.0])[feats[:, 0]] + rng.normal(scale=0.1, size=3000)
    samples = Samples(feats, np.zeros((3000, 1), int), np.full(3000, 1 / 3000), targets=targets)
    critic = CriticParams.zeros(3)
    for _ in range(60):
        critic = fit_critic(critic, samples, 0.0, lr=0.01, max_grad_norm=None, rng=rng)
    means = [targets[feats[:, 0] == k].mean() for k in range(3)]
    np.testing.assert_allclose(critic.weights, means, atol=0.02)


def test_critic_learns_value_differences_for_fixed_policy():
    # sticky two-state chain so the value gap (about 5) dominates optimiser jitter
    P = np.zeros((2, 4, 2))
    P[0, :, 0] = P[1, :, 1] = 0.9
    P[0, :, 1] = P[1, :, 0] = 0.1
    R = np.array([[1.0, 1.2, 0.8, 1.0], [0.0, 0.1, -0.1, 0.0]])
    m = TsgModel.from_dense(P, R, (2, 2), 0.5)
    env = ExactEnv(m)
    p = SoftmaxPolicyParams.zeros(2, (2, 2))
    ev = evaluate(m, policy_from_params(env, p))
    col = Collector(env, 8, 9)
    state = LearnerState(p, CriticParams.zeros(2), beta=m.beta)
    rng = np.random.default_rng(1)
    gaps = []
    for k in range(300):
        batch = col.collect(p, 100)
        a = 1.0 if k == 0 else 0.1
        state.eta_hat, state.zeta_hat, state.j_hat = update_running_stats(state.eta_hat, state.zeta_hat,
                                                                          batch.rewards, a, m.beta)
        estimate_batch(state, batch)
        state.critic = fit_critic(state.critic, batch.samples(), 0.01, rng=rng)
        gaps.append(state.critic.weights[0] - state.critic.weights[1])
    exact = ev.value[0] - ev.value[1]
    assert abs(np.mean(gaps[-100:]) - exact) <= 0.1 * abs(exact)


# ---------------------------------------------------------------- importance weights


def test_m_weights_ratio_propagation():
    m = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(propagate_m_weights(m, [0.2, 0.5, 0.1], [0.2, 0.5, 0.1]), m)
    np.testing.assert_allclose(propagate_m_weights(m, [0.2, 0.3, 0.1], [0.4, 0.6, 0.2]), 2 * m)
    with pytest.raises(NumericalDegeneracyError):
        propagate_m_weights(m, [0.0, 0.5, 0.5], [0.1, 0.5, 0.5])


def test_importance_weighted_advantage_exact_identity():
    for seed in range(20):
        m = random_toy_game(seed, 3, 2, 2, beta=1.0)
        r = np.random.default_rng(seed)
        mu, prefix, cand = random_policy(m, r), random_policy(m, r), random_policy(m, r)
        ev = evaluate(m, mu)
        order = list(r.permutation(3))
        for h in range(1, 4):
            direct = multi_agent_advantage(ev, mu, order, h, prefix, cand.per_agent[order[h - 1]])
            weighted = importance_weighted_advantage(ev, mu, prefix, cand.per_agent[order[h - 1]], order, h)
            assert np.abs(direct - weighted).max() < 1e-10


def test_importance_weighted_advantage_monte_carlo():
    for seed in range(10):
        m = random_toy_game(seed, 2, 2, 2, beta=1.0)
        r = np.random.default_rng(100 + seed)
        mu, prefix, cand = random_policy(m, r), random_policy(m, r), random_policy(m, r)
        ev = evaluate(m, mu)
        order, h = [1, 0], 2
        exact = ev.stationary @ multi_agent_advantage(ev, mu, order, h, prefix, cand.per_agent[0])
        n = 200_000
        s = r.choice(2, size=n, p=ev.stationary)
        joint = mu.joint_table()
        u = r.random(n)
        a = (u[:, None] > np.cumsum(joint[s], axis=1)).sum(axis=1)
        a0, a1 = np.unravel_index(a, (2, 2))
        ratio_prefix = prefix.per_agent[1][s, a1] / mu.per_agent[1][s, a1]
        ratio_own = cand.per_agent[0][s, a0] / mu.per_agent[0][s, a0]
        est = (ratio_own - 1.0) * ratio_prefix * ev.advantage[s, a]
        se = est.std(ddof=1) / np.sqrt(n)
        assert abs(est.mean() - exact) < 3 * se


# ---------------------------------------------------------------- policy steps


def test_zero_m_leaves_parameters():
    samples = exact_samples(random_toy_game(3), JointPolicy.uniform(random_toy_game(3)))
    samples.m_weights = np.zeros(len(samples))
    p = SoftmaxPolicyParams.zeros(2, (2, 2))
    new, info = trust_region_step(0, samples, p)
    assert new is p and not info.accepted


def test_accepted_steps_respect_kl_and_improve_surrogate():
    for seed in range(10):
        m = random_toy_game(seed, 2, 3, 3)
        r = np.random.default_rng(seed)
        joint = random_policy(m, r)
        p = _params_for(joint)
        samples = exact_samples(m, joint)
        for agent in range(2):
            new, info = trust_region_step(agent, samples, p, kl_epsilon=0.01)
            if info.accepted:
                p_old = p.probs(agent, samples.feats)
                p_new = new.probs(agent, samples.feats)
                assert mean_kl(p_old, p_new, samples.weights) <= 0.01
                assert info.improvement > 0


def test_exact_advantage_steps_climb_to_policy_iteration_value():
    m = random_toy_game(7)
    target = _mapi_best(m)
    env = ExactEnv(m)
    p = SoftmaxPolicyParams.zeros(2, (2, 2))
    js = []
    rng = np.random.default_rng(0)
    for _ in range(300):
        joint = policy_from_params(env, p)
        js.append(evaluate(m, joint).j_value)
        if js[-1] > target - 1e-3:
            break
        samples = exact_samples(m, joint)
        state = LearnerState(p, CriticParams.zeros(2), kl_epsilon=0.01, beta=m.beta)
        state, _ = sequential_sweep(state, samples, list(rng.permutation(2)))
        p = state.policies
    assert np.all(np.diff(js) >= -1e-12)
    assert js[-1] > target - 1e-3


def test_sweep_respects_sequential_bound():
    m = random_toy_game(5, beta=1.0)
    kstar = exhaustive_search(m).kemeny_star
    env = ExactEnv(m)
    r = np.random.default_rng(5)
    for _ in range(10):
        joint = random_policy(m, r)
        p = _params_for(joint)
        state = LearnerState(p, CriticParams.zeros(2), kl_epsilon=0.05, beta=m.beta)
        order = [int(i) for i in r.permutation(2)]
        state, _ = sequential_sweep(state, exact_samples(m, joint), order)
        new_joint = policy_from_params(env, state.policies)
        k = max(kstar, kemeny_constant(evaluate(m, joint).chain), kemeny_constant(evaluate(m, new_joint).chain))
        out = sequential_lower_bound(m, joint, new_joint, order, k)
        assert out["j_new"] >= out["lower_bound"] - 1e-10


def test_clip_gradient_equals_plain_inside_band():
    m = random_toy_game(2)
    joint = random_policy(m, np.random.default_rng(2))
    p = _params_for(joint)
    samples = exact_samples(m, joint)
    theta = p.logits[0]
    p_old_a = action_probs(p, 0, samples)
    idx = np.arange(len(samples))
    g_clip = clip_surrogate_gradient(theta, p_old_a, samples, 0, idx, 0.2)
    np.testing.assert_allclose(g_clip, surrogate_gradient(theta, samples, 0), atol=1e-15)


def test_clip_saturates_for_large_positive_ratio():
    feats = np.zeros((4, 1), dtype=np.int64)
    actions = np.array([[0], [0], [1], [1]])
    samples = Samples(feats, actions, np.full(4, 0.25), np.ones(4))
    theta = np.array([[0.0, 0.0]])
    old_a = softmax(theta[feats].sum(axis=1))[np.arange(4), actions[:, 0]] / 1.25
    g = clip_surrogate_gradient(theta, old_a, samples, 0, np.arange(4), 0.2)
    assert np.all(g == 0)


def test_clip_variant_matches_trust_region_on_toy_game():
    m = random_toy_game(7)
    cfg = dict(total_steps=8 * 100 * 120, episode_length=100, seed=1)
    _, tr = train(m, TrainConfig(**cfg))
    _, cl = train(m, TrainConfig(variant="clip", **cfg))
    assert abs(tr.column("j_exact")[-1] - cl.column("j_exact")[-1]) < 5e-3


# ---------------------------------------------------------------- training


def test_training_trace_is_smoothly_monotone():
    m = random_toy_game(7)
    cfg = TrainConfig(total_steps=8 * 100 * 100, episode_length=100, seed=2)
    state, trace = train(m, cfg)
    j_hat = trace.column("j_hat")
    assert state.j_hat == state.eta_hat - m.beta * state.zeta_hat
    band = 2 * np.std(m.reward) / np.sqrt(8 * 100)
    running = np.maximum.accumulate(j_hat[20:])
    assert np.all(running - j_hat[20:] <= band)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(variant="nope").validate()
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"learning_rate": 1})
    assert TrainConfig.from_dict({"kl_epsilon": 0.02}).kl_epsilon == 0.02


def test_component_features_for_labelled_states():
    from mvtsg.env_microgrid import build_scenario1
    env = ExactEnv(build_scenario1(0.0), "components")
    assert env.num_features == 6 * 4 + 1
    assert env.all_state_features().shape == (1296, 5)
