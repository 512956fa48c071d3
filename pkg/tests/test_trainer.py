import math

import numpy as np
import pytest

from freshreplay import (
    PolicyState,
    PriorityConfig,
    RunConfig,
    Trainer,
    load_checkpoint,
    make_env,
    policy_gradient_update,
    rollout,
    save_checkpoint,
)
from freshreplay.trainer import _advantages, log_softmax
from gradcheck import fd_gradient, random_instance


def small_config(**kw):
    defaults = dict(
        env="frozenlake",
        method="fresh_per",
        buffer_capacity=256,
        rollout_batch=4,
        batch_size_B=4,
        max_iterations=5,
        learning_rate=1.0,
        seed=11,
    )
    defaults.update(kw)
    return RunConfig(**defaults)


class TestRollout:
    def test_reproducible_episode(self):
        def one():
            env = make_env("frozenlake")
            env.reset(seed=3)
            rng = np.random.default_rng(5)
            logits = np.zeros((env.n_states, env.n_actions))
            return rollout(logits, env, 3, rng, collection_step=7)

        a, b = one(), one()
        assert a == b
        assert all(t.collection_step == 7 for t in a)

    def test_logprobs_match_log_softmax(self):
        env = make_env("frozenlake")
        env.reset(seed=1)
        rng = np.random.default_rng(2)
        logits = np.random.default_rng(0).normal(0, 1, (env.n_states, env.n_actions))
        logp = log_softmax(logits)
        for traj in rollout(logits, env, 10, rng, 0):
            for step in traj.steps:
                assert step.behavior_logprob == pytest.approx(
                    logp[step.state_id, step.action_id], abs=1e-9
                )

    def test_count_episodes(self):
        env = make_env("frozenlake")
        env.reset(seed=4)
        rng = np.random.default_rng(6)
        logits = np.zeros((env.n_states, env.n_actions))
        assert len(rollout(logits, env, 128, rng, 0)) == 128

    def test_return_matches_step_sum(self):
        env = make_env("cliffwalking")
        env.reset(seed=9)
        rng = np.random.default_rng(10)
        logits = np.zeros((env.n_states, env.n_actions))
        for traj in rollout(logits, env, 3, rng, 0):
            assert traj.episode_return == sum(s.reward for s in traj.steps)
            assert len(traj) <= env.horizon


class TestPolicyGradientUpdate:
    def test_on_policy_ratios_are_one(self):
        env = make_env("frozenlake")
        env.reset(seed=1)
        rng = np.random.default_rng(3)
        logits = np.random.default_rng(4).normal(0, 0.5, (env.n_states, env.n_actions))
        trajs = rollout(logits, env, 8, rng, 0)
        policy = PolicyState(logits.copy(), np.zeros(env.n_states))
        stats = policy_gradient_update(policy, [(t, 1.0) for t in trajs], small_config())
        assert stats.clip_fraction == 0.0

    def test_gradient_linear_in_weight(self):
        rng = np.random.default_rng(8)
        _, value, batch = random_instance(rng, n_trajs=1)
        cfg = small_config(learning_rate=1.0)
        traj = batch[0][0]
        zeros = np.zeros((3, 4))  # theta = 0 makes `-logits` the exact gradient

        p1 = PolicyState(zeros.copy(), value.copy())
        policy_gradient_update(p1, [(traj, 1.0)], cfg, update_baseline=False)
        g1 = -p1.logits

        p2 = PolicyState(zeros.copy(), value.copy())
        policy_gradient_update(p2, [(traj, 0.5)], cfg, update_baseline=False)
        g2 = -p2.logits

        assert np.array_equal(g2, 0.5 * g1)  # exact: loss is linear in w

    def test_gradient_matches_finite_differences(self):
        cfg = small_config()
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            logits, value, batch = random_instance(rng)
            policy = PolicyState(logits.copy(), value.copy())
            policy_gradient_update(policy, batch, cfg, update_baseline=False)
            analytic = (logits - policy.logits) / cfg.learning_rate
            numeric = fd_gradient(logits, value, batch, cfg)
            scale = max(np.abs(numeric).max(), 1e-8)
            worst = max(worst, float(np.abs(analytic - numeric).max() / scale))
        assert worst < 1e-4

    def test_whitening_mean_zero_std_one(self):
        rng = np.random.default_rng(12)
        rtg = rng.normal(3.0, 10.0, 500)
        values = rng.normal(0.0, 1.0, 500)
        adv = _advantages(rtg, values, advantage_clip=1e9)
        assert abs(adv.mean()) < 1e-6
        assert abs(adv.std() - 1.0) < 1e-6

    def test_whitening_skipped_on_zero_variance(self):
        rtg = np.full(4, 2.5)
        values = np.full(4, 1.0)
        adv = _advantages(rtg, values, advantage_clip=10.0)
        assert np.all(adv == 1.5)  # unwhitened G - V

    def test_advantage_clip_applies(self):
        rtg = np.array([100.0, -100.0, 0.0, 50.0])
        adv = _advantages(rtg, np.zeros(4), advantage_clip=0.2)
        assert np.all(np.abs(adv) <= 0.2)

    def test_empty_batch_rejected(self):
        policy = PolicyState(np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            policy_gradient_update(policy, [], small_config())

    def test_version_increments(self):
        rng = np.random.default_rng(14)
        logits, value, batch = random_instance(rng)
        policy = PolicyState(logits, value, version=3)
        policy_gradient_update(policy, batch, small_config())
        assert policy.version == 4


class TestRunIteration:
    def test_gradient_steps_per_iteration(self):
        trainer = Trainer(small_config(replay_ratio_K=2))
        trainer.run_iteration()
        assert trainer.global_step == 3  # 1 fresh + K replay
        assert trainer.policy.version == 3

    def test_on_policy_mode_skips_buffer(self):
        trainer = Trainer(small_config(method="on_policy", replay_ratio_K=2))
        metrics = trainer.run_iteration()
        assert trainer.buffer is None
        assert trainer.global_step == 1
        assert metrics.buffer_occupancy == 0
        assert metrics.mean_sampled_age == 0.0

    def test_k0_matches_on_policy_bit_identically(self):
        base = small_config(replay_ratio_K=0, max_iterations=8)
        runs = {}
        for method in ["on_policy", "standard_per", "fresh_per"]:
            cfg = RunConfig(**{**base.__dict__, "method": method})
            trainer = Trainer(cfg)
            history = trainer.run()
            runs[method] = (trainer.policy.logits.copy(), [m.mean_return for m in history])
        for method in ["standard_per", "fresh_per"]:
            assert np.array_equal(runs[method][0], runs["on_policy"][0])
            assert runs[method][1] == runs["on_policy"][1]

    def test_tau_inf_matches_standard_per_bit_identically(self):
        fresh_cfg = small_config(priority=PriorityConfig(tau=math.inf), method="fresh_per")
        std_cfg = small_config(priority=PriorityConfig(tau=500.0), method="standard_per")
        results = []
        for cfg in (fresh_cfg, std_cfg):
            trainer = Trainer(cfg)
            history = trainer.run(10)
            results.append((trainer.policy.logits.copy(), [m.mean_return for m in history]))
        assert np.array_equal(results[0][0], results[1][0])
        assert results[0][1] == results[1][1]

    def test_behavior_policy_snapshot_freshness(self):
        trainer = Trainer(small_config(replay_ratio_K=3))
        end_versions = [0]
        for _ in range(4):
            trainer.run_iteration()
            # rollout used the snapshot synced at the previous iteration's end
            assert trainer.last_rollout_mu_version == end_versions[-1]
            end_versions.append(trainer.policy.version)
        assert end_versions == [0, 4, 8, 12, 16]

    def test_rollout_logprobs_use_synced_snapshot(self):
        trainer = Trainer(small_config(replay_ratio_K=2, rollout_batch=2))
        trainer.run_iteration()
        mu_logp = log_softmax(trainer._mu_logits)
        trajs = rollout(
            trainer._mu_logits, trainer.env, 1, np.random.default_rng(0), trainer.global_step
        )
        for step in trajs[0].steps:
            assert step.behavior_logprob == mu_logp[step.state_id, step.action_id]

    def test_same_seed_same_run(self):
        cfg = small_config(replay_ratio_K=2)
        a = Trainer(cfg).run(6)
        b = Trainer(cfg).run(6)
        assert [m.mean_return for m in a] == [m.mean_return for m in b]
        assert [m.mean_is_weight for m in a] == [m.mean_is_weight for m in b]

    def test_async_refresh_runs_and_reports_wall_time(self):
        cfg = small_config(sync_refresh=False, replay_ratio_K=2)
        trainer = Trainer(cfg)
        history = trainer.run(5)
        assert len(history) == 5
        assert all(m.refresh_wall_time > 0.0 for m in history)
        # buffer state is the post-refresh one: effective = base * decay(age)
        for entry in trainer.buffer.entries():
            assert entry.effective_priority <= entry.base_priority

    def test_sync_refresh_reports_zero_wall_time(self):
        trainer = Trainer(small_config(sync_refresh=True))
        metrics = trainer.run_iteration()
        assert metrics.refresh_wall_time == 0.0

    def test_advantage_mode_recomputes_bases(self):
        cfg = small_config(
            priority=PriorityConfig(base_kind="advantage_magnitude"), replay_ratio_K=1
        )
        trainer = Trainer(cfg)
        trainer.run_iteration()
        trainer.run_iteration()
        for entry in trainer.buffer.entries():
            sig = trainer.signal_for(entry.trajectory)
            expected = abs(sig.advantage) + cfg.priority.epsilon
            assert entry.base_priority == pytest.approx(expected, rel=1e-12)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        policy = PolicyState(rng.normal(0, 1, (6, 4)), rng.normal(0, 1, 6), version=17)
        path = str(tmp_path / "policy.npz")
        save_checkpoint(path, policy)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.logits, policy.logits)
        assert np.array_equal(loaded.value_baseline, policy.value_baseline)
        assert loaded.version == 17

    def test_format_version_checked(self, tmp_path):
        path = str(tmp_path / "bad.npz")
        np.savez(path, format_version=np.int64(99), logits=np.zeros((1, 1)),
                 value_baseline=np.zeros(1), policy_version=np.int64(0))
        with pytest.raises(ValueError, match="format version"):
            load_checkpoint(path)
