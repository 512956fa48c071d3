"""Training loop: tabular softmax policy, clipped IS-weighted policy gradient,
one on-policy update plus K prioritized replay updates per iteration, and a
behavior-policy snapshot synced at iteration end.

The gradient estimator is clipped-ratio REINFORCE with a learned state-value
baseline: per-step advantages are return-to-go minus V(s), whitened across
the batch, clipped, and combined with PPO-style pessimistic ratio clipping.
Per-trajectory losses are the mean of their step losses; the batch loss is
the IS-weight-scaled mean over trajectories.  No KL penalty, no entropy
bonus, single pass per batch.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .buffer import ReplayBuffer
from .config import ConfigError, RunConfig, validate
from .envs import make_env
from .priority import beta_at
from .types import PrioritySignal, Step, Trajectory, trajectory_step_arrays

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class PolicyState:
    """Tabular policy: one logit row per state, plus a state-value table."""

    logits: np.ndarray
    value_baseline: np.ndarray
    version: int = 0


@dataclass(frozen=True)
class TrainMetrics:
    iteration: int
    mean_return: float
    mean_sampled_age: float
    mean_is_weight: float
    clip_fraction: float
    buffer_occupancy: int
    refresh_wall_time: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def rollout(
    mu_logits: np.ndarray,
    env,
    count: int,
    rng: np.random.Generator,
    collection_step: int,
) -> list[Trajectory]:
    """Sample ``count`` complete episodes from the frozen behavior policy.

    Each step records log pi_mu(a|s) as evaluated at generation time.
    """
    logp = log_softmax(mu_logits)
    probs = np.exp(logp)
    cum_rows = np.cumsum(probs, axis=1).tolist()
    logp_rows = logp.tolist()
    trajectories = []
    for _ in range(count):
        s = env.reset()
        steps: list[Step] = []
        done = False
        while not done:
            row = cum_rows[s]
            u = rng.random()
            a = 0
            while a < len(row) - 1 and u >= row[a]:
                a += 1
            outcome = env.step(a)
            steps.append(
                Step(
                    state_id=s,
                    action_id=a,
                    reward=outcome.reward,
                    behavior_logprob=logp_rows[s][a],
                    next_state_id=outcome.next_state,
                    terminal=outcome.done,
                )
            )
            s = outcome.next_state
            done = outcome.done
        trajectories.append(Trajectory.from_steps(steps, collection_step))
    return trajectories


@dataclass(frozen=True)
class UpdateStats:
    loss: float
    value_loss: float
    clip_fraction: float
    n_steps: int


def _batch_columns(batch: Sequence[tuple[Trajectory, float]]):
    states, actions, mu_logps, rtg, coeffs = [], [], [], [], []
    B = len(batch)
    for traj, weight in batch:
        s, a, r, mlp = trajectory_step_arrays(traj)
        g = np.cumsum(r[::-1])[::-1]
        n = len(traj)
        states.append(s)
        actions.append(a)
        mu_logps.append(mlp)
        rtg.append(g)
        coeffs.append(np.full(n, weight / (B * n)))
    return (
        np.concatenate(states),
        np.concatenate(actions),
        np.concatenate(mu_logps),
        np.concatenate(rtg),
        np.concatenate(coeffs),
    )


def _advantages(rtg: np.ndarray, values: np.ndarray, advantage_clip: float) -> np.ndarray:
    adv = rtg - values
    std = adv.std()
    if std > 1e-12:  # zero-variance batches skip whitening
        adv = (adv - adv.mean()) / std
    return np.clip(adv, -advantage_clip, advantage_clip)


def policy_surrogate_loss(
    logits: np.ndarray,
    value_baseline: np.ndarray,
    batch: Sequence[tuple[Trajectory, float]],
    config: RunConfig,
) -> float:
    """Pure loss evaluation; the finite-difference oracle differentiates this."""
    states, actions, mu_logps, rtg, coeffs = _batch_columns(batch)
    adv = _advantages(rtg, value_baseline[states], config.advantage_clip)
    logp = log_softmax(logits)
    rho = np.exp(logp[states, actions] - mu_logps)
    clipped = np.clip(rho, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon)
    objective = np.minimum(rho * adv, clipped * adv)
    return float(np.dot(coeffs, -objective))


def policy_gradient_update(
    policy: PolicyState,
    batch: Sequence[tuple[Trajectory, float]],
    config: RunConfig,
    update_baseline: bool = True,
) -> UpdateStats:
    """One gradient step on the weighted batch; mutates logits and baseline.

    ``update_baseline=False`` leaves the value table alone; the trainer uses
    it for replay batches, whose returns came from older policies and would
    drag V away from the current policy's values.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    states, actions, mu_logps, rtg, coeffs = _batch_columns(batch)
    values = policy.value_baseline[states]
    adv = _advantages(rtg, values, config.advantage_clip)

    logp = log_softmax(policy.logits)
    probs = np.exp(logp)
    rho = np.exp(logp[states, actions] - mu_logps)
    lo, hi = 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon
    clipped = np.clip(rho, lo, hi)
    unclipped_obj = rho * adv
    clipped_obj = clipped * adv
    objective = np.minimum(unclipped_obj, clipped_obj)
    loss = float(np.dot(coeffs, -objective))

    # d(-objective)/d rho is -adv where the unclipped branch is active, 0 where
    # the pessimistic clip flattens it
    active = unclipped_obj <= clipped_obj
    dloss_drho = np.where(active, -adv, 0.0) * coeffs
    c = dloss_drho * rho  # chain through rho = exp(logp_theta - logp_mu)
    grad_logits = np.zeros_like(policy.logits)
    np.add.at(grad_logits, (states, actions), c)
    np.add.at(grad_logits, states, -c[:, None] * probs[states])

    # baseline: per-state step toward the batch's weighted-mean return-to-go.
    # Normalizing by visit mass keeps the quadratic stable at any policy
    # learning rate (a raw MSE step diverges once lr exceeds ~1/visit-mass).
    residual = values - rtg
    value_loss = float(np.dot(coeffs, residual**2))
    res_sum = np.zeros_like(policy.value_baseline)
    mass = np.zeros_like(policy.value_baseline)
    np.add.at(res_sum, states, coeffs * residual)
    np.add.at(mass, states, coeffs)
    visited = mass > 0.0
    value_step = min(config.learning_rate, 1.0)

    policy.logits -= config.learning_rate * grad_logits
    if update_baseline:
        policy.value_baseline[visited] -= value_step * res_sum[visited] / mass[visited]
    policy.version += 1

    clip_fraction = float(np.mean((rho < lo) | (rho > hi)))
    return UpdateStats(loss, value_loss, clip_fraction, len(states))


def save_checkpoint(path: str, policy: PolicyState) -> None:
    """Versioned binary checkpoint (npz with a format tag)."""
    np.savez(
        path,
        format_version=np.int64(CHECKPOINT_FORMAT_VERSION),
        logits=policy.logits,
        value_baseline=policy.value_baseline,
        policy_version=np.int64(policy.version),
    )


def load_checkpoint(path: str) -> PolicyState:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        return PolicyState(
            logits=data["logits"].copy(),
            value_baseline=data["value_baseline"].copy(),
            version=int(data["policy_version"]),
        )


class Trainer:
    """Owns the policy, the environment, and (for replay methods) the buffer."""

    def __init__(self, config: RunConfig, backend=None):
        errors = validate(config)
        if errors:
            raise ConfigError("; ".join(errors))
        self.config = config
        # seeds are a signed-64 surface; SeedSequence wants non-negative
        entropy = config.seed & 0xFFFF_FFFF_FFFF_FFFF
        seed_actions, seed_env, seed_buffer = np.random.SeedSequence(entropy).spawn(3)
        self._rng = np.random.default_rng(seed_actions)
        self.env = make_env(config.env)
        self.env.reset(seed=seed_env)
        self.policy = PolicyState(
            logits=np.zeros((self.env.n_states, self.env.n_actions)),
            value_baseline=np.zeros(self.env.n_states),
        )
        self._mu_logits = self.policy.logits.copy()
        self.mu_version = 0
        self.last_rollout_mu_version = -1
        self.global_step = 0
        self.iteration = 0
        self._background: Optional[ThreadPoolExecutor] = None
        self.buffer: Optional[ReplayBuffer] = None
        if config.method != "on_policy":
            prio = config.priority
            if config.method == "standard_per":
                prio = replace(prio, tau=float("inf"))  # decay disabled
            self.buffer = ReplayBuffer(
                capacity=config.buffer_capacity,
                priority=prio,
                eviction_policy=config.eviction_policy,
                rng=np.random.default_rng(seed_buffer),
                backend=backend,
            )

    # -- priority signals -------------------------------------------------

    def signal_for(self, traj: Trajectory) -> PrioritySignal:
        kind = self.config.priority.base_kind
        if kind == "reward_magnitude":
            return PrioritySignal(reward=traj.episode_return)
        v = self.policy.value_baseline
        if kind == "advantage_magnitude":
            start = traj.steps[0].state_id
            return PrioritySignal(
                reward=traj.episode_return,
                advantage=float(traj.episode_return - v[start]),
            )
        deltas = [
            s.reward + (0.0 if s.terminal else v[s.next_state_id]) - v[s.state_id]
            for s in traj.steps
        ]
        return PrioritySignal(reward=traj.episode_return, td_error=sum(deltas) / len(deltas))

    def _recompute_base_priorities(self) -> None:
        assert self.buffer is not None
        for entry in self.buffer.entries():
            self.buffer.update_base_priority(
                entry.trajectory.trajectory_id, self.signal_for(entry.trajectory)
            )

    # -- main loop ----------------------------------------------------------

    def run_iteration(self) -> TrainMetrics:
        cfg = self.config
        replay_on = cfg.method != "on_policy"
        self.last_rollout_mu_version = self.mu_version
        trajectories = rollout(
            self._mu_logits, self.env, cfg.rollout_batch, self._rng, self.global_step
        )
        mean_return = float(np.mean([t.episode_return for t in trajectories]))

        if replay_on:
            assert self.buffer is not None
            for traj in trajectories:
                self.buffer.insert(traj, self.signal_for(traj), self.global_step)

        refresh_future = None
        if replay_on and not cfg.sync_refresh:
            if self._background is None:
                self._background = ThreadPoolExecutor(max_workers=1)
            # overlap with the on-policy update; ages taken at launch
            refresh_future = self._background.submit(
                self.buffer.refresh_priorities, self.global_step
            )

        stats = [policy_gradient_update(self.policy, [(t, 1.0) for t in trajectories], cfg)]
        self.global_step += 1

        refresh_wall = 0.0
        age_sum = weight_sum = draw_count = 0
        if replay_on:
            assert self.buffer is not None
            if cfg.priority.base_kind != "reward_magnitude":
                self._recompute_base_priorities()
            if refresh_future is not None:
                report = refresh_future.result()
                refresh_wall = report.wall_time
            else:
                report = self.buffer.refresh_priorities(self.global_step)
                # deterministic mode keeps timing noise out of the metrics
                refresh_wall = 0.0
            for _ in range(cfg.replay_ratio_K):
                beta = beta_at(self.global_step, cfg.priority)
                batch = self.buffer.sample_stratified(cfg.batch_size_B, beta)
                step_at_sample = self.global_step
                pairs = [
                    (entry.trajectory, float(w))
                    for entry, w in zip(batch.entries, batch.is_weights)
                ]
                stats.append(
                    policy_gradient_update(self.policy, pairs, cfg, update_baseline=False)
                )
                self.global_step += 1
                ages = [
                    step_at_sample - entry.trajectory.collection_step
                    for entry in batch.entries
                ]
                age_sum += sum(ages)
                weight_sum += float(batch.is_weights.sum())
                draw_count += len(ages)
                if self.config.priority.base_kind != "reward_magnitude":
                    self._recompute_base_priorities()

        self._mu_logits = self.policy.logits.copy()
        self.mu_version = self.policy.version
        self.iteration += 1
        return TrainMetrics(
            iteration=self.iteration,
            mean_return=mean_return,
            mean_sampled_age=(age_sum / draw_count) if draw_count else 0.0,
            mean_is_weight=(weight_sum / draw_count) if draw_count else 0.0,
            clip_fraction=float(np.mean([s.clip_fraction for s in stats])),
            buffer_occupancy=self.buffer.occupancy if self.buffer is not None else 0,
            refresh_wall_time=refresh_wall,
        )

    def run(self, iterations: Optional[int] = None) -> list[TrainMetrics]:
        n = iterations if iterations is not None else self.config.max_iterations
        history = [self.run_iteration() for _ in range(n)]
        if self._background is not None:
            self._background.shutdown(wait=True)
            self._background = None
        return history
