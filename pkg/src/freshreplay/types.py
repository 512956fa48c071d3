"""Core trajectory types shared by the buffer, the trainer, and the CLI.

States and actions are discrete indices, episodes are undiscounted
(gamma = 1), and every step carries the log-probability the behavior
policy assigned to its action at collection time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence


@dataclass(frozen=True, slots=True)
class Step:
    """One environment transition recorded during a rollout."""

    state_id: int
    action_id: int
    reward: float
    behavior_logprob: float
    next_state_id: int
    terminal: bool


@dataclass(frozen=True)
class Trajectory:
    """A complete episode plus its collection-time bookkeeping.

    ``collection_step`` is the global gradient-step counter at the moment
    the episode was generated; ages are measured against it.
    ``trajectory_id`` is -1 until the replay buffer assigns one at insert.
    """

    steps: tuple[Step, ...]
    episode_return: float
    collection_step: int
    trajectory_id: int = -1

    def __len__(self) -> int:
        return len(self.steps)

    @staticmethod
    def from_steps(steps: Sequence[Step], collection_step: int) -> "Trajectory":
        return Trajectory(
            steps=tuple(steps),
            episode_return=sum(s.reward for s in steps),
            collection_step=collection_step,
        )

    def with_id(self, trajectory_id: int) -> "Trajectory":
        return replace(self, trajectory_id=trajectory_id)


def validate_trajectory(traj: Trajectory, horizon: Optional[int] = None) -> list[str]:
    """Check the trajectory invariants, returning one message per violation."""
    errors: list[str] = []
    if not traj.steps:
        errors.append("trajectory has no steps")
        return errors
    if traj.episode_return != sum(s.reward for s in traj.steps):
        errors.append("episode_return does not equal the sum of step rewards")
    if traj.collection_step < 0:
        errors.append("collection_step must be non-negative")
    if horizon is not None and len(traj.steps) > horizon:
        errors.append(f"trajectory length {len(traj.steps)} exceeds horizon {horizon}")
    for i, step in enumerate(traj.steps):
        if step.behavior_logprob > 0.0 or math.isnan(step.behavior_logprob):
            errors.append(f"step {i}: behavior_logprob must be <= 0")
        if step.terminal and i != len(traj.steps) - 1:
            errors.append(f"step {i}: terminal before the final step")
        if not math.isfinite(step.reward):
            errors.append(f"step {i}: non-finite reward")
    return errors


@dataclass(frozen=True, slots=True)
class PrioritySignal:
    """Scalar training signals a base priority can be derived from.

    Only the field selected by ``PriorityConfig.base_kind`` has to be
    present; the others may stay ``None``.
    """

    reward: Optional[float] = None
    advantage: Optional[float] = None
    td_error: Optional[float] = None


def trajectory_step_arrays(traj: Trajectory):
    """Columnar view of a trajectory's steps, cached on the instance.

    Trajectories are replayed many times; converting the step records to
    arrays once keeps the gradient math vectorized.
    """
    import numpy as np

    cached = traj.__dict__.get("_columns")
    if cached is None:
        n = len(traj.steps)
        states = np.empty(n, dtype=np.int64)
        actions = np.empty(n, dtype=np.int64)
        rewards = np.empty(n, dtype=np.float64)
        mu_logprobs = np.empty(n, dtype=np.float64)
        for i, s in enumerate(traj.steps):
            states[i] = s.state_id
            actions[i] = s.action_id
            rewards[i] = s.reward
            mu_logprobs[i] = s.behavior_logprob
        cached = (states, actions, rewards, mu_logprobs)
        object.__setattr__(traj, "_columns", cached)
    return cached
