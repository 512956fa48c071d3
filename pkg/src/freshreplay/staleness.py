"""Scripted staleness workload: shows stale high-priority entries dominating.

A buffer receives one entry per step for ``steps`` steps; the first
``early`` entries carry a large base priority, everything after a small
one.  Priorities are refreshed every step.  With decay disabled the early
block keeps outsized sampling mass forever, so the expected collection-age
of a sampled entry stays high; with a finite decay constant the expectation
drops.  Both expectations are computed exactly from the live sampling
distribution (leaf mass / total), no draws involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .buffer import ReplayBuffer
from .config import PriorityConfig
from .types import PrioritySignal, Step, Trajectory


@dataclass(frozen=True)
class StalenessResult:
    mean_age_decay: float
    mean_age_control: float
    gap: float  # (control - decay) / control
    per_step: list[tuple[int, float, float]]  # (step, mean_age_decay, mean_age_control)


def _one_step_trajectory(reward: float, collection_step: int) -> Trajectory:
    step = Step(0, 0, reward, 0.0, 0, True)
    return Trajectory.from_steps([step], collection_step)


def _exact_mean_sampled_age(buffer: ReplayBuffer, current_step: int) -> float:
    slots = np.flatnonzero(buffer._insert_seq != np.iinfo(np.int64).max)
    leaves = buffer._sum_leaves()[slots]
    ages = (current_step - buffer._collection_steps[slots]).astype(np.float64)
    return float(np.dot(leaves / leaves.sum(), ages))


def run_staleness_workload(
    tau: float = 500.0,
    control_tau: float = math.inf,
    steps: int = 2000,
    early: int = 100,
    high_priority_reward: float = 10.0,
    low_priority_reward: float = 1.0,
    alpha: float = 0.6,
    epsilon: float = 0.01,
) -> StalenessResult:
    buffers = []
    for t in (tau, control_tau):
        prio = PriorityConfig(alpha=alpha, tau=t, epsilon=epsilon)
        buffers.append(ReplayBuffer(capacity=steps, priority=prio))
    per_step = []
    for step in range(steps):
        reward = high_priority_reward if step < early else low_priority_reward
        # signal uses reward - epsilon so the base priority is exactly `reward`
        signal = PrioritySignal(reward=reward - epsilon)
        for buf in buffers:
            buf.insert(_one_step_trajectory(reward, step), signal, step)
            buf.refresh_priorities(step)
        per_step.append(
            (
                step,
                _exact_mean_sampled_age(buffers[0], step),
                _exact_mean_sampled_age(buffers[1], step),
            )
        )
    mean_decay, mean_control = per_step[-1][1], per_step[-1][2]
    gap = (mean_control - mean_decay) / mean_control if mean_control > 0 else 0.0
    return StalenessResult(mean_decay, mean_control, gap, per_step)
