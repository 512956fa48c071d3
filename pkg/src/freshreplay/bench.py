"""Timing helpers for the priority-refresh hot path and the kernel backends."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .buffer import ReplayBuffer
from .config import PriorityConfig
from .types import PrioritySignal, Step, Trajectory


@dataclass(frozen=True)
class RefreshBench:
    n: int
    backend: str
    times: list[float]  # seconds, one per run

    @property
    def median(self) -> float:
        return float(np.median(self.times))


def _filled_buffer(n: int, backend=None, tau: float = 500.0) -> ReplayBuffer:
    prio = PriorityConfig(tau=tau)
    buf = ReplayBuffer(capacity=n, priority=prio, backend=backend)
    rng = np.random.default_rng(7)
    rewards = rng.uniform(-5.0, 5.0, size=n)
    for i in range(n):
        step = Step(0, 0, float(rewards[i]), 0.0, 0, True)
        traj = Trajectory.from_steps([step], collection_step=i)
        buf.insert(traj, PrioritySignal(reward=float(rewards[i])), i)
    return buf

def run_refresh_bench(n: int, runs: int = 20, backend_name: str | None = None) -> RefreshBench:
    """Median wall time of a full-buffer refresh (scan + tree rebuild) at size n."""
    backend = _kernels.get_backend(backend_name) if backend_name else _kernels.kernels
    buf = _filled_buffer(n, backend=backend)
    times = []
    current = n  # ages spread over [0, n)
    for r in range(runs):
        start = time.perf_counter()
        report = buf.refresh_priorities(current + r)
        times.append(time.perf_counter() - start)
        assert report.entries_scanned == n
    return RefreshBench(n=n, backend=backend.BACKEND_NAME, times=times)


def refresh_scaling(ns: list[int], runs: int = 5, backend_name: str | None = None) -> list[tuple[int, float]]:
    return [(n, run_refresh_bench(n, runs=runs, backend_name=backend_name).median) for n in ns]


def linear_fit_r2(xs: list[float], ys: list[float]) -> float:
    """R^2 of the least-squares line through (xs, ys)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot
