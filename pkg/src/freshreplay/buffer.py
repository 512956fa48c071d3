"""Trajectory-level prioritized replay buffer.

Entries carry a base priority frozen (or recomputed, depending on the
signal kind) at training time and an effective priority that decays with
age; sampling is stratified proportional draw over effective priorities
raised to alpha, with importance weights normalized by the global maximum
weight (derived from the tree's min tracker, not estimated per batch).

Threading contract: one logical writer.  ``refresh_priorities`` may run on
a background thread while no insert/update is in flight; sampling always
observes a fully pre- or post-refresh tree because the scatter+rebuild
happens under the buffer lock (single-digit milliseconds at 100K entries,
well under the 10 ms stall bound).  ``FRESHREPLAY_THREADS`` caps how many
worker threads the refresh compute phase may use.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .config import PriorityConfig
from .index import SumTree
from .priority import age_decay, base_priority
from .types import PrioritySignal, Trajectory, validate_trajectory

_NO_SEQ = np.iinfo(np.int64).max


class EmptyBufferError(RuntimeError):
    """Sampling was requested from a buffer with no positive-priority entry."""


class UnknownTrajectoryError(KeyError):
    """A priority update referenced a trajectory id not in the buffer."""


class FrozenBasePriorityError(RuntimeError):
    """Reward-based base priorities are fixed at collection time."""


class BufferEntry:
    """A stored trajectory plus its live priority bookkeeping.

    Priorities are read through the owning buffer's arrays so a full-buffer
    refresh needs no per-entry Python work; eviction freezes the last values
    into the entry so stale references never alias a reused slot.
    """

    __slots__ = ("trajectory", "signal", "slot", "_buffer", "_frozen")

    def __init__(self, trajectory: Trajectory, signal: PrioritySignal, slot: int, buffer: "ReplayBuffer"):
        self.trajectory = trajectory
        self.signal = signal
        self.slot = slot
        self._buffer = buffer
        self._frozen: Optional[tuple[float, float]] = None

    @property
    def base_priority(self) -> float:
        if self._frozen is not None:
            return self._frozen[0]
        return float(self._buffer._bases[self.slot])

    @property
    def effective_priority(self) -> float:
        if self._frozen is not None:
            return self._frozen[1]
        return float(self._buffer._effectives[self.slot])

    @property
    def evicted(self) -> bool:
        return self._frozen is not None

    def __repr__(self) -> str:
        return (
            f"BufferEntry(id={self.trajectory.trajectory_id}, slot={self.slot}, "
            f"base={self.base_priority!r}, effective={self.effective_priority!r})"
        )


@dataclass(frozen=True)
class PrioritizedBatch:
    """One stratified sample: entries plus the probabilities and IS weights."""

    entries: list[BufferEntry]
    sample_probs: np.ndarray
    is_weights: np.ndarray
    buffer_size_at_sample: int


@dataclass(frozen=True)
class RefreshReport:
    entries_scanned: int
    wall_time: float


def _refresh_threads() -> int:
    raw = os.environ.get("FRESHREPLAY_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class ReplayBuffer:
    def __init__(
        self,
        capacity: int,
        priority: PriorityConfig,
        eviction_policy: str = "lowest_effective_priority",
        rng: Optional[np.random.Generator] = None,
        backend=None,
    ):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if eviction_policy not in ("lowest_effective_priority", "fifo"):
            raise ValueError(f"unknown eviction policy: {eviction_policy!r}")
        self.capacity = capacity
        self.priority = priority
        self.eviction_policy = eviction_policy
        self._kern = backend if backend is not None else _kernels.kernels
        self._tree = SumTree(capacity, backend=self._kern)
        self._entries: list[Optional[BufferEntry]] = [None] * capacity
        self._bases = np.zeros(capacity, dtype=np.float64)
        self._decays = np.zeros(capacity, dtype=np.float64)
        self._effectives = np.full(capacity, np.inf, dtype=np.float64)
        self._collection_steps = np.zeros(capacity, dtype=np.int64)
        self._insert_seq = np.full(capacity, _NO_SEQ, dtype=np.int64)
        self._id_to_slot: dict[int, int] = {}
        self._free = list(range(capacity - 1, -1, -1))  # pops ascending
        self._size = 0
        self._next_id = 0
        self._seq = 0
        self._rng = rng if rng is not None else np.random.default_rng()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._size

    @property
    def occupancy(self) -> int:
        return self._size

    # -- insertion and eviction ----------------------------------------------

    def insert(self, trajectory: Trajectory, signal: PrioritySignal, current_step: int) -> int:
        """Store a trajectory, evicting one entry first if at capacity.

        Returns the slot the entry landed in; the assigned trajectory id is
        readable from the stored entry.
        """
        problems = validate_trajectory(trajectory)
        if problems:
            raise ValueError("invalid trajectory: " + "; ".join(problems))
        age = current_step - trajectory.collection_step
        if age < 0:
            raise ValueError("current_step precedes the trajectory's collection_step")
        base = base_priority(signal, self.priority)
        with self._lock:
            if self._size == self.capacity:
                self._evict_locked()
            slot = self._free.pop()
            if trajectory.trajectory_id < 0:
                traj = trajectory.with_id(self._next_id)
            elif trajectory.trajectory_id in self._id_to_slot:
                raise ValueError(f"trajectory id {trajectory.trajectory_id} already stored")
            else:
                traj = trajectory
            self._next_id = max(self._next_id, traj.trajectory_id) + 1
            decay = age_decay(age, self.priority.tau)
            effective = base * decay
            entry = BufferEntry(traj, signal, slot, self)
            self._entries[slot] = entry
            self._bases[slot] = base
            self._decays[slot] = decay
            self._effectives[slot] = effective
            self._collection_steps[slot] = traj.collection_step
            self._insert_seq[slot] = self._seq
            self._seq += 1
            self._id_to_slot[traj.trajectory_id] = slot
            self._size += 1
            self._tree.set_leaf(slot, effective**self.priority.alpha)
            return slot

    def _evict_locked(self) -> None:
        # exact priority ties break toward the lowest slot index
        if self.eviction_policy == "fifo":
            slot = int(np.argmin(self._insert_seq))
        else:
            slot = int(np.argmin(self._effectives))
        entry = self._entries[slot]
        assert entry is not None
        entry._frozen = (float(self._bases[slot]), float(self._effectives[slot]))
        del self._id_to_slot[entry.trajectory.trajectory_id]
        self._entries[slot] = None
        self._bases[slot] = 0.0
        self._decays[slot] = 0.0
        self._effectives[slot] = np.inf
        self._insert_seq[slot] = _NO_SEQ
        self._tree.set_leaf(slot, 0.0)
        self._free.append(slot)
        self._size -= 1

    # -- sampling --------------------------------------------------------------

    def sample_stratified(self, batch_size: int, beta: float) -> PrioritizedBatch:
        """Draw one entry uniformly from each of ``batch_size`` equal segments
        of the total priority mass.  Duplicates across segments are allowed and
        each draw keeps its own importance weight.
        """
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        with self._lock:
            total = self._tree.total()
            if self._size == 0 or total <= 0.0:
                raise EmptyBufferError("cannot sample: buffer empty or zero total priority")
            segment = total / batch_size
            xs = (np.arange(batch_size) + self._rng.random(batch_size)) * segment
            np.minimum(xs, np.nextafter(total, 0.0), out=xs)
            slots = self._tree.prefix_find_many(xs)
            leaves = self._sum_leaves()[slots]
            probs = leaves / total
            min_leaf = self._tree.min_transformed()
            weights = (min_leaf / leaves) ** beta
            entries = [self._entries[s] for s in slots]
            if any(e is None for e in entries):
                raise RuntimeError("sampler hit a vacant slot; tree out of sync")
            return PrioritizedBatch(
                entries=entries,  # type: ignore[arg-type]
                sample_probs=probs,
                is_weights=weights,
                buffer_size_at_sample=self._size,
            )

    def _sum_leaves(self) -> np.ndarray:
        sum_tree, _, base = self._tree.arrays
        return sum_tree[base : base + self.capacity]

    # -- priority maintenance ----------------------------------------------------

    def refresh_priorities(self, current_step: int) -> RefreshReport:
        """Recompute every effective priority at the current age and rebuild
        the tree from scratch (bounding float drift from incremental updates).
        """
        start = time.perf_counter()
        with self._lock:
            slots = np.flatnonzero(self._insert_seq != _NO_SEQ)
            n = slots.size
            if n == 0:
                return RefreshReport(0, time.perf_counter() - start)
            ages = (current_step - self._collection_steps[slots]).astype(np.float64)
            if ages.min() < 0.0:
                raise ValueError("current_step precedes a stored collection_step")
            bases = np.ascontiguousarray(self._bases[slots])
            decays = np.empty(n, dtype=np.float64)
            effectives = np.empty(n, dtype=np.float64)
            leaves = np.empty(n, dtype=np.float64)
            self._decay_compute(bases, ages, decays, effectives, leaves)
            self._decays[slots] = decays
            self._effectives[slots] = effectives
            sum_tree, min_tree, base = self._tree.arrays
            sum_tree[base + slots] = leaves
            min_tree[base + slots] = leaves
            self._tree.rebuild()
            return RefreshReport(int(n), time.perf_counter() - start)

    def _decay_compute(self, bases, ages, decays, effectives, leaves) -> None:
        kern = self._kern.decay_compute
        tau = self.priority.tau
        alpha = self.priority.alpha
        workers = _refresh_threads()
        n = bases.shape[0]
        if workers <= 1 or n < 8192:
            kern(bases, ages, tau, alpha, decays, effectives, leaves)
            return
        chunk = (n + workers - 1) // workers
        spans = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(
                pool.map(
                    lambda span: kern(
                        bases[span[0] : span[1]],
                        ages[span[0] : span[1]],
                        tau,
                        alpha,
                        decays[span[0] : span[1]],
                        effectives[span[0] : span[1]],
                        leaves[span[0] : span[1]],
                    ),
                    spans,
                )
            )

    def update_base_priority(self, trajectory_id: int, new_signal: PrioritySignal) -> None:
        """Recompute one entry's base (advantage/TD modes only) keeping its
        current decay factor.  Reward bases are frozen at collection, so a
        reward-mode call signals misuse.
        """
        if self.priority.base_kind == "reward_magnitude":
            raise FrozenBasePriorityError("base priority is frozen in reward mode")
        with self._lock:
            slot = self._id_to_slot.get(trajectory_id)
            if slot is None:
                raise UnknownTrajectoryError(trajectory_id)
            entry = self._entries[slot]
            assert entry is not None
            new_base = base_priority(new_signal, self.priority)
            entry.signal = new_signal
            if new_base == self._bases[slot]:
                return  # leaf bit-identical, skip the tree walk
            effective = new_base * self._decays[slot]
            self._bases[slot] = new_base
            self._effectives[slot] = effective
            self._tree.set_leaf(slot, effective**self.priority.alpha)

    # -- introspection -------------------------------------------------------------

    def entry_for(self, trajectory_id: int) -> BufferEntry:
        with self._lock:
            slot = self._id_to_slot.get(trajectory_id)
            if slot is None:
                raise UnknownTrajectoryError(trajectory_id)
            entry = self._entries[slot]
            assert entry is not None
            return entry

    def entries(self) -> list[BufferEntry]:
        with self._lock:
            return [e for e in self._entries if e is not None]

    def total_transformed(self) -> float:
        return self._tree.total()

    def min_transformed(self) -> float:
        return self._tree.min_transformed()

    def snapshot_lines(self) -> list[str]:
        """Buffer snapshot as line records, ascending trajectory id.

        Format (space-separated, floats via ``repr`` for exact round-trip):
        ``trajectory_id collection_step base_priority effective_priority``
        """
        with self._lock:
            live = [e for e in self._entries if e is not None]
            live.sort(key=lambda e: e.trajectory.trajectory_id)
            return [
                f"{e.trajectory.trajectory_id} {e.trajectory.collection_step} "
                f"{float(self._bases[e.slot])!r} {float(self._effectives[e.slot])!r}"
                for e in live
            ]

    def dump_snapshot(self) -> str:
        lines = self.snapshot_lines()
        return "\n".join(lines) + ("\n" if lines else "")
