"""Sum segment tree with an integrated min tracker.

Leaves hold transformed priorities (p^alpha); internal nodes hold pairwise
sums, so drawing an index proportional to its leaf value is an O(log N)
descent.  A twin tree tracks the minimum over occupied leaves (value > 0),
which is what importance-weight normalization needs: the smallest sampling
probability yields the largest weight.

Not internally synchronized: one writer at a time, readers only while no
writer is active.  The replay buffer enforces that discipline.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels


class SumTree:
    def __init__(self, capacity: int, backend=None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._kern = backend if backend is not None else _kernels.kernels
        self._base = 1 << (capacity - 1).bit_length()
        self._sum = np.zeros(2 * self._base, dtype=np.float64)
        self._min = np.full(2 * self._base, math.inf, dtype=np.float64)

    # -- writes ------------------------------------------------------------

    def set_leaf(self, index: int, value: float) -> None:
        """Set one leaf and rewrite ancestor sums/mins bottom-up.

        A value of 0 marks the slot vacant: it keeps zero sampling mass and
        drops out of the min tracker.
        """
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf index {index} out of range [0, {self.capacity})")
        if not (isinstance(value, (int, float)) and math.isfinite(value)) or value < 0.0:
            raise ValueError(f"leaf value must be finite and >= 0, got {value!r}")
        self._kern.set_leaf(self._sum, self._min, self._base, index, float(value))

    def rebuild(self) -> None:
        """Recompute every internal node from the leaves, flushing any drift."""
        self._kern.rebuild(self._sum, self._min, self._base)

    # -- reads -------------------------------------------------------------

    def total(self) -> float:
        return float(self._sum[1])

    def min_transformed(self) -> float:
        m = self._min[1]
        if math.isinf(m):
            raise ValueError("min_transformed on a tree with no occupied leaves")
        return float(m)

    def leaf(self, index: int) -> float:
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf index {index} out of range [0, {self.capacity})")
        return float(self._sum[self._base + index])

    def leaves(self) -> np.ndarray:
        """Read-only view of the live leaf row (length = capacity)."""
        view = self._sum[self._base : self._base + self.capacity]
        view.flags.writeable = False
        return view

    def prefix_find(self, x: float) -> int:
        """Smallest index whose cumulative leaf sum strictly exceeds ``x``.

        Segments are left-closed, so ``x`` exactly on a boundary selects the
        next leaf and a zero-valued leaf can never be returned.
        """
        total = self._sum[1]
        if total <= 0.0:
            raise ValueError("prefix_find on a tree with zero total mass")
        if not 0.0 <= x < total:
            raise ValueError(f"x={x!r} outside [0, {total})")
        return int(self._kern.prefix_find(self._sum, self._base, float(x)))

    def prefix_find_many(self, xs: np.ndarray) -> np.ndarray:
        total = self._sum[1]
        if total <= 0.0:
            raise ValueError("prefix_find on a tree with zero total mass")
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        if xs.size and (xs.min() < 0.0 or xs.max() >= total):
            raise ValueError("prefix positions outside [0, total())")
        return np.asarray(self._kern.prefix_find_batch(self._sum, self._base, xs))

    # -- kernel plumbing (used by the buffer's refresh path) ---------------

    @property
    def arrays(self):
        return self._sum, self._min, self._base
