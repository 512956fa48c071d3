"""Numpy fallback for the hot kernels.

Same contract as the compiled module ``_ct``: dual segment trees laid out
as flat arrays of length ``2 * base`` (``base`` a power of two), leaves in
``[base, 2 * base)``, node 1 the root, node 0 unused.  The sum tree holds
transformed priorities; the min tree holds the same values for occupied
leaves and +inf for vacant ones (a leaf is vacant iff its sum value is 0).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# exp(-age/tau) is floored here so an extremely old entry keeps a strictly
# positive leaf and stays reachable (and evictable) instead of stranding.
DECAY_FLOOR = 1e-300

_INF = float("inf")


def set_leaf(sum_tree: np.ndarray, min_tree: np.ndarray, base: int, idx: int, value: float) -> None:
    i = base + idx
    sum_tree[i] = value
    min_tree[i] = value if value > 0.0 else _INF
    i >>= 1
    while i >= 1:
        left = 2 * i
        sum_tree[i] = sum_tree[left] + sum_tree[left + 1]
        a = min_tree[left]
        b = min_tree[left + 1]
        min_tree[i] = a if a < b else b
        i >>= 1


def prefix_find(sum_tree: np.ndarray, base: int, x: float) -> int:
    i = 1
    while i < base:
        left = 2 * i
        left_sum = sum_tree[left]
        if x < left_sum:
            i = left
        else:
            x -= left_sum
            i = left + 1
    return i - base


def prefix_find_batch(sum_tree: np.ndarray, base: int, xs: np.ndarray) -> np.ndarray:
    """Vectorized descent: all queries walk one tree level per pass."""
    n = xs.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    nodes = np.ones(n, dtype=np.int64)
    remaining = xs.astype(np.float64, copy=True)
    node = 1
    while node < base:
        nodes <<= 1
        left_sums = sum_tree[nodes]
        go_right = remaining >= left_sums
        remaining -= np.where(go_right, left_sums, 0.0)
        nodes += go_right
        node <<= 1
    return nodes - base


def rebuild(sum_tree: np.ndarray, min_tree: np.ndarray, base: int) -> None:
    n = base
    while n > 1:
        s = sum_tree[n : 2 * n]
        sum_tree[n >> 1 : n] = s[0::2] + s[1::2]
        m = min_tree[n : 2 * n]
        np.minimum(m[0::2], m[1::2], out=min_tree[n >> 1 : n])
        n >>= 1


def decay_compute(
    bases: np.ndarray,
    ages: np.ndarray,
    tau: float,
    alpha: float,
    decays_out: np.ndarray,
    effectives_out: np.ndarray,
    leaves_out: np.ndarray,
) -> None:
    """Elementwise refresh math over contiguous per-entry arrays.

    decay = max(exp(-age/tau), floor); effective = base * decay;
    leaf = effective ** alpha.  Chunk-splittable: results depend only on the
    element, so parallel callers get identical values.
    """
    np.divide(ages, tau, out=decays_out)
    np.negative(decays_out, out=decays_out)
    np.exp(decays_out, out=decays_out)
    np.maximum(decays_out, DECAY_FLOOR, out=decays_out)
    np.multiply(bases, decays_out, out=effectives_out)
    np.power(effectives_out, alpha, out=leaves_out)
