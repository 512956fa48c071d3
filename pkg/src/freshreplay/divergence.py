"""Importance-ratio diagnostics over finite discrete distributions.

Everything here is exact enumeration over a common finite support, so the
relationships between the quantities hold as sharp identities rather than
Monte Carlo estimates:

* ``Var_Q[rho] == chi2(P||Q)``             (two independent computations)
* ``chi2 == exp(renyi2) - 1``              and ``renyi2 >= kl``
* ``ess == n / (1 + var_rho) <= n * exp(-kl)``
* ``E_Q[rho] == 1``

KL uses natural log (the exp/log pairing above forces nats), and the
``0 * log(0/q) = 0`` convention applies on sparse supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_NORM_TOL = 1e-9


class SupportViolationError(ValueError):
    """The target places mass where the behavior distribution has none."""


class DiscreteDist:
    """A probability vector over a finite support."""

    __slots__ = ("probs",)

    def __init__(self, probs: Sequence[float]):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("probs must be a non-empty 1-D sequence")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("probs must be finite and non-negative")
        if abs(float(arr.sum()) - 1.0) > _NORM_TOL:
            raise ValueError(f"probs must sum to 1 within {_NORM_TOL}, got {arr.sum()!r}")
        self.probs = arr

    def __len__(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(n: int) -> "DiscreteDist":
        return DiscreteDist(np.full(n, 1.0 / n))

    @staticmethod
    def softmax(logits: Sequence[float]) -> "DiscreteDist":
        z = np.asarray(logits, dtype=np.float64)
        z = z - z.max()
        e = np.exp(z)
        return DiscreteDist(e / e.sum())


@dataclass(frozen=True)
class DivergenceReport:
    """Divergences and effective-sample-size figures for one (P, Q) pair."""

    var_rho: float
    chi2: float
    kl: float
    renyi2: float
    ess: float
    n: int
    ess_kl_bound: float


def _check_support(target: np.ndarray, behavior: np.ndarray) -> None:
    if target.shape != behavior.shape:
        raise ValueError("target and behavior must share a support")
    if np.any((target > 0.0) & (behavior == 0.0)):
        raise SupportViolationError("target has mass where behavior has none")


def importance_ratios(target: DiscreteDist, behavior: DiscreteDist) -> np.ndarray:
    """rho_i = P_i / Q_i on Q's support (0 where Q_i = 0, which P matches)."""
    p, q = target.probs, behavior.probs
    _check_support(p, q)
    rho = np.zeros_like(p)
    np.divide(p, q, out=rho, where=q > 0.0)
    return rho


def divergence_report(target: DiscreteDist, behavior: DiscreteDist, n: int) -> DivergenceReport:
    """Exact divergence suite for a (target, behavior) pair at sample count n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p, q = target.probs, behavior.probs
    rho = importance_ratios(target, behavior)
    mean_rho = float(np.dot(q, rho))
    second_moment = float(np.dot(q, rho * rho))
    var_rho = second_moment - mean_rho**2
    chi2 = float(np.dot(q, (rho - 1.0) ** 2))
    renyi2 = math.log(second_moment)
    support = p > 0.0
    kl = float(np.sum(p[support] * np.log(p[support] / q[support])))
    ess = n / (1.0 + var_rho)
    return DivergenceReport(
        var_rho=var_rho,
        chi2=chi2,
        kl=kl,
        renyi2=renyi2,
        ess=ess,
        n=n,
        ess_kl_bound=n * math.exp(-kl),
    )


def empirical_ess(weights: Sequence[float]) -> float:
    """(sum w)^2 / sum w^2 for sampled importance weights; n when all equal."""
    arr = np.asarray(weights, dtype=np.float64)
    if arr.size < 1:
        raise ValueError("need at least one weight")
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("weights must be positive and finite")
    s = float(arr.sum())
    return s * s / float(np.dot(arr, arr))


def drift_ess_curve(
    policy_path: Sequence[DiscreteDist], behavior_index: int, n: int
) -> list[tuple[int, float, float]]:
    """(delta, ess, kl) for each policy along a drift path vs. a fixed behavior.

    delta counts steps past ``behavior_index``; delta = 0 is the behavior
    against itself (ess = n, kl = 0).
    """
    if len(policy_path) < 2:
        raise ValueError("policy path must contain at least two distributions")
    if not 0 <= behavior_index < len(policy_path):
        raise IndexError(f"behavior_index {behavior_index} out of range")
    behavior = policy_path[behavior_index]
    curve = []
    for delta, target in enumerate(policy_path[behavior_index:]):
        report = divergence_report(target, behavior, n)
        curve.append((delta, report.ess, report.kl))
    return curve
