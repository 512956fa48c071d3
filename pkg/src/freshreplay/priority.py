"""Priority model: base priorities, exponential age decay, and their product.

An entry's sampling priority is ``base * exp(-age / tau)``: the base term
measures how informative the trajectory looked when collected (absolute
reward, advantage, or TD error, plus a floor), the decay term discounts it
as the policy drifts away from the one that generated it.  ``tau`` is the
decay constant in gradient steps; the priority halves every ``tau * ln 2``
steps, and ``tau = inf`` reduces the whole model to plain prioritized
replay.
"""

from __future__ import annotations

import math

from ._kernels import DECAY_FLOOR
from .config import PriorityConfig
from .types import PrioritySignal

_SIGNAL_FIELD = {
    "reward_magnitude": "reward",
    "advantage_magnitude": "advantage",
    "td_error_magnitude": "td_error",
}


def base_priority(signal: PrioritySignal, config: PriorityConfig) -> float:
    """|selected signal| + epsilon; strictly positive by construction."""
    field = _SIGNAL_FIELD[config.base_kind]
    value = getattr(signal, field)
    if value is None:
        raise ValueError(f"priority signal is missing {field!r} (base_kind={config.base_kind})")
    if not math.isfinite(value):
        raise ValueError(f"priority signal {field!r} must be finite, got {value!r}")
    return abs(value) + config.epsilon


def age_decay(age: float, tau: float) -> float:
    """exp(-age/tau), floored at 1e-300 so very old entries never hit zero."""
    if age < 0:
        raise ValueError(f"age must be non-negative, got {age}")
    if math.isinf(tau) or age == 0:
        return 1.0
    return max(math.exp(-age / tau), DECAY_FLOOR)


def effective_priority(base: float, age: float, config: PriorityConfig) -> float:
    if base <= 0.0:
        raise ValueError(f"base priority must be positive, got {base!r}")
    return base * age_decay(age, config.tau)


def beta_at(step: int, config: PriorityConfig) -> float:
    """Importance-sampling exponent at a training step (linear anneal)."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if config.beta_anneal_steps == 0:
        return config.beta_start
    frac = min(step / config.beta_anneal_steps, 1.0)
    return config.beta_start + (config.beta_end - config.beta_start) * frac
