"""Experiment configuration: dataclasses, validation, and the config file format.

The on-disk format is flat ``key = value`` text with dotted section names
(``priority.alpha = 0.6``).  Unknown keys are a parse error so a typo fails
fast instead of silently running with a default.  The exact key set is the
one produced by :func:`format_config`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Union

BASE_KINDS = ("reward_magnitude", "advantage_magnitude", "td_error_magnitude")
EVICTION_POLICIES = ("lowest_effective_priority", "fifo")
METHODS = ("on_policy", "standard_per", "fresh_per")
ENV_NAMES = ("cliffwalking", "frozenlake")


class ConfigError(ValueError):
    """Raised on config file parse failures and --set errors."""


@dataclass(frozen=True)
class PriorityConfig:
    """Knobs of the priority model.

    ``tau`` is the age-decay constant in gradient steps; ``math.inf``
    disables decay entirely (plain prioritized replay).  ``epsilon`` is the
    additive priority floor; it has no published value, 0.01 is this
    package's default.
    """

    alpha: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    beta_anneal_steps: int = 0
    tau: float = 500.0
    epsilon: float = 0.01
    base_kind: str = "reward_magnitude"


@dataclass(frozen=True)
class RunConfig:
    """Everything a training run needs, including the seed."""

    priority: PriorityConfig = field(default_factory=PriorityConfig)
    env: str = "cliffwalking"
    method: str = "fresh_per"
    buffer_capacity: int = 50_000
    replay_ratio_K: int = 2
    batch_size_B: int = 16
    rollout_batch: int = 16
    clip_epsilon: float = 0.2
    advantage_clip: float = 0.2
    learning_rate: float = 60.0
    max_iterations: int = 400
    seed: int = 42
    eviction_policy: str = "lowest_effective_priority"
    sync_refresh: bool = True


def validate(config: RunConfig) -> list[str]:
    """Return one message per violated invariant; an empty list means ok."""
    errors: list[str] = []
    p = config.priority

    def _num(x) -> bool:
        return isinstance(x, (int, float)) and not isinstance(x, bool)

    if not (_num(p.alpha) and 0.0 <= p.alpha <= 1.0):
        errors.append("priority.alpha must lie in [0, 1]")
    if not (_num(p.beta_start) and _num(p.beta_end) and 0.0 <= p.beta_start <= p.beta_end <= 1.0):
        errors.append("priority beta schedule must satisfy 0 <= beta_start <= beta_end <= 1")
    if not (isinstance(p.beta_anneal_steps, int) and p.beta_anneal_steps >= 0):
        errors.append("priority.beta_anneal_steps must be a non-negative integer")
    if not (_num(p.tau) and p.tau > 0.0):
        errors.append("priority.tau must be positive (inf allowed)")
    if not (_num(p.epsilon) and p.epsilon > 0.0 and math.isfinite(p.epsilon)):
        errors.append("priority.epsilon must be a positive finite value")
    if p.base_kind not in BASE_KINDS:
        errors.append(f"priority.base_kind must be one of {BASE_KINDS}")

    if config.env not in ENV_NAMES:
        errors.append(f"env must be one of {ENV_NAMES}")
    if config.method not in METHODS:
        errors.append(f"method must be one of {METHODS}")
    if config.eviction_policy not in EVICTION_POLICIES:
        errors.append(f"eviction_policy must be one of {EVICTION_POLICIES}")
    if not (isinstance(config.buffer_capacity, int) and config.buffer_capacity >= 1):
        errors.append("buffer_capacity must be a positive integer")
    if not (isinstance(config.replay_ratio_K, int) and config.replay_ratio_K >= 0):
        errors.append("replay_ratio_K must be a non-negative integer")
    if not (isinstance(config.batch_size_B, int) and config.batch_size_B >= 1):
        errors.append("batch_size_B must be a positive integer")
    elif (
        isinstance(config.buffer_capacity, int)
        and config.buffer_capacity >= 1
        and config.batch_size_B > config.buffer_capacity
    ):
        errors.append("batch_size_B must not exceed buffer_capacity")
    if not (isinstance(config.rollout_batch, int) and config.rollout_batch >= 1):
        errors.append("rollout_batch must be a positive integer")
    if not (_num(config.clip_epsilon) and config.clip_epsilon > 0.0):
        errors.append("clip_epsilon must be positive")
    if not (_num(config.advantage_clip) and config.advantage_clip > 0.0):
        errors.append("advantage_clip must be positive")
    if not (_num(config.learning_rate) and config.learning_rate > 0.0):
        errors.append("learning_rate must be positive")
    if not (isinstance(config.max_iterations, int) and config.max_iterations >= 1):
        errors.append("max_iterations must be a positive integer")
    if not isinstance(config.seed, int):
        errors.append("seed must be an integer")
    return errors


# ---------------------------------------------------------------------------
# flat key=value file format


_PRIORITY_FIELDS = {f.name: f.type for f in fields(PriorityConfig)}
_RUN_FIELDS = {f.name: f.type for f in fields(RunConfig) if f.name != "priority"}

_BOOL_WORDS = {"true": True, "false": False}


def _parse_scalar(key: str, raw: str, kind: str):
    raw = raw.strip()
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected integer, got {raw!r}") from None
    if kind == "float":
        if raw.lower() in ("inf", "infinity"):
            return math.inf
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected number, got {raw!r}") from None
    if kind == "bool":
        if raw.lower() in _BOOL_WORDS:
            return _BOOL_WORDS[raw.lower()]
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    return raw


def _field_kind(py_type: Union[str, type]) -> str:
    name = py_type if isinstance(py_type, str) else py_type.__name__
    return {"int": "int", "float": "float", "bool": "bool", "str": "str"}[name]


def set_key(config: RunConfig, key: str, raw_value: str) -> RunConfig:
    """Return a copy of ``config`` with one dotted key replaced."""
    if key.startswith("priority."):
        sub = key[len("priority."):]
        if sub not in _PRIORITY_FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        value = _parse_scalar(key, raw_value, _field_kind(_PRIORITY_FIELDS[sub]))
        return replace(config, priority=replace(config.priority, **{sub: value}))
    if key not in _RUN_FIELDS:
        raise ConfigError(f"unknown config key: {key}")
    value = _parse_scalar(key, raw_value, _field_kind(_RUN_FIELDS[key]))
    return replace(config, **{key: value})


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def format_config(config: RunConfig) -> str:
    """Serialize to the flat file format; parses back field-for-field equal."""
    lines = []
    for name in _RUN_FIELDS:
        lines.append(f"{name} = {_format_value(getattr(config, name))}")
    for name in _PRIORITY_FIELDS:
        lines.append(f"priority.{name} = {_format_value(getattr(config.priority, name))}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse the flat format, failing fast on malformed lines or unknown keys."""
    config = base if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        config = set_key(config, key.strip(), raw)
    return config


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base=base)
