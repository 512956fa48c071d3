"""freshreplay: trajectory-level prioritized replay with age-decaying priorities.

The buffer samples stored trajectories proportionally to an effective
priority ``base * exp(-age / tau)``, so informative-but-stale entries lose
sampling mass as the policy that produced them drifts away.  The package
also ships an exact-enumeration divergence lab for the underlying
effective-sample-size analysis and a small gridworld training harness that
exercises the full loop.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .buffer import (
    BufferEntry,
    EmptyBufferError,
    FrozenBasePriorityError,
    PrioritizedBatch,
    RefreshReport,
    ReplayBuffer,
    UnknownTrajectoryError,
)
from .config import (
    ConfigError,
    PriorityConfig,
    RunConfig,
    format_config,
    load_config,
    parse_config,
    set_key,
    validate,
)
from .divergence import (
    DiscreteDist,
    DivergenceReport,
    SupportViolationError,
    divergence_report,
    drift_ess_curve,
    empirical_ess,
    importance_ratios,
)
from .envs import CliffWalking, EnvOutcome, EpisodeDoneError, FrozenLake, GridEnvState, make_env
from .index import SumTree
from .priority import age_decay, base_priority, beta_at, effective_priority
from .trainer import (
    PolicyState,
    Trainer,
    TrainMetrics,
    load_checkpoint,
    policy_gradient_update,
    rollout,
    save_checkpoint,
)
from .types import PrioritySignal, Step, Trajectory, validate_trajectory

__version__ = "0.1.0"

__all__ = [
    "BufferEntry",
    "CliffWalking",
    "ConfigError",
    "DiscreteDist",
    "DivergenceReport",
    "EmptyBufferError",
    "EnvOutcome",
    "EpisodeDoneError",
    "FrozenBasePriorityError",
    "FrozenLake",
    "GridEnvState",
    "KERNEL_BACKEND",
    "PolicyState",
    "PrioritizedBatch",
    "PriorityConfig",
    "PrioritySignal",
    "RefreshReport",
    "ReplayBuffer",
    "RunConfig",
    "Step",
    "SumTree",
    "SupportViolationError",
    "Trainer",
    "TrainMetrics",
    "Trajectory",
    "UnknownTrajectoryError",
    "age_decay",
    "base_priority",
    "beta_at",
    "divergence_report",
    "drift_ess_curve",
    "effective_priority",
    "empirical_ess",
    "format_config",
    "importance_ratios",
    "load_checkpoint",
    "load_config",
    "make_env",
    "parse_config",
    "policy_gradient_update",
    "rollout",
    "save_checkpoint",
    "set_key",
    "validate",
    "validate_trajectory",
    "__version__",
]
