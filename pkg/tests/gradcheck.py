"""Shared finite-difference oracle for the policy-gradient tests."""

import numpy as np

from freshreplay import Step, Trajectory
from freshreplay.trainer import log_softmax, policy_surrogate_loss


def random_instance(rng, n_states=3, n_actions=4, n_trajs=2, max_len=6):
    """A random batch plus random theta/value tables, for gradient checks.

    Theta stays near mu so ratios sit inside the clip band, away from the
    kinks where a central difference would straddle the non-smooth point.
    """
    mu_logits = rng.normal(0.0, 0.3, (n_states, n_actions))
    mu_logp = log_softmax(mu_logits)
    batch = []
    for _ in range(n_trajs):
        n = int(rng.integers(2, max_len))
        steps = []
        for t in range(n):
            s = int(rng.integers(n_states))
            a = int(rng.integers(n_actions))
            steps.append(
                Step(s, a, float(rng.normal()), float(mu_logp[s, a]), int(rng.integers(n_states)), t == n - 1)
            )
        batch.append((Trajectory.from_steps(steps, 0), float(rng.uniform(0.3, 1.0))))
    logits = mu_logits + rng.normal(0.0, 0.05, (n_states, n_actions))
    value = rng.normal(0.0, 0.5, n_states)
    return logits, value, batch


def fd_gradient(logits, value, batch, config, h=1e-5):
    """Central finite differences of the surrogate loss wrt every logit."""
    g = np.zeros_like(logits)
    for i in range(logits.shape[0]):
        for j in range(logits.shape[1]):
            up = logits.copy()
            up[i, j] += h
            down = logits.copy()
            down[i, j] -= h
            g[i, j] = (
                policy_surrogate_loss(up, value, batch, config)
                - policy_surrogate_loss(down, value, batch, config)
            ) / (2.0 * h)
    return g
