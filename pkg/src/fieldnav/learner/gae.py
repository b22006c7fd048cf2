"""Generalized advantage estimation over a collected rollout.

Deltas bootstrap from the value of each step's successor observation;
termination zeroes the bootstrap, truncation keeps it but stops the
exponential carry (as does any episode boundary).
"""

from __future__ import annotations

import numpy as np


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    next_values: np.ndarray,
    terminated: np.ndarray,
    truncated: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns for one rollout.

    ``next_values[t]`` is V of the observation produced by step t (the
    terminal observation when the episode ended there). Returns are
    advantages + values.
    """
    n = len(rewards)
    advantages = np.zeros(n)
    carry = 0.0
    for t in range(n - 1, -1, -1):
        not_term = 0.0 if terminated[t] else 1.0
        boundary = 0.0 if (terminated[t] or truncated[t]) else 1.0
        delta = rewards[t] + gamma * next_values[t] * not_term - values[t]
        carry = delta + gamma * lam * boundary * carry
        advantages[t] = carry
    return advantages, advantages + values
