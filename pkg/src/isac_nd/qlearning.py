"""Tabular Q-learning for beam selection.

State is the transceiver mode (0 = receive, 1 = transmit), action is the
beam index. Each node owns a 2 x B0 table that starts at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError

RECEIVE = 0
TRANSMIT = 1


def new_q_table(beam_count: int) -> np.ndarray:
    return np.zeros((2, beam_count), dtype=np.float64)


@dataclass(frozen=True)
class ExplorationSchedule:
    epsilon0: float = 0.5
    decay: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon0 <= 1.0:
            raise ConfigError("epsilon0 must lie in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError("decay must lie in (0, 1]")

    def epsilon(self, t: int) -> float:
        return self.epsilon0 * self.decay**t


def extreme_point(n_nodes: int, beam_count: int) -> int:
    """Mode of Poisson(n_nodes / beam_count).

    At integer lambda both lambda-1 and lambda are modes; the larger is taken.
    """
    if n_nodes < 1 or beam_count < 1:
        raise ValueError("n_nodes and beam_count must be >= 1")
    return math.floor(n_nodes / beam_count)


def reward(rl: int, cl: int, ep: int) -> int:
    if rl > cl:
        return 2
    if cl <= ep:
        return 1
    return -1


def rewards(rl: np.ndarray, cl: np.ndarray, ep: int) -> np.ndarray:
    return np.where(rl > cl, 2, np.where(cl <= ep, 1, -1))


def q_update(
    q: np.ndarray, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float
) -> np.ndarray:
    """One-step Q-learning update; returns a new table."""
    out = q.copy()
    target = r + gamma * np.max(q[s_next])
    out[s, a] = q[s, a] + alpha * (target - q[s, a])
    return out


def q_update_many(
    q: np.ndarray,
    states: np.ndarray,
    actions: np.ndarray,
    r: np.ndarray,
    next_states: np.ndarray,
    alpha: float,
    gamma: float,
) -> None:
    """In-place update of stacked per-node tables ``q[node, state, beam]``."""
    idx = np.arange(len(states))
    best_next = q[idx, next_states].max(axis=1)
    current = q[idx, states, actions]
    q[idx, states, actions] = current + alpha * (r + gamma * best_next - current)


def _greedy(values: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(values == values.max())
    return int(best[rng.integers(len(best))])


def select_action(q: np.ndarray, s: int, epsilon: float, rng: np.random.Generator) -> int:
    beam_count = q.shape[1]
    if not np.any(q):
        return int(rng.integers(beam_count))
    if rng.random() < epsilon:
        return int(rng.integers(beam_count))
    return _greedy(q[s], rng)


def select_actions(
    q: np.ndarray, states: np.ndarray, epsilon: float, rng: np.random.Generator
) -> np.ndarray:
    """Vectorised epsilon-greedy over stacked tables; draws a fixed amount of randomness."""
    n, _, beam_count = q.shape
    explore = rng.random(n) < epsilon
    random_beam = rng.integers(beam_count, size=n)
    tie_keys = rng.random((n, beam_count))
    rows = q[np.arange(n), states]
    at_max = rows == rows.max(axis=1, keepdims=True)
    greedy = np.argmax(np.where(at_max, tie_keys, -1.0), axis=1)
    fresh = ~q.reshape(n, -1).any(axis=1)
    return np.where(explore | fresh, random_beam, greedy)
