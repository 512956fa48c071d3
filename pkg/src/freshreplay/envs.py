"""Desk-scale episodic gridworlds.

CliffWalking: 4x12, deterministic moves, stepping onto the cliff costs -100
and teleports the agent back to the start without ending the episode; every
other step is reward 0, so the optimal score is exactly 0.

FrozenLake: 4x4 slippery ice; the agent moves in the intended direction
with probability 1/3 and slides to each perpendicular direction with
probability 1/3.  Reaching the goal pays 1, falling in a hole pays 0 and
ends the episode.  The hole placement is a fixed documented constant: the
4x4 map below (S start, F frozen, H hole, G goal).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
ACTION_NAMES = ("up", "down", "left", "right")
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))
# perpendicular slip directions, in the draw order k=1, k=2
_PERP = {UP: (LEFT, RIGHT), DOWN: (LEFT, RIGHT), LEFT: (UP, DOWN), RIGHT: (UP, DOWN)}


class EpisodeDoneError(RuntimeError):
    """step() was called on a finished episode."""


@dataclass(frozen=True)
class EnvOutcome:
    next_state: int
    reward: float
    done: bool


@dataclass(frozen=True)
class GridEnvState:
    layout: tuple[str, ...]
    agent_position: int
    steps_taken: int
    done: bool


class _GridEnv:
    layout: tuple[str, ...]
    horizon: int
    n_actions = 4

    def __init__(self):
        self.n_rows = len(self.layout)
        self.n_cols = len(self.layout[0])
        self.n_states = self.n_rows * self.n_cols
        self._start = self._find("S")
        self._goal = self._find("G")
        self._rng = np.random.default_rng()
        self.reset()

    def _find(self, mark: str) -> tuple[int, int]:
        for r, row in enumerate(self.layout):
            for c, cell in enumerate(row):
                if cell == mark:
                    return (r, c)
        raise ValueError(f"layout has no {mark!r} cell")

    def _cell_id(self, pos: tuple[int, int]) -> int:
        return pos[0] * self.n_cols + pos[1]

    def reset(self, seed: Optional[int] = None) -> int:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._pos = self._start
        self._steps = 0
        self._done = False
        return self._cell_id(self._pos)

    def state(self) -> GridEnvState:
        return GridEnvState(self.layout, self._cell_id(self._pos), self._steps, self._done)

    def _clamped_move(self, pos: tuple[int, int], direction: int) -> tuple[int, int]:
        dr, dc = _MOVES[direction]
        r = min(max(pos[0] + dr, 0), self.n_rows - 1)
        c = min(max(pos[1] + dc, 0), self.n_cols - 1)
        return (r, c)

    def step(self, action: int, rng=None) -> EnvOutcome:
        if self._done:
            raise EpisodeDoneError("episode already finished; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action must be in [0, {self.n_actions})")
        outcome = self._transition(action, rng if rng is not None else self._rng)
        self._steps += 1
        if self._steps >= self.horizon and not outcome.done:
            outcome = EnvOutcome(outcome.next_state, outcome.reward, True)
        self._done = outcome.done
        return outcome

    def _transition(self, action: int, rng) -> EnvOutcome:
        raise NotImplementedError


class CliffWalking(_GridEnv):
    layout = (
        "FFFFFFFFFFFF",
        "FFFFFFFFFFFF",
        "FFFFFFFFFFFF",
        "SCCCCCCCCCCG",
    )
    horizon = 200

    def _transition(self, action: int, rng) -> EnvOutcome:
        nxt = self._clamped_move(self._pos, action)
        cell = self.layout[nxt[0]][nxt[1]]
        if cell == "C":
            # cliff: big penalty, teleport to start, episode continues
            self._pos = self._start
            return EnvOutcome(self._cell_id(self._pos), -100.0, False)
        self._pos = nxt
        if cell == "G":
            return EnvOutcome(self._cell_id(nxt), 0.0, True)
        return EnvOutcome(self._cell_id(nxt), 0.0, False)


class FrozenLake(_GridEnv):
    layout = (
        "SFFF",
        "FHFH",
        "FFFH",
        "HFFG",
    )
    horizon = 10

    def _transition(self, action: int, rng) -> EnvOutcome:
        k = int(rng.integers(0, 3))
        direction = action if k == 0 else _PERP[action][k - 1]
        nxt = self._clamped_move(self._pos, direction)
        self._pos = nxt
        cell = self.layout[nxt[0]][nxt[1]]
        if cell == "G":
            return EnvOutcome(self._cell_id(nxt), 1.0, True)
        if cell == "H":
            return EnvOutcome(self._cell_id(nxt), 0.0, True)
        return EnvOutcome(self._cell_id(nxt), 0.0, False)


_ENVS = {"cliffwalking": CliffWalking, "frozenlake": FrozenLake}


def make_env(name: str) -> _GridEnv:
    try:
        return _ENVS[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; known: {sorted(_ENVS)}") from None
