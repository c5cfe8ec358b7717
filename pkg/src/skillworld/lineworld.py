"""Three-position line world: the smallest end-to-end planning testbed.

Positions sit on a uniform grid in [0, 1]; two options shift one cell left or
right, each taking one primitive step at a small action cost. Everything is
deterministic, so learned models and plans can be checked by inspection.
"""

from dataclasses import dataclass

import numpy as np

from .datasets import TransitionSample
from .mdp import UnavailableOptionError


@dataclass(frozen=True)
class LineState:
    x: float


class LineWorldEnv:
    """Mirrors the Pinball env surface: reset / initiation_set / execute_option."""

    def __init__(self, n_cells: int = 3, gamma: float = 0.99, step_cost: float = 0.1):
        if n_cells < 2:
            raise ValueError("need at least two cells")
        self.n_cells = n_cells
        self.n_options = 2          # 0 = left, 1 = right
        self.obs_dim = 1
        self.gamma = gamma
        self.step_cost = step_cost
        self.cell = 1.0 / (n_cells - 1)

        class _Cfg:
            episode_option_cap = 20
            obs_mode = "state"
        self.config = _Cfg()

    def reset(self, rng: np.random.Generator) -> LineState:
        return LineState(x=float(rng.integers(self.n_cells)) * self.cell)

    def sample_state_near(self, center, radius: float, rng: np.random.Generator):
        """The grid state nearest to center if it lies within radius, else None."""
        x = float(np.clip(round(float(np.asarray(center).ravel()[0]) / self.cell), 0,
                          self.n_cells - 1)) * self.cell
        if abs(x - float(np.asarray(center).ravel()[0])) <= radius:
            return LineState(x=x)
        return None

    def observe(self, state: LineState) -> np.ndarray:
        return np.array([state.x])

    def ground_position(self, state: LineState) -> np.ndarray:
        return np.array([state.x])

    def initiation_set(self, state: LineState) -> np.ndarray:
        return np.array([state.x > self.cell / 2, state.x < 1.0 - self.cell / 2])

    def execute_option(self, state: LineState, option_id: int,
                       rng: np.random.Generator):
        initiation = self.initiation_set(state)
        if not initiation[option_id]:
            raise UnavailableOptionError(f"option {option_id} unavailable at x={state.x}")
        dx = -self.cell if option_id == 0 else self.cell
        end = LineState(x=float(np.clip(state.x + dx, 0.0, 1.0)))
        sample = TransitionSample(s=self.observe(state), o=option_id,
                                  r_gamma=-self.step_cost, s_next=self.observe(end),
                                  tau=1, initiation=initiation)
        return sample, end
