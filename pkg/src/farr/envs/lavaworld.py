"""Lava World: a hidden-goal gridworld whose goal may be placed in lava."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..upomdp import Environment, GridGoal, TabularModel, UpomdpSpec

FLOOR, LAVA, START = ".", "L", "S"

# up, right, down, left
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))
ACTION_NAMES = ("up", "right", "down", "left")

HORIZON = 20
STEP_REWARD = -1.0
LAVA_REWARD = -15.0

DEFAULT_MAP_PATH = Path(__file__).with_name("lavaworld_default.txt")


@dataclass(frozen=True)
class GridMap:
    height: int
    width: int
    cells: tuple  # row-major strings of FLOOR / LAVA / START
    start: tuple

    def kind(self, row, col):
        return self.cells[row][col]

    def is_lava(self, row, col):
        return self.cells[row][col] == LAVA

    def index(self, row, col):
        return row * self.width + col

    def coords(self, index):
        return divmod(index, self.width)

    @property
    def n_cells(self):
        return self.height * self.width

    def goals(self):
        """Every cell except the start, in row-major order."""
        return [
            GridGoal(r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) != self.start
        ]

    def move(self, row, col, action):
        dr, dc = MOVES[action]
        r, c = row + dr, col + dc
        if 0 <= r < self.height and 0 <= c < self.width:
            return r, c
        return row, col

    def to_text(self):
        return "\n".join(self.cells) + "\n"


def load_map(text):
    """Parse an ASCII map of ``S``, ``.`` and ``L`` characters."""
    rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty map")
    width = len(rows[0])
    starts = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"map row {r} has width {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch not in (FLOOR, LAVA, START):
                raise ValueError(f"bad map character {ch!r} at ({r}, {c})")
            if ch == START:
                starts.append((r, c))
    if len(starts) != 1:
        raise ValueError(f"map needs exactly one start cell, found {len(starts)}")
    if len(rows) * width < 2:
        raise ValueError("map has no legal goal cells")
    return GridMap(len(rows), width, tuple(rows), starts[0])


def default_map():
    return load_map(DEFAULT_MAP_PATH.read_text())


def lava_step(grid, state, action, theta):
    """One transition from ``state = (row, col, t)`` toward hidden goal ``theta``.

    Entering lava ends the episode with -15 in place of the step cost, even
    when the goal is there. Entering the goal ends it after the usual -1.
    The step that exhausts the horizon is terminal.
    """
    row, col, t = state
    r, c = grid.move(row, col, action)
    t += 1
    if grid.is_lava(r, c):
        return (r, c, t), LAVA_REWARD, True
    if (r, c) == tuple(theta):
        return (r, c, t), STEP_REWARD, True
    return (r, c, t), STEP_REWARD, t >= HORIZON


class LavaWorldEnv(Environment):
    """Observation is the agent's cell index; the goal is never observed."""

    deterministic = True

    def __init__(self, grid=None):
        self.grid = default_map() if grid is None else grid
        self.spec = UpomdpSpec(
            action_count=len(MOVES),
            observation_count=self.grid.n_cells,
            horizon=HORIZON,
            discount=1.0,
            theta_space=tuple(self.grid.goals()),
            reward_range=(LAVA_REWARD, STEP_REWARD),
        )
        self._state = None
        self._theta = None

    @property
    def max_return(self):
        return STEP_REWARD

    def validate_theta(self, theta):
        theta = GridGoal(*theta)
        if theta not in self.spec.theta_space:
            raise ValueError(f"illegal goal {tuple(theta)} for a {self.grid.height}x{self.grid.width} map")
        return theta

    def reset(self, theta, rng=None):
        self._theta = self.validate_theta(theta)
        self._state = (*self.grid.start, 0)
        return self.grid.index(*self.grid.start)

    def step(self, action):
        if self._state is None:
            raise RuntimeError("step() called before reset() or after episode end")
        self._state, reward, done = lava_step(self.grid, self._state, action, self._theta)
        obs = self.grid.index(self._state[0], self._state[1])
        if done:
            self._state = None
        return obs, reward, done

    def model(self, theta):
        theta = self.validate_theta(theta)
        g = self.grid
        n, na = g.n_cells, len(MOVES)
        P = np.zeros((n, na, n))
        R = np.zeros((n, na))
        for s in range(n):
            row, col = g.coords(s)
            for a in range(na):
                r, c = g.move(row, col, a)
                if g.is_lava(r, c):
                    R[s, a] = LAVA_REWARD
                elif (r, c) == tuple(theta):
                    R[s, a] = STEP_REWARD
                else:
                    R[s, a] = STEP_REWARD
                    P[s, a, g.index(r, c)] = 1.0
        return TabularModel(P, R, g.index(*g.start))

    def shortest_paths(self):
        """BFS step counts from the start over non-lava cells (``inf`` if unreachable)."""
        g = self.grid
        dist = np.full((g.height, g.width), np.inf)
        dist[g.start] = 0
        frontier = [g.start]
        while frontier:
            nxt = []
            for row, col in frontier:
                for a in range(len(MOVES)):
                    r, c = g.move(row, col, a)
                    if not g.is_lava(r, c) and dist[r, c] == np.inf:
                        dist[r, c] = dist[row, col] + 1
                        nxt.append((r, c))
            frontier = nxt
        return dist

    def render(self, path_cells=()):
        rows = [list(row) for row in self.grid.cells]
        for r, c in path_cells:
            if rows[r][c] == FLOOR:
                rows[r][c] = "*"
        return "\n".join("".join(row) for row in rows)
