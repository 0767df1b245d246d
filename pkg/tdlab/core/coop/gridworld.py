"""
Deterministic gridworld
Desk-scale control environment: moves clipped at walls, a fixed reward per
move and absorbing terminal cells.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from tdlab.core.chain.model import MarkovDecisionProcess
from tdlab.core.exceptions import ContractViolation

Cell = Tuple[int, int]


class Move(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


DELTAS = {
    Move.UP: (-1, 0),
    Move.DOWN: (1, 0),
    Move.LEFT: (0, -1),
    Move.RIGHT: (0, 1),
}

ARROWS = {Move.UP: "^", Move.DOWN: "v", Move.LEFT: "<", Move.RIGHT: ">"}


@dataclass(frozen=True)
class GridWorld:
    """
    height x width cells indexed row-major, state = row * width + col.
    Terminal cells absorb with reward 0.
    """

    width: int
    height: int
    terminals: Tuple[Cell, ...] = ((-1, -1),)
    step_reward: float = -1.0
    discount: float = 0.9

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ContractViolation(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if self.width * self.height < 2:
            raise ContractViolation("grid needs a non-terminal cell")
        if not 0.0 < self.discount <= 1.0:
            raise ContractViolation(f"discount must lie in (0, 1], got {self.discount!r}")
        cells = []
        for row, col in self.terminals:
            if not (-self.height <= row < self.height and -self.width <= col < self.width):
                raise ContractViolation(
                    f"terminal {(row, col)} outside the {self.height}x{self.width} grid"
                )
            # negative coordinates count from the far edge
            cells.append((row % self.height, col % self.width))
        if not cells:
            raise ContractViolation("gridworld needs at least one terminal cell")
        object.__setattr__(self, "terminals", tuple(sorted(set(cells))))
        if len(self.terminals) == self.n_states:
            raise ContractViolation("every cell is terminal")
        unreachable = np.flatnonzero(~np.isfinite(self.shortest_distances()))
        if unreachable.size:
            raise ContractViolation(f"no terminal reachable from cell {self.cell(int(unreachable[0]))}")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    @property
    def n_actions(self) -> int:
        return len(Move)

    def state(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def cell(self, state: int) -> Cell:
        return divmod(state, self.width)

    @property
    def terminal_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[[self.state(c) for c in self.terminals]] = True
        return mask

    def is_terminal(self, state: int) -> bool:
        return self.cell(state) in self.terminals

    def move(self, state: int, action: int) -> Tuple[int, float]:
        """Successor and reward; terminal cells stay put with reward 0"""
        if self.is_terminal(state):
            return state, 0.0
        row, col = self.cell(state)
        d_row, d_col = DELTAS[Move(action)]
        row = min(max(row + d_row, 0), self.height - 1)
        col = min(max(col + d_col, 0), self.width - 1)
        return self.state((row, col)), self.step_reward

    def to_mdp(self) -> MarkovDecisionProcess:
        n, m = self.n_states, self.n_actions
        transition = np.zeros((n, m, n))
        reward = np.zeros((n, m, n))
        for s in range(n):
            for a in range(m):
                successor, g = self.move(s, a)
                transition[s, a, successor] = 1.0
                reward[s, a, successor] = g
        return MarkovDecisionProcess(transition, reward, self.discount, self.terminal_mask)

    def shortest_distances(self) -> np.ndarray:
        """Fewest moves from each cell to any terminal (inf if none is reachable)"""
        rows, cols = [], []
        for s in range(self.n_states):
            if self.is_terminal(s):
                continue
            for a in range(self.n_actions):
                successor, _ = self.move(s, a)
                if successor != s:
                    rows.append(s)
                    cols.append(successor)
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_states, self.n_states))
        distances = shortest_path(graph, directed=True, unweighted=True)
        return distances[:, self.terminal_mask].min(axis=1)

    def render_policy(self, policy: np.ndarray) -> str:
        """Arrow grid, '*' on terminal cells"""
        lines: List[str] = []
        for row in range(self.height):
            symbols = []
            for col in range(self.width):
                s = self.state((row, col))
                symbols.append("*" if self.is_terminal(s) else ARROWS[Move(int(policy[s]))])
            lines.append(" ".join(symbols))
        return "\n".join(lines) + "\n"
