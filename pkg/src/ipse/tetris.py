"""Tetris as an MDP: hard-drop placements, i.i.d. uniform pieces.

A state is the board plus the identity of the piece to be placed. Actions are
``(rotation, column)`` pairs whose resting position lies entirely inside the
board; the episode ends in a state that admits no such placement. The reward
of a placement is the number of lines it clears.
"""

from dataclasses import dataclass
from typing import NamedTuple

from . import kernel
from ._shapes import GEOMETRY, N_PIECES, PIECE_NAMES, ROTATIONS

WIDTH = 10
HEIGHT = 10


class IllegalAction(ValueError):
    pass


@dataclass(frozen=True)
class BoardState:
    rows: tuple
    piece: int
    width: int = WIDTH
    height: int = HEIGHT

    def __post_init__(self):
        if len(self.rows) != self.height:
            raise ValueError(f"expected {self.height} rows, got {len(self.rows)}")
        if not 0 <= self.piece < N_PIECES:
            raise ValueError(f"unknown piece index {self.piece}")
        full = (1 << self.width) - 1
        for r, row in enumerate(self.rows):
            if row < 0 or row > full:
                raise ValueError(f"row {r} has cells outside the board")
            if row == full:
                raise ValueError(f"row {r} is full")

    @property
    def piece_name(self):
        return PIECE_NAMES[self.piece]

    def occupied(self, row, col):
        return bool(self.rows[row] >> col & 1)

    def cell_count(self):
        return sum(bin(r).count("1") for r in self.rows)

    def with_piece(self, piece):
        return BoardState(self.rows, piece, self.width, self.height)


class ActionPlacement(NamedTuple):
    rotation: int
    column: int


@dataclass(frozen=True)
class PlacementEvent:
    cells: tuple  # (row, col) of the placed piece before clearing
    lines_cleared: int
    piece_cells_in_cleared_lines: int

    @property
    def landing_height(self):
        rows = [r for r, _ in self.cells]
        return (min(rows) + max(rows)) / 2.0

    @property
    def eroded_piece_cells(self):
        return self.lines_cleared * self.piece_cells_in_cleared_lines


class CallMeter:
    """Counts calls to the generative model."""

    __slots__ = ("calls",)

    def __init__(self, calls=0):
        self.calls = calls

    def charge(self, n=1):
        if n < 0:
            raise ValueError("meter cannot decrease")
        self.calls += n

    def __repr__(self):
        return f"CallMeter(calls={self.calls})"


def piece_index(name):
    try:
        return PIECE_NAMES.index(name.upper())
    except ValueError:
        raise ValueError(f"unknown piece {name!r}; expected one of {''.join(PIECE_NAMES)}") from None


def empty_rows(height=HEIGHT):
    return (0,) * height


def initial_state(rng, width=WIDTH, height=HEIGHT):
    return BoardState(empty_rows(height), rng.below(N_PIECES), width, height)


def legal_actions(state):
    """Placements in canonical order (rotation-major, then column)."""
    return [
        ActionPlacement(k, c)
        for k, c in kernel.legal_placements(state.rows, state.width, state.height, state.piece)
    ]


def is_terminal(state):
    return not kernel.legal_placements(state.rows, state.width, state.height, state.piece)


def placement_cells(piece, rotation, column, landing_row):
    return tuple(
        sorted((landing_row + r, column + c) for r, c in ROTATIONS[piece][rotation])
    )


def apply_placement(state, action):
    """Deterministic part of a transition: ``(rows, reward, event)``."""
    rotation, column = action
    res = kernel.place(state.rows, state.width, state.height, state.piece, rotation, column)
    if res is None:
        raise IllegalAction(f"{tuple(action)} is not a legal placement for {state.piece_name}")
    rows, lines, cells, land = res
    event = PlacementEvent(placement_cells(state.piece, rotation, column, land), lines, cells)
    return tuple(rows), lines, event


def step(state, action, rng, meter=None):
    """One call to the generative model: place, clear, draw the next piece."""
    rows, reward, event = apply_placement(state, action)
    if meter is not None:
        meter.charge()
    return BoardState(rows, rng.below(N_PIECES), state.width, state.height), reward, event


def n_rotations(piece):
    return len(GEOMETRY[piece])


# -- debug board text format ------------------------------------------------

def format_board(state, with_piece=True):
    lines = []
    for r in range(state.height - 1, -1, -1):
        lines.append("".join("#" if state.rows[r] >> c & 1 else "." for c in range(state.width)))
    if with_piece:
        lines.append(f"piece: {state.piece_name}")
    return "\n".join(lines) + "\n"


def parse_board(text, piece=None):
    """Parse the ``.``/``#`` board format (top row first).

    An optional trailing ``piece: X`` line sets the piece; ``piece`` overrides
    it. Without either, the piece defaults to ``I``.
    """
    grid = []
    file_piece = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.lower().startswith("piece:"):
            file_piece = line.split(":", 1)[1].strip()
            continue
        if set(line) - {".", "#"}:
            raise ValueError(f"unexpected characters in board line {line!r}")
        grid.append(line)
    if not grid:
        raise ValueError("empty board")
    width = len(grid[0])
    if any(len(g) != width for g in grid):
        raise ValueError("ragged board lines")
    rows = tuple(
        sum(1 << c for c, ch in enumerate(line) if ch == "#") for line in reversed(grid)
    )
    name = piece if piece is not None else (file_piece or "I")
    p = name if isinstance(name, int) else piece_index(name)
    return BoardState(rows, p, width, len(grid))


def read_board(path, piece=None):
    with open(path) as fh:
        return parse_board(fh.read(), piece)


class TetrisEnv:
    """Adapter exposing Tetris through the generic environment protocol used
    by the rollout, LFD and learner modules."""

    n_features = 8

    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width = width
        self.height = height

    def initial_state(self, rng):
        return initial_state(rng, self.width, self.height)

    def actions(self, state):
        return legal_actions(state)

    def action_features(self, state):
        """``(actions, features, rewards)`` for all legal actions."""
        import numpy as np

        acts, feats, rewards = kernel.enumerate_actions(
            state.rows, state.width, state.height, state.piece
        )
        return (
            [ActionPlacement(*a) for a in acts],
            np.asarray(feats, dtype=float).reshape(len(acts), self.n_features),
            np.asarray(rewards, dtype=float),
        )

    def step(self, state, action, rng):
        nxt, reward, _ = step(state, action, rng)
        return nxt, reward

    def rollout_values(self, state, indices, weights, prefer_reward, cfg, seed):
        """Compiled rollouts of the linear greedy policy; see ``rollout``."""
        return kernel.rollout_values(
            state.rows, state.width, state.height, state.piece, list(indices),
            [float(w) for w in weights], bool(prefer_reward), cfg.T, cfg.M,
            float(cfg.gamma), seed,
        )
