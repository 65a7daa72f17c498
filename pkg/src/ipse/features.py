"""The eight BCTS state-action features.

Conventions (rows counted from 0 at the bottom):

* landing height is the vertical midpoint of the placed piece before clearing;
* eroded piece cells = lines cleared x piece cells inside the cleared lines;
* row transitions count side walls as occupied;
* column transitions count the floor as occupied and the space above the top
  row as empty;
* a hole is an empty cell with an occupied cell somewhere above it; hole depth
  adds, per hole, the occupied cells above it in its column;
* wells are summed cumulatively (1 + 2 + ... + depth) over vertical runs of
  uncovered empty cells whose left and right neighbours are occupied.

All board features are computed on the board after line clears.
"""

from typing import NamedTuple

import numpy as np

from . import kernel

FEATURE_NAMES = (
    "landing_height",
    "eroded_piece_cells",
    "row_transitions",
    "column_transitions",
    "holes",
    "board_wells",
    "hole_depth",
    "rows_with_holes",
)
N_FEATURES = len(FEATURE_NAMES)

# Thiery & Scherrer's BCTS controller.
BCTS_WEIGHTS = np.array([-12.63, 6.60, -9.22, -19.77, -13.08, -10.49, -1.61, -24.04])
BCTS_DIRECTIONS = np.sign(BCTS_WEIGHTS).astype(int)


class FeatureVector(NamedTuple):
    landing_height: float
    eroded_piece_cells: float
    row_transitions: float
    column_transitions: float
    holes: float
    board_wells: float
    hole_depth: float
    rows_with_holes: float

    def as_array(self):
        return np.array(self, dtype=float)


class InconsistentTransition(ValueError):
    pass


def board_features(state):
    """The six pure-board features, in canonical order after the first two."""
    return kernel.board_features(state.rows, state.width, state.height)


def _check_transition(pre, event, post):
    if (pre.width, pre.height) != (post.width, post.height):
        raise InconsistentTransition("board dimensions differ")
    if len(event.cells) != 4 or len(set(event.cells)) != 4:
        raise InconsistentTransition("a placement occupies four distinct cells")
    for r, c in event.cells:
        if not (0 <= r < pre.height and 0 <= c < pre.width):
            raise InconsistentTransition(f"cell {(r, c)} lies outside the board")
        if pre.occupied(r, c):
            raise InconsistentTransition(f"cell {(r, c)} was already occupied")
    expected = pre.cell_count() + 4 - pre.width * event.lines_cleared
    if post.cell_count() != expected:
        raise InconsistentTransition("cell count does not match the placement event")


def compute_features(pre_state, event, post_state):
    _check_transition(pre_state, event, post_state)
    return FeatureVector(
        event.landing_height,
        float(event.eroded_piece_cells),
        *(float(v) for v in board_features(post_state)),
    )


def features_for(state, action):
    """Features of taking ``action`` in ``state`` (no randomness consumed)."""
    from .tetris import BoardState, apply_placement

    rows, _, event = apply_placement(state, action)
    post = BoardState(rows, state.piece, state.width, state.height)
    return compute_features(state, event, post)
