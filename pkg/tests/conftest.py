import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ipse._shapes import PIECE_NAMES, ROTATIONS  # noqa: E402
from ipse.rng import SplitMix64  # noqa: E402
from ipse.tetris import BoardState  # noqa: E402

import oracle  # noqa: E402


def oracle_rotation(piece, k):
    """Index in the oracle table of the package's rotation ``k``."""
    name = PIECE_NAMES[piece]
    target = sorted(ROTATIONS[piece][k])
    return [sorted(c) for c in oracle.PIECE_ROTATIONS[name]].index(target)


def random_board(rng, width=10, height=10, max_fill_rows=8, density=None):
    """Random board with no full row; columns may contain holes."""
    rows = [0] * height
    fill = rng.below(max_fill_rows + 1)
    p = density if density is not None else 0.3 + 0.6 * rng.random()
    for r in range(fill):
        row = 0
        for c in range(width):
            if rng.random() < p:
                row |= 1 << c
        if row == (1 << width) - 1:
            row &= ~(1 << rng.below(width))
        rows[r] = row
    return BoardState(tuple(rows), rng.below(7), width, height)


@pytest.fixture
def rng():
    return SplitMix64(12345)
