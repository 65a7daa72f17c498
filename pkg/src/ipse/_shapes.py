"""Tetromino geometry shared by both simulation kernels.

Cells are ``(row, col)`` offsets with row 0 at the bottom of the piece's
bounding box. Distinct rotations are generated by repeated quarter turns and
deduplicated in generation order, so rotation indices are stable.
"""

PIECE_NAMES = ("I", "O", "T", "S", "Z", "L", "J")
N_PIECES = len(PIECE_NAMES)

_BASE = {
    "I": ((0, 0), (0, 1), (0, 2), (0, 3)),
    "O": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "T": ((0, 0), (0, 1), (0, 2), (1, 1)),
    "S": ((0, 0), (0, 1), (1, 1), (1, 2)),
    "Z": ((1, 0), (1, 1), (0, 1), (0, 2)),
    "L": ((0, 0), (0, 1), (0, 2), (1, 2)),
    "J": ((0, 0), (0, 1), (0, 2), (1, 0)),
}


def _normalize(cells):
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple(sorted((r - r0, c - c0) for r, c in cells))


def _rotations(cells):
    out = []
    cur = _normalize(cells)
    for _ in range(4):
        if cur not in out:
            out.append(cur)
        cur = _normalize([(c, -r) for r, c in cur])
    return tuple(out)


ROTATIONS = tuple(_rotations(_BASE[name]) for name in PIECE_NAMES)


def rotation_geometry(piece, rotation):
    """Return ``(width, height, row_masks, bottoms)`` for one rotation.

    ``row_masks[r]`` is the occupancy of piece row ``r`` with the leftmost
    piece column at bit 0; ``bottoms[j]`` is the lowest occupied piece row in
    piece column ``j``.
    """
    cells = ROTATIONS[piece][rotation]
    width = 1 + max(c for _, c in cells)
    height = 1 + max(r for r, _ in cells)
    masks = [0] * height
    bottoms = [height] * width
    for r, c in cells:
        masks[r] |= 1 << c
        bottoms[c] = min(bottoms[c], r)
    return width, height, tuple(masks), tuple(bottoms)


GEOMETRY = tuple(
    tuple(rotation_geometry(p, k) for k in range(len(ROTATIONS[p])))
    for p in range(N_PIECES)
)
