"""Pure-Python simulation kernel.

Reference semantics for the compiled ``_kernel`` extension, and the fallback
when the extension is not built. Every function here has a twin in
``_kernel.pyx`` that must return identical values and consume the random
stream identically.

Boards are sequences of row bitmasks, row 0 at the bottom, column ``c`` at
bit ``c``.
"""

from ._shapes import GEOMETRY, N_PIECES
from .rng import MASK64, GOLDEN, mix64, derive

N_FEATURES = 8


def _heights(rows, width, height):
    h = [0] * width
    for r in range(height):
        row = rows[r]
        if row:
            for c in range(width):
                if row >> c & 1:
                    h[c] = r + 1
    return h


def _landing(h, geom, col):
    pw, _, _, bottoms = geom
    land = 0
    for j in range(pw):
        y = h[col + j] - bottoms[j]
        if y > land:
            land = y
    return land


def legal_placements(rows, width, height, piece):
    h = _heights(rows, width, height)
    out = []
    for k, geom in enumerate(GEOMETRY[piece]):
        pw, ph = geom[0], geom[1]
        for col in range(width - pw + 1):
            if _landing(h, geom, col) + ph <= height:
                out.append((k, col))
    return out


def _drop(rows, h, height, full, geom, col):
    """Place a piece; return (rows, lines, eroded_cells, landing) or None."""
    pw, ph, masks, _ = geom
    land = _landing(h, geom, col)
    if land + ph > height:
        return None
    new = list(rows)
    lines = 0
    cells = 0
    for r in range(ph):
        m = masks[r] << col
        new[land + r] |= m
        if new[land + r] == full:
            lines += 1
            cells += bin(m).count("1")
    if lines:
        kept = [row for row in new if row != full]
        new = kept + [0] * (height - len(kept))
    return new, lines, cells, land


def place(rows, width, height, piece, rotation, column):
    """Apply one placement. Returns ``None`` if the placement is illegal."""
    if not 0 <= piece < N_PIECES or not 0 <= rotation < len(GEOMETRY[piece]):
        return None
    geom = GEOMETRY[piece][rotation]
    if column < 0 or column + geom[0] > width:
        return None
    h = _heights(rows, width, height)
    res = _drop(rows, h, height, (1 << width) - 1, geom, column)
    if res is None:
        return None
    new, lines, cells, land = res
    return tuple(new), lines, cells, land


def board_features(rows, width, height):
    """(row_trans, col_trans, holes, wells, hole_depth, rows_with_holes)."""
    full = (1 << width) - 1
    walls = 1 | (1 << (width + 1))
    top = 0
    for r in range(height - 1, -1, -1):
        if rows[r]:
            top = r + 1
            break
    row_trans = 2 * (height - top)
    col_trans = 0
    prev = full
    for r in range(top):
        row = rows[r]
        ext = (row << 1) | walls
        row_trans += bin((ext ^ (ext >> 1)) & ((1 << (width + 1)) - 1)).count("1")
        col_trans += bin(row ^ prev).count("1")
        prev = row
    col_trans += bin(prev).count("1")

    holes = wells = hole_depth = rows_with_holes = 0
    above = [0] * width
    run = [0] * width
    for r in range(top - 1, -1, -1):
        row = rows[r]
        ext = (row << 1) | walls
        row_has_hole = False
        for c in range(width):
            if row >> c & 1:
                above[c] += 1
                run[c] = 0
            elif above[c]:
                holes += 1
                hole_depth += above[c]
                row_has_hole = True
                run[c] = 0
            elif ext >> c & 1 and ext >> (c + 2) & 1:
                run[c] += 1
                wells += run[c]
            else:
                run[c] = 0
        if row_has_hole:
            rows_with_holes += 1
    return row_trans, col_trans, holes, wells, hole_depth, rows_with_holes


def _candidates(rows, width, height, piece):
    """Legal placements with (action, features, reward, next_rows)."""
    h = _heights(rows, width, height)
    full = (1 << width) - 1
    out = []
    for k, geom in enumerate(GEOMETRY[piece]):
        pw, ph = geom[0], geom[1]
        for col in range(width - pw + 1):
            res = _drop(rows, h, height, full, geom, col)
            if res is None:
                continue
            new, lines, cells, land = res
            bf = board_features(new, width, height)
            feats = (land + (ph - 1) / 2.0, float(lines * cells)) + tuple(float(v) for v in bf)
            out.append(((k, col), feats, lines, new))
    return out


def enumerate_actions(rows, width, height, piece):
    """Return ``(actions, features, rewards)`` over all legal placements."""
    cands = _candidates(rows, width, height, piece)
    return [c[0] for c in cands], [c[1] for c in cands], [c[2] for c in cands]


def _choose(cands, weights, prefer_reward, state):
    """Greedy linear choice with uniform tie-break; returns (index, state)."""
    pool = range(len(cands))
    if prefer_reward:
        best_r = max(c[2] for c in cands)
        if best_r > 0:
            pool = [i for i in pool if cands[i][2] == best_r]
    best = None
    ties = []
    for i in pool:
        f = cands[i][1]
        s = 0.0
        for j in range(N_FEATURES):
            s += weights[j] * f[j]
        if best is None or s > best:
            best = s
            ties = [i]
        elif s == best:
            ties.append(i)
    if len(ties) == 1:
        return ties[0], state
    state = (state + GOLDEN) & MASK64
    return ties[mix64(state) % len(ties)], state


def _below(state, n):
    state = (state + GOLDEN) & MASK64
    return mix64(state) % n, state


def rollout_values(rows, width, height, piece, indices, weights, prefer_reward,
                   horizon, n_rollouts, gamma, seed):
    """Mean discounted T-step return of each root action in ``indices``.

    Action ``i`` (canonical legal-placement index) draws from the substream
    ``derive(seed, i)``. Returns ``(values, generative_calls)``.
    """
    weights = [float(w) for w in weights]
    root = _candidates(rows, width, height, piece)
    values = []
    calls = 0
    for idx in indices:
        state = derive(seed, idx)
        _, _, r0, after0 = root[idx]
        total = 0.0
        for _ in range(n_rollouts):
            calls += 1
            p, state = _below(state, N_PIECES)
            board = after0
            ret = float(r0)
            disc = 1.0
            for _ in range(1, horizon):
                cands = _candidates(board, width, height, p)
                if not cands:
                    break
                i, state = _choose(cands, weights, prefer_reward, state)
                _, _, r, board = cands[i]
                calls += 1
                p, state = _below(state, N_PIECES)
                disc *= gamma
                ret += disc * r
            total += ret
        values.append(total / n_rollouts)
    return values, calls


def play_games(width, height, weights, prefer_reward, games, step_cap, seed):
    """Play greedy games from empty boards; game ``g`` uses ``derive(seed, g)``.

    Returns ``(scores, capped, placements)`` lists.
    """
    weights = [float(w) for w in weights]
    scores, capped, steps = [], [], []
    for g in range(games):
        state = derive(seed, g)
        p, state = _below(state, N_PIECES)
        board = [0] * height
        score = 0
        n = 0
        hit = False
        while True:
            cands = _candidates(board, width, height, p)
            if not cands:
                break
            i, state = _choose(cands, weights, prefer_reward, state)
            _, _, r, board = cands[i]
            score += r
            n += 1
            if n >= step_cap:
                hit = True
                break
            p, state = _below(state, N_PIECES)
        scores.append(score)
        capped.append(hit)
        steps.append(n)
    return scores, capped, steps
