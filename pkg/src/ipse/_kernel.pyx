# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel; mirror of ``_kernel_py`` (same values, same
random-number consumption)."""

from libc.stdint cimport uint32_t, uint64_t
from libc.string cimport memcpy

from ._shapes import GEOMETRY, N_PIECES

cdef extern from *:
    int __builtin_popcount(unsigned int) nogil

cdef enum:
    MAXH = 32
    MAXA = 64
    NF = 8

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL

cdef int G_NROT[7]
cdef int G_W[7][4]
cdef int G_H[7][4]
cdef uint32_t G_MASK[7][4][4]
cdef int G_BOT[7][4][4]


def _init_tables():
    cdef int p, k, r, j
    for p in range(N_PIECES):
        G_NROT[p] = len(GEOMETRY[p])
        for k in range(G_NROT[p]):
            w, h, masks, bottoms = GEOMETRY[p][k]
            G_W[p][k] = w
            G_H[p][k] = h
            for r in range(h):
                G_MASK[p][k][r] = masks[r]
            for j in range(w):
                G_BOT[p][k][j] = bottoms[j]

_init_tables()


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t seed, uint64_t index) nogil:
    return mix64(seed + (index + 1) * GOLDEN)


cdef inline uint64_t below(uint64_t* state, uint64_t n) nogil:
    state[0] = state[0] + GOLDEN
    return mix64(state[0]) % n


cdef struct Cand:
    int rot
    int col
    int reward
    double feat[NF]
    uint32_t rows[MAXH]


cdef inline void heights(const uint32_t* rows, int width, int height, int* h) nogil:
    cdef int r, c
    cdef uint32_t row
    for c in range(width):
        h[c] = 0
    for r in range(height):
        row = rows[r]
        if row:
            for c in range(width):
                if (row >> c) & 1:
                    h[c] = r + 1


cdef inline int landing(const int* h, int p, int k, int col) nogil:
    cdef int j, y, land = 0
    for j in range(G_W[p][k]):
        y = h[col + j] - G_BOT[p][k][j]
        if y > land:
            land = y
    return land


cdef int drop(const uint32_t* rows, const int* h, int width, int height, int p, int k,
              int col, uint32_t* out, int* lines_out, int* cells_out) nogil:
    """Write the post-clear board to ``out``; return landing row or -1."""
    cdef int ph = G_H[p][k]
    cdef int land = landing(h, p, k, col)
    cdef uint32_t full = (1u << width) - 1u
    cdef uint32_t m
    cdef int r, lines = 0, cells = 0, w
    if land + ph > height:
        return -1
    memcpy(out, rows, height * sizeof(uint32_t))
    for r in range(ph):
        m = G_MASK[p][k][r] << col
        out[land + r] |= m
        if out[land + r] == full:
            lines += 1
            cells += __builtin_popcount(m)
    if lines:
        w = 0
        for r in range(height):
            if out[r] != full:
                out[w] = out[r]
                w += 1
        while w < height:
            out[w] = 0
            w += 1
    lines_out[0] = lines
    cells_out[0] = cells
    return land


cdef void bfeatures(const uint32_t* rows, int width, int height, double* f) nogil:
    """Six board features into f[0..5] (row/col transitions, holes, wells,
    hole depth, rows with holes)."""
    cdef uint32_t full = (1u << width) - 1u
    cdef uint32_t walls = 1u | (1u << (width + 1))
    cdef uint32_t span = (1u << (width + 1)) - 1u
    cdef uint32_t row, ext, prev
    cdef int top = 0, r, c
    cdef int row_trans, col_trans = 0
    cdef int holes = 0, wells = 0, depth = 0, rwh = 0, has
    cdef int above[32]
    cdef int run[32]
    r = height - 1
    while r >= 0:
        if rows[r]:
            top = r + 1
            break
        r -= 1
    row_trans = 2 * (height - top)
    prev = full
    for r in range(top):
        row = rows[r]
        ext = (row << 1) | walls
        row_trans += __builtin_popcount((ext ^ (ext >> 1)) & span)
        col_trans += __builtin_popcount(row ^ prev)
        prev = row
    col_trans += __builtin_popcount(prev)
    for c in range(width):
        above[c] = 0
        run[c] = 0
    r = top - 1
    while r >= 0:
        row = rows[r]
        ext = (row << 1) | walls
        has = 0
        for c in range(width):
            if (row >> c) & 1:
                above[c] += 1
                run[c] = 0
            elif above[c]:
                holes += 1
                depth += above[c]
                has = 1
                run[c] = 0
            elif ((ext >> c) & 1) and ((ext >> (c + 2)) & 1):
                run[c] += 1
                wells += run[c]
            else:
                run[c] = 0
        rwh += has
        r -= 1
    f[0] = row_trans
    f[1] = col_trans
    f[2] = holes
    f[3] = wells
    f[4] = depth
    f[5] = rwh


cdef int candidates(const uint32_t* rows, int width, int height, int p, Cand* out) nogil:
    cdef int h[32]
    cdef int k, col, land, lines, cells, n = 0
    heights(rows, width, height, h)
    for k in range(G_NROT[p]):
        for col in range(width - G_W[p][k] + 1):
            land = drop(rows, h, width, height, p, k, col, out[n].rows, &lines, &cells)
            if land < 0:
                continue
            out[n].rot = k
            out[n].col = col
            out[n].reward = lines
            out[n].feat[0] = land + (G_H[p][k] - 1) / 2.0
            out[n].feat[1] = lines * cells
            bfeatures(out[n].rows, width, height, &out[n].feat[2])
            n += 1
    return n


cdef int choose(Cand* cands, int n, const double* w, int prefer_reward, uint64_t* state) nogil:
    cdef int i, j, best_r = 0, nties = 0, use_reward = 0
    cdef double s, best = 0.0
    cdef int ties[MAXA]
    if prefer_reward:
        for i in range(n):
            if cands[i].reward > best_r:
                best_r = cands[i].reward
        use_reward = best_r > 0
    for i in range(n):
        if use_reward and cands[i].reward != best_r:
            continue
        s = 0.0
        for j in range(NF):
            s += w[j] * cands[i].feat[j]
        if nties == 0 or s > best:
            best = s
            ties[0] = i
            nties = 1
        elif s == best:
            ties[nties] = i
            nties += 1
    if nties == 1:
        return ties[0]
    return ties[below(state, nties)]


cdef int load_rows(rows, int height, uint32_t* out) except -1:
    cdef int r
    if len(rows) != height:
        raise ValueError("board has %d rows, expected %d" % (len(rows), height))
    for r in range(height):
        out[r] = rows[r]
    return 0


cdef int check_dims(int width, int height) except -1:
    if not (4 <= width <= 16 and 4 <= height <= MAXH):
        raise ValueError("board dimensions out of range")
    return 0


cdef int check_piece(int piece) except -1:
    if not (0 <= piece < N_PIECES):
        raise ValueError("unknown piece index %d" % piece)
    return 0


def legal_placements(rows, int width, int height, int piece):
    cdef uint32_t b[MAXH]
    cdef int h[32]
    cdef int k, col
    check_dims(width, height)
    check_piece(piece)
    load_rows(rows, height, b)
    heights(b, width, height, h)
    out = []
    for k in range(G_NROT[piece]):
        for col in range(width - G_W[piece][k] + 1):
            if landing(h, piece, k, col) + G_H[piece][k] <= height:
                out.append((k, col))
    return out


def place(rows, int width, int height, int piece, int rotation, int column):
    cdef uint32_t b[MAXH]
    cdef uint32_t o[MAXH]
    cdef int h[32]
    cdef int land, lines, cells
    check_dims(width, height)
    if not (0 <= piece < N_PIECES) or not (0 <= rotation < G_NROT[piece]):
        return None
    if column < 0 or column + G_W[piece][rotation] > width:
        return None
    load_rows(rows, height, b)
    heights(b, width, height, h)
    land = drop(b, h, width, height, piece, rotation, column, o, &lines, &cells)
    if land < 0:
        return None
    return tuple([o[r] for r in range(height)]), lines, cells, land


def board_features(rows, int width, int height):
    cdef uint32_t b[MAXH]
    cdef double f[6]
    check_dims(width, height)
    load_rows(rows, height, b)
    bfeatures(b, width, height, f)
    return tuple([int(f[i]) for i in range(6)])


def enumerate_actions(rows, int width, int height, int piece):
    cdef uint32_t b[MAXH]
    cdef Cand cands[MAXA]
    cdef int n, i, j
    check_dims(width, height)
    check_piece(piece)
    load_rows(rows, height, b)
    n = candidates(b, width, height, piece, cands)
    actions = [(cands[i].rot, cands[i].col) for i in range(n)]
    feats = [tuple([cands[i].feat[j] for j in range(NF)]) for i in range(n)]
    rewards = [cands[i].reward for i in range(n)]
    return actions, feats, rewards


def rollout_values(rows, int width, int height, int piece, indices, weights,
                   bint prefer_reward, int horizon, int n_rollouts, double gamma,
                   uint64_t seed):
    cdef uint32_t b[MAXH]
    cdef uint32_t board[MAXH]
    cdef Cand root[MAXA]
    cdef Cand cands[MAXA]
    cdef double w[NF]
    cdef int nroot, n, idx, m, t, i, p, j
    cdef uint64_t state
    cdef long calls = 0
    cdef double total, ret, disc
    check_dims(width, height)
    check_piece(piece)
    load_rows(rows, height, b)
    for j in range(NF):
        w[j] = weights[j]
    nroot = candidates(b, width, height, piece, root)
    values = []
    for idx in indices:
        if not (0 <= idx < nroot):
            raise IndexError("action index out of range")
        state = derive(seed, <uint64_t>idx)
        total = 0.0
        with nogil:
            for m in range(n_rollouts):
                calls += 1
                p = <int>below(&state, 7)
                memcpy(board, root[idx].rows, height * sizeof(uint32_t))
                ret = root[idx].reward
                disc = 1.0
                for t in range(1, horizon):
                    n = candidates(board, width, height, p, cands)
                    if n == 0:
                        break
                    i = choose(cands, n, w, prefer_reward, &state)
                    memcpy(board, cands[i].rows, height * sizeof(uint32_t))
                    calls += 1
                    p = <int>below(&state, 7)
                    disc *= gamma
                    ret += disc * cands[i].reward
                total += ret
        values.append(total / n_rollouts)
    return values, calls


def play_games(int width, int height, weights, bint prefer_reward, int games,
               long step_cap, uint64_t seed):
    cdef uint32_t board[MAXH]
    cdef Cand cands[MAXA]
    cdef double w[NF]
    cdef int g, n, i, p, j
    cdef uint64_t state
    cdef long score, steps
    cdef bint hit
    check_dims(width, height)
    for j in range(NF):
        w[j] = weights[j]
    scores, capped, placements = [], [], []
    for g in range(games):
        state = derive(seed, <uint64_t>g)
        with nogil:
            p = <int>below(&state, 7)
            for j in range(height):
                board[j] = 0
            score = 0
            steps = 0
            hit = False
            while True:
                n = candidates(board, width, height, p, cands)
                if n == 0:
                    break
                i = choose(cands, n, w, prefer_reward, &state)
                memcpy(board, cands[i].rows, height * sizeof(uint32_t))
                score += cands[i].reward
                steps += 1
                if steps >= step_cap:
                    hit = True
                    break
                p = <int>below(&state, 7)
        scores.append(score)
        capped.append(bool(hit))
        placements.append(steps)
    return scores, capped, placements
