"""353-dimensional board encoding and the 5120-way policy move index space.

Layout:
  [0]        side to move (1 White, 0 Black)
  [1..4]     castling rights WQ, WK, BQ, BK
  [5..16]    piece counts WK,WQ,WR,WB,WN,WP then the Black mirror,
             normalized by starting count and clamped to [0, 1]
  [17..176]  32 piece records x 5: exists, file/7, rank/7,
             lowest-valued attacker/10, lowest-valued defender/10
  [177..224] sliding mobility per direction / 7 (queen 8, rooks 4+4,
             bishops 4+4 per side)
  [225..352] per square: lowest-valued attacker/10, lowest-valued defender/10
             (attacker = opponent of the side to move)

Attacks are raw (pins ignored); a slider attacks up to and including the
first occupied square. Attacker/defender values use the conventional
material scale pawn=1, knight=3, bishop=3, rook=5, queen=9, king=10,
normalized by 10; 0 means none.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

from .board import (
    ALL_DIRS, BISHOP, BISHOP_DIRS, BLACK, BLACK_PAWN_ATTACKS, KING,
    KING_ATTACKS, KNIGHT, KNIGHT_ATTACKS, PAWN, QUEEN, RAYS, ROOK, ROOK_DIRS,
    WHITE, WHITE_PAWN_ATTACKS, BoardState, Move, file_of, move_index, rank_of,
)

N_FEATURES = 353
N_GLOBAL = 17
N_PIECE_CENTRIC = 208
N_SQUARE_CENTRIC = 128
POLICY_SIZE = 5120

GLOBAL_SLICE = slice(0, 17)
PIECE_SLICE = slice(17, 225)
SQUARE_SLICE = slice(225, 353)

# Material scale for attacker/defender slots.
ATTACK_VALUE = {PAWN: 1, KNIGHT: 3, BISHOP: 3, ROOK: 5, QUEEN: 9, KING: 10}

# Roster: per side one king, one queen, two rooks, two bishops, two knights,
# eight pawns; pieces of each kind bind to slots in ascending square order.
_ROSTER = ((KING, 1), (QUEEN, 1), (ROOK, 2), (BISHOP, 2), (KNIGHT, 2), (PAWN, 8))
_COUNT_DIVISOR = {KING: 1, QUEEN: 1, ROOK: 2, BISHOP: 2, KNIGHT: 2, PAWN: 8}
_COUNT_ORDER = (KING, QUEEN, ROOK, BISHOP, KNIGHT, PAWN)


def _attack_min_maps(placement):
    """Lowest-valued attacker of every square, per color (0 = none)."""
    white_min = [0] * 64
    black_min = [0] * 64

    def update(table, targets, val):
        for t in targets:
            cur = table[t]
            if cur == 0 or val < cur:
                table[t] = val

    for sq, p in enumerate(placement):
        if p == 0:
            continue
        kind = abs(p)
        val = ATTACK_VALUE[kind]
        table = white_min if p > 0 else black_min
        if kind == PAWN:
            update(table, WHITE_PAWN_ATTACKS[sq] if p > 0 else BLACK_PAWN_ATTACKS[sq], val)
        elif kind == KNIGHT:
            update(table, KNIGHT_ATTACKS[sq], val)
        elif kind == KING:
            update(table, KING_ATTACKS[sq], val)
        else:
            dirs = ROOK_DIRS if kind == ROOK else BISHOP_DIRS if kind == BISHOP else ALL_DIRS
            rays = RAYS[sq]
            for d in dirs:
                for t in rays[d]:
                    cur = table[t]
                    if cur == 0 or val < cur:
                        table[t] = val
                    if placement[t] != 0:
                        break
    return white_min, black_min


def _slide_distance(placement, sq, direction, own_positive):
    """Squares reachable along one ray: empties plus a capturable enemy square."""
    dist = 0
    for t in RAYS[sq][direction]:
        p = placement[t]
        if p == 0:
            dist += 1
            continue
        if (p > 0) != own_positive:
            dist += 1
        break
    return dist


def extract_features(state: BoardState) -> np.ndarray:
    """Encode a position as the 353-entry feature vector (all values in [0, 1])."""
    v = np.zeros(N_FEATURES, dtype=np.float64)
    plc = state.placement
    white_min, black_min = _attack_min_maps(plc)

    v[0] = 1.0 if state.stm == WHITE else 0.0
    for i in range(4):
        v[1 + i] = 1.0 if state.castling & (1 << i) else 0.0

    counts: Dict[int, int] = {}
    squares_by_piece: Dict[int, list] = {}
    for sq, p in enumerate(plc):
        if p != 0:
            counts[p] = counts.get(p, 0) + 1
            squares_by_piece.setdefault(p, []).append(sq)

    slot = 5
    for sign in (1, -1):
        for kind in _COUNT_ORDER:
            v[slot] = min(1.0, counts.get(kind * sign, 0) / _COUNT_DIVISOR[kind])
            slot += 1

    # Piece records, 5 slots each; roster overflow (e.g. extra promoted
    # queens) is dropped here but still visible in the count slots.
    slot = 17
    mobility_pieces = {}  # (sign, kind, ordinal) -> square
    for sign in (1, -1):
        enemy_min = black_min if sign > 0 else white_min
        own_min = white_min if sign > 0 else black_min
        for kind, capacity in _ROSTER:
            squares = squares_by_piece.get(kind * sign, [])
            for ordinal in range(capacity):
                if ordinal < len(squares):
                    sq = squares[ordinal]
                    v[slot] = 1.0
                    v[slot + 1] = file_of(sq) / 7.0
                    v[slot + 2] = rank_of(sq) / 7.0
                    v[slot + 3] = enemy_min[sq] / 10.0
                    v[slot + 4] = own_min[sq] / 10.0
                    if kind in (QUEEN, ROOK, BISHOP):
                        mobility_pieces[(sign, kind, ordinal)] = sq
                slot += 5

    # Sliding mobility: per side queen (8 dirs), rooks (4 each), bishops (4 each).
    slot = 177
    for sign in (1, -1):
        own_positive = sign > 0
        for kind, capacity, dirs in ((QUEEN, 1, ALL_DIRS), (ROOK, 2, ROOK_DIRS), (BISHOP, 2, BISHOP_DIRS)):
            for ordinal in range(capacity):
                sq = mobility_pieces.get((sign, kind, ordinal))
                for d in dirs:
                    if sq is not None:
                        v[slot] = _slide_distance(plc, sq, d, own_positive) / 7.0
                    slot += 1

    # Square-centric: attacker relative to the side to move's opponent.
    attacker_min = black_min if state.stm == WHITE else white_min
    defender_min = white_min if state.stm == WHITE else black_min
    slot = 225
    for sq in range(64):
        v[slot] = attacker_min[sq] / 10.0
        v[slot + 1] = defender_min[sq] / 10.0
        slot += 2
    return v


def encode_move(m: Move) -> int:
    """Policy index of a move: from*64+to, promotions in the 4096+ block."""
    return move_index(m)


def decode_move(index: int, state: BoardState) -> Move:
    """Inverse of encode_move restricted to the legal moves of `state`."""
    for m in state.legal_moves:
        if move_index(m) == index:
            return m
    raise ValueError(f"index {index} is not a legal move in this position")


def legal_mask(state: BoardState) -> np.ndarray:
    """Boolean mask over the 5120 policy outputs; set bits are legal moves."""
    mask = np.zeros(POLICY_SIZE, dtype=bool)
    for m in state.legal_moves:
        mask[move_index(m)] = True
    return mask


def legal_move_indices(state: BoardState) -> tuple:
    """Ascending policy indices of the legal moves (the set bits of legal_mask)."""
    return tuple(move_index(m) for m in state.legal_moves)
