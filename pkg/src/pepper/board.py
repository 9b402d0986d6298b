"""Chess rules: position representation, legal move generation, termination, FEN.

Squares are indexed 0..63 as file + 8*rank (a1=0, h8=63). Pieces are signed
ints: positive for White, negative for Black, magnitude 1..6 for pawn,
knight, bishop, rook, queen, king. BoardState is immutable after
construction; all operations are pure functions returning new states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

WHITE = 0
BLACK = 1

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6

PIECE_CHARS = {PAWN: "p", KNIGHT: "n", BISHOP: "b", ROOK: "r", QUEEN: "q", KING: "k"}
CHAR_PIECES = {c: k for k, c in PIECE_CHARS.items()}

# Castling-rights bitmask, in feature order WQ, WK, BQ, BK.
CASTLE_WQ = 1
CASTLE_WK = 2
CASTLE_BQ = 4
CASTLE_BK = 8

STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

FILE_NAMES = "abcdefgh"


class FenError(ValueError):
    """Malformed or illegal FEN text."""


class IllegalMoveError(ValueError):
    """A move was applied that is not legal in the given position."""


def square(file: int, rank: int) -> int:
    return file + 8 * rank


def file_of(sq: int) -> int:
    return sq & 7


def rank_of(sq: int) -> int:
    return sq >> 3


def square_name(sq: int) -> str:
    return FILE_NAMES[sq & 7] + str((sq >> 3) + 1)


def parse_square(name: str) -> int:
    if len(name) != 2 or name[0] not in FILE_NAMES or name[1] not in "12345678":
        raise ValueError(f"bad square name: {name!r}")
    return square(FILE_NAMES.index(name[0]), int(name[1]) - 1)


@dataclass(frozen=True, order=True)
class Move:
    """A move as (from, to, optional promotion piece kind)."""

    from_sq: int
    to_sq: int
    promotion: Optional[int] = None

    def uci(self) -> str:
        s = square_name(self.from_sq) + square_name(self.to_sq)
        if self.promotion is not None:
            s += PIECE_CHARS[self.promotion]
        return s

    @staticmethod
    def from_uci(text: str) -> "Move":
        if len(text) not in (4, 5):
            raise ValueError(f"bad uci move: {text!r}")
        promo = None
        if len(text) == 5:
            if text[4] not in "nbrq":
                raise ValueError(f"bad promotion piece: {text!r}")
            promo = CHAR_PIECES[text[4]]
        return Move(parse_square(text[:2]), parse_square(text[2:4]), promo)

    def __repr__(self) -> str:
        return f"Move({self.uci()})"


# Promotion piece codes for the policy-index formula: N=0, B=1, R=2, Q=3.
_PROMO_CODE = {KNIGHT: 0, BISHOP: 1, ROOK: 2, QUEEN: 3}


def move_index(m: Move) -> int:
    """Policy-output index of a move.

    Non-promotions map to from*64+to (0..4095). Promotions map into the
    reserved block: 4096 + side*512 + from_file*64 + (dfile+1)*16 + piece_code,
    where side is 0 for a White promotion (to rank 8) and 1 for Black.
    """
    if m.promotion is None:
        return m.from_sq * 64 + m.to_sq
    dfile = file_of(m.to_sq) - file_of(m.from_sq)
    if dfile < -1 or dfile > 1:
        raise ValueError(f"promotion with |dfile| > 1: {m.uci()}")
    side = 0 if rank_of(m.to_sq) == 7 else 1
    return 4096 + side * 512 + file_of(m.from_sq) * 64 + (dfile + 1) * 16 + _PROMO_CODE[m.promotion]


class OutcomeKind(Enum):
    ONGOING = "ongoing"
    WHITE_WIN = "white-win"
    BLACK_WIN = "black-win"
    DRAW = "draw"
    WHITE_RESIGNED = "white-resigned"
    BLACK_RESIGNED = "black-resigned"


class OutcomeReason(Enum):
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    FIFTY_MOVE = "fifty-move"
    THREEFOLD = "threefold"
    INSUFFICIENT_MATERIAL = "insufficient-material"
    ADJUDICATED = "adjudicated"


@dataclass(frozen=True)
class GameOutcome:
    kind: OutcomeKind
    reason: Optional[OutcomeReason] = None

    @property
    def ongoing(self) -> bool:
        return self.kind is OutcomeKind.ONGOING


ONGOING = GameOutcome(OutcomeKind.ONGOING)


# ---------------------------------------------------------------------------
# Precomputed attack tables.

def _build_tables():
    knight, king = [], []
    wp_att, bp_att = [], []
    rays = []
    # Direction order: N, NE, E, SE, S, SW, W, NW.
    dirs = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        kn = []
        for df, dr in ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)):
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                kn.append(nf + 8 * nr)
        knight.append(tuple(kn))
        kg = []
        for df, dr in dirs:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                kg.append(nf + 8 * nr)
        king.append(tuple(kg))
        wp = [f2 + 8 * (r + 1) for f2 in (f - 1, f + 1) if 0 <= f2 < 8 and r + 1 < 8]
        bp = [f2 + 8 * (r - 1) for f2 in (f - 1, f + 1) if 0 <= f2 < 8 and r - 1 >= 0]
        wp_att.append(tuple(wp))
        bp_att.append(tuple(bp))
        sq_rays = []
        for df, dr in dirs:
            ray = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                ray.append(nf + 8 * nr)
                nf += df
                nr += dr
            sq_rays.append(tuple(ray))
        rays.append(tuple(sq_rays))
    return tuple(knight), tuple(king), tuple(wp_att), tuple(bp_att), tuple(rays)


KNIGHT_ATTACKS, KING_ATTACKS, WHITE_PAWN_ATTACKS, BLACK_PAWN_ATTACKS, RAYS = _build_tables()

ROOK_DIRS = (0, 2, 4, 6)   # N, E, S, W
BISHOP_DIRS = (1, 3, 5, 7)  # NE, SE, SW, NW
ALL_DIRS = (0, 1, 2, 3, 4, 5, 6, 7)


def is_attacked(placement, sq: int, by_white: bool) -> bool:
    """True if any piece of the given color attacks sq (raw attacks, pins ignored)."""
    sign = 1 if by_white else -1
    # Pawn attackers sit on the squares this square "attacks" as the opposite color.
    pawn_from = BLACK_PAWN_ATTACKS[sq] if by_white else WHITE_PAWN_ATTACKS[sq]
    pawn = PAWN * sign
    for s in pawn_from:
        if placement[s] == pawn:
            return True
    knight = KNIGHT * sign
    for s in KNIGHT_ATTACKS[sq]:
        if placement[s] == knight:
            return True
    king = KING * sign
    for s in KING_ATTACKS[sq]:
        if placement[s] == king:
            return True
    rook, bishop, queen = ROOK * sign, BISHOP * sign, QUEEN * sign
    rays = RAYS[sq]
    for d in ROOK_DIRS:
        for s in rays[d]:
            p = placement[s]
            if p != 0:
                if p == rook or p == queen:
                    return True
                break
    for d in BISHOP_DIRS:
        for s in rays[d]:
            p = placement[s]
            if p != 0:
                if p == bishop or p == queen:
                    return True
                break
    return False


class BoardState:
    """Immutable full chess position.

    repetition ancestry is kept as a tuple of position keys of prior
    positions reachable by reversible play (reset on any pawn move or
    capture, after which earlier positions can never repeat).
    """

    __slots__ = (
        "placement", "stm", "castling", "ep", "halfmove", "fullmove",
        "history", "_moves", "_move_keys", "_key", "_check",
    )

    def __init__(self, placement, stm, castling, ep, halfmove, fullmove, history=()):
        object.__setattr__(self, "placement", tuple(placement))
        object.__setattr__(self, "stm", stm)
        object.__setattr__(self, "castling", castling)
        object.__setattr__(self, "ep", ep)
        object.__setattr__(self, "halfmove", halfmove)
        object.__setattr__(self, "fullmove", fullmove)
        object.__setattr__(self, "history", history)
        object.__setattr__(self, "_moves", None)
        object.__setattr__(self, "_move_keys", None)
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_check", None)

    def __setattr__(self, name, value):
        raise AttributeError("BoardState is immutable")

    def __eq__(self, other):
        if not isinstance(other, BoardState):
            return NotImplemented
        return (self.placement == other.placement and self.stm == other.stm
                and self.castling == other.castling and self.ep == other.ep
                and self.halfmove == other.halfmove and self.fullmove == other.fullmove)

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"BoardState({emit_fen(self)!r})"

    @property
    def key(self):
        """Repetition key: (placement, side to move, castling, en passant)."""
        k = self._key
        if k is None:
            k = (self.placement, self.stm, self.castling, self.ep)
            object.__setattr__(self, "_key", k)
        return k

    @property
    def ply(self) -> int:
        """Half-moves played since the standard game start."""
        return 2 * (self.fullmove - 1) + (1 if self.stm == BLACK else 0)

    @property
    def in_check(self) -> bool:
        c = self._check
        if c is None:
            sign = 1 if self.stm == WHITE else -1
            ksq = self.placement.index(KING * sign)
            c = is_attacked(self.placement, ksq, self.stm == BLACK)
            object.__setattr__(self, "_check", c)
        return c

    @property
    def legal_moves(self) -> tuple:
        m = self._moves
        if m is None:
            m = tuple(sorted(_generate_legal(self), key=move_index))
            object.__setattr__(self, "_moves", m)
        return m

    def _legal_keys(self):
        ks = self._move_keys
        if ks is None:
            ks = frozenset((m.from_sq, m.to_sq, m.promotion) for m in self.legal_moves)
            object.__setattr__(self, "_move_keys", ks)
        return ks


def _generate_legal(state: BoardState):
    plc = list(state.placement)
    stm = state.stm
    white = stm == WHITE
    sign = 1 if white else -1
    enemy_white = not white
    ep = state.ep
    king_sq = plc.index(KING * sign)
    moves = []

    def try_move(frm, to, promo=None, ep_capture=False):
        piece = plc[frm]
        captured = plc[to]
        cap_sq = None
        if ep_capture:
            cap_sq = to - 8 if white else to + 8
            cap_piece = plc[cap_sq]
            plc[cap_sq] = 0
        plc[frm] = 0
        plc[to] = piece
        ksq = to if frm == king_sq else king_sq
        safe = not is_attacked(plc, ksq, enemy_white)
        plc[frm] = piece
        plc[to] = captured
        if cap_sq is not None:
            plc[cap_sq] = cap_piece
        if safe:
            if promo is not None:
                moves.append(Move(frm, to, promo))
            else:
                moves.append(Move(frm, to))

    def try_pawn(frm, to, capture_ep=False):
        rank = to >> 3
        if rank == 7 or rank == 0:
            for promo in (KNIGHT, BISHOP, ROOK, QUEEN):
                try_move(frm, to, promo)
        else:
            try_move(frm, to, ep_capture=capture_ep)

    for frm in range(64):
        piece = plc[frm]
        if piece == 0 or (piece > 0) != white:
            continue
        kind = piece * sign
        if kind == PAWN:
            fwd = frm + 8 * sign
            if plc[fwd] == 0:
                try_pawn(frm, fwd)
                start_rank = 1 if white else 6
                if (frm >> 3) == start_rank:
                    fwd2 = frm + 16 * sign
                    if plc[fwd2] == 0:
                        try_move(frm, fwd2)
            attacks = WHITE_PAWN_ATTACKS[frm] if white else BLACK_PAWN_ATTACKS[frm]
            for to in attacks:
                tgt = plc[to]
                if tgt != 0 and (tgt > 0) != white:
                    try_pawn(frm, to)
                elif ep is not None and to == ep:
                    try_pawn(frm, to, capture_ep=True)
        elif kind == KNIGHT:
            for to in KNIGHT_ATTACKS[frm]:
                tgt = plc[to]
                if tgt == 0 or (tgt > 0) != white:
                    try_move(frm, to)
        elif kind == KING:
            for to in KING_ATTACKS[frm]:
                tgt = plc[to]
                if tgt == 0 or (tgt > 0) != white:
                    try_move(frm, to)
        else:
            dirs = ROOK_DIRS if kind == ROOK else BISHOP_DIRS if kind == BISHOP else ALL_DIRS
            rays = RAYS[frm]
            for d in dirs:
                for to in rays[d]:
                    tgt = plc[to]
                    if tgt == 0:
                        try_move(frm, to)
                        continue
                    if (tgt > 0) != white:
                        try_move(frm, to)
                    break

    # Castling: rights present, lane empty, king not in or passing through check.
    if white:
        home, rank_first = 4, 0
        rights_k, rights_q = state.castling & CASTLE_WK, state.castling & CASTLE_WQ
    else:
        home, rank_first = 60, 7
        rights_k, rights_q = state.castling & CASTLE_BK, state.castling & CASTLE_BQ
    if (rights_k or rights_q) and plc[home] == KING * sign:
        if not is_attacked(plc, home, enemy_white):
            if rights_k and plc[home + 1] == 0 and plc[home + 2] == 0:
                if (not is_attacked(plc, home + 1, enemy_white)
                        and not is_attacked(plc, home + 2, enemy_white)):
                    moves.append(Move(home, home + 2))
            if rights_q and plc[home - 1] == 0 and plc[home - 2] == 0 and plc[home - 3] == 0:
                if (not is_attacked(plc, home - 1, enemy_white)
                        and not is_attacked(plc, home - 2, enemy_white)):
                    moves.append(Move(home, home - 2))
    return moves


# Rook home squares -> right cleared when the rook moves or is captured.
_ROOK_RIGHTS = {0: CASTLE_WQ, 7: CASTLE_WK, 56: CASTLE_BQ, 63: CASTLE_BK}


def apply_move(state: BoardState, m: Move) -> BoardState:
    """Apply a legal move, returning the successor position."""
    if (m.from_sq, m.to_sq, m.promotion) not in state._legal_keys():
        raise IllegalMoveError(f"illegal move {m.uci()} in {emit_fen(state)}")
    plc = list(state.placement)
    white = state.stm == WHITE
    sign = 1 if white else -1
    piece = plc[m.from_sq]
    kind = piece * sign
    captured = plc[m.to_sq]

    irreversible = kind == PAWN or captured != 0

    if kind == PAWN and state.ep is not None and m.to_sq == state.ep and captured == 0:
        plc[m.to_sq - 8 * sign] = 0  # en passant: remove the bypassed pawn
    plc[m.from_sq] = 0
    plc[m.to_sq] = piece if m.promotion is None else m.promotion * sign
    if kind == KING and abs(m.to_sq - m.from_sq) == 2:
        if m.to_sq > m.from_sq:  # king side
            plc[m.from_sq + 1] = plc[m.to_sq + 1]
            plc[m.to_sq + 1] = 0
        else:
            plc[m.from_sq - 1] = plc[m.to_sq - 2]
            plc[m.to_sq - 2] = 0

    castling = state.castling
    if kind == KING:
        castling &= ~(CASTLE_WQ | CASTLE_WK) if white else ~(CASTLE_BQ | CASTLE_BK)
    if m.from_sq in _ROOK_RIGHTS and kind == ROOK:
        castling &= ~_ROOK_RIGHTS[m.from_sq]
    if m.to_sq in _ROOK_RIGHTS and captured != 0:
        castling &= ~_ROOK_RIGHTS[m.to_sq]

    ep = None
    if kind == PAWN and abs(m.to_sq - m.from_sq) == 16:
        ep = m.from_sq + 8 * sign

    history = () if irreversible else state.history + (state.key,)
    return BoardState(
        plc,
        BLACK if white else WHITE,
        castling,
        ep,
        0 if irreversible else state.halfmove + 1,
        state.fullmove + (0 if white else 1),
        history,
    )


def _insufficient_material(placement) -> bool:
    minors = []
    for sq, p in enumerate(placement):
        if p == 0:
            continue
        kind = abs(p)
        if kind == KING:
            continue
        if kind in (PAWN, ROOK, QUEEN):
            return False
        minors.append((sq, p))
    if len(minors) == 0:
        return True
    if len(minors) == 1:
        return True
    if len(minors) == 2:
        (sq_a, p_a), (sq_b, p_b) = minors
        both_bishops = abs(p_a) == BISHOP and abs(p_b) == BISHOP
        opposite_sides = (p_a > 0) != (p_b > 0)
        same_color_sq = ((sq_a >> 3) + (sq_a & 7)) % 2 == ((sq_b >> 3) + (sq_b & 7)) % 2
        return both_bishops and opposite_sides and same_color_sq
    return False


def game_outcome(state: BoardState) -> GameOutcome:
    """Mate/stalemate via legal-move emptiness, then draw rules."""
    if not state.legal_moves:
        if state.in_check:
            winner = OutcomeKind.BLACK_WIN if state.stm == WHITE else OutcomeKind.WHITE_WIN
            return GameOutcome(winner, OutcomeReason.CHECKMATE)
        return GameOutcome(OutcomeKind.DRAW, OutcomeReason.STALEMATE)
    if state.halfmove >= 100:
        return GameOutcome(OutcomeKind.DRAW, OutcomeReason.FIFTY_MOVE)
    if _insufficient_material(state.placement):
        return GameOutcome(OutcomeKind.DRAW, OutcomeReason.INSUFFICIENT_MATERIAL)
    if state.history.count(state.key) >= 2:
        return GameOutcome(OutcomeKind.DRAW, OutcomeReason.THREEFOLD)
    return ONGOING


def perft(state: BoardState, depth: int) -> int:
    """Leaf-node count of the legal-move tree at exactly `depth`."""
    if depth < 0:
        raise ValueError("perft depth must be >= 0")
    if depth == 0:
        return 1
    moves = state.legal_moves
    if depth == 1:
        return len(moves)
    return sum(perft(apply_move(state, m), depth - 1) for m in moves)


# ---------------------------------------------------------------------------
# FEN

def parse_fen(text: str) -> BoardState:
    fields = text.split()
    if len(fields) != 6:
        raise FenError(f"FEN needs 6 fields, got {len(fields)}")
    placement_f, stm_f, castling_f, ep_f, half_f, full_f = fields

    ranks = placement_f.split("/")
    if len(ranks) != 8:
        raise FenError(f"placement field needs 8 ranks, got {len(ranks)}")
    placement = [0] * 64
    for i, rank_text in enumerate(ranks):
        rank = 7 - i
        file = 0
        for ch in rank_text:
            if ch.isdigit():
                file += int(ch)
            elif ch.lower() in CHAR_PIECES:
                if file > 7:
                    raise FenError(f"placement field: rank {rank + 1} overflows")
                kind = CHAR_PIECES[ch.lower()]
                placement[square(file, rank)] = kind if ch.isupper() else -kind
                file += 1
            else:
                raise FenError(f"placement field: bad character {ch!r}")
        if file != 8:
            raise FenError(f"placement field: rank {rank + 1} has {file} entries")

    if stm_f == "w":
        stm = WHITE
    elif stm_f == "b":
        stm = BLACK
    else:
        raise FenError(f"side-to-move field: expected 'w' or 'b', got {stm_f!r}")

    castling = 0
    if castling_f != "-":
        seen = set()
        for ch in castling_f:
            bit = {"K": CASTLE_WK, "Q": CASTLE_WQ, "k": CASTLE_BK, "q": CASTLE_BQ}.get(ch)
            if bit is None or ch in seen:
                raise FenError(f"castling field: bad token {castling_f!r}")
            seen.add(ch)
            castling |= bit

    ep = None
    if ep_f != "-":
        try:
            ep = parse_square(ep_f)
        except ValueError as exc:
            raise FenError(f"en-passant field: {exc}") from None

    try:
        halfmove = int(half_f)
        fullmove = int(full_f)
    except ValueError:
        raise FenError("clock fields must be integers") from None
    if halfmove < 0:
        raise FenError("halfmove clock must be >= 0")
    if fullmove < 1:
        raise FenError("fullmove number must be >= 1")

    _validate_position(placement, stm, castling, ep)
    return BoardState(placement, stm, castling, ep, halfmove, fullmove)


def _validate_position(placement, stm, castling, ep):
    wk = placement.count(KING)
    bk = placement.count(-KING)
    if wk != 1 or bk != 1:
        raise FenError(f"placement field: need exactly one king per color (got {wk} white, {bk} black)")
    for sq in list(range(0, 8)) + list(range(56, 64)):
        if abs(placement[sq]) == PAWN:
            raise FenError(f"placement field: pawn on {square_name(sq)}")
    # Side not to move must not be in check.
    other_sign = -1 if stm == WHITE else 1
    other_king = placement.index(KING * other_sign)
    if is_attacked(placement, other_king, stm == WHITE):
        raise FenError("side-to-move field: side not to move is in check")
    # Castling rights require king and rook on their home squares.
    for bit, king_sq, rook_sq, king_pc, rook_pc in (
        (CASTLE_WK, 4, 7, KING, ROOK),
        (CASTLE_WQ, 4, 0, KING, ROOK),
        (CASTLE_BK, 60, 63, -KING, -ROOK),
        (CASTLE_BQ, 60, 56, -KING, -ROOK),
    ):
        if castling & bit and (placement[king_sq] != king_pc or placement[rook_sq] != rook_pc):
            raise FenError("castling field: rights inconsistent with king/rook placement")
    if ep is not None:
        rank = ep >> 3
        want_rank = 2 if stm == BLACK else 5
        if rank != want_rank:
            raise FenError(f"en-passant field: square {square_name(ep)} on wrong rank for side to move")
        pawn_sq = ep + 8 if stm == BLACK else ep - 8
        pawn = PAWN if stm == BLACK else -PAWN
        if placement[ep] != 0 or placement[pawn_sq] != pawn:
            raise FenError("en-passant field: no double-pushed pawn behind the target square")


def emit_fen(state: BoardState) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row = ""
        empty = 0
        for file in range(8):
            p = state.placement[square(file, rank)]
            if p == 0:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            ch = PIECE_CHARS[abs(p)]
            row += ch.upper() if p > 0 else ch
        if empty:
            row += str(empty)
        rows.append(row)
    castling = "".join(
        ch for ch, bit in (("K", CASTLE_WK), ("Q", CASTLE_WQ), ("k", CASTLE_BK), ("q", CASTLE_BQ))
        if state.castling & bit
    ) or "-"
    return " ".join([
        "/".join(rows),
        "w" if state.stm == WHITE else "b",
        castling,
        square_name(state.ep) if state.ep is not None else "-",
        str(state.halfmove),
        str(state.fullmove),
    ])


def initial_position() -> BoardState:
    return parse_fen(STARTING_FEN)


def mirror(state: BoardState) -> BoardState:
    """Color-flipped vertical mirror of the position (used by evaluation tests)."""
    placement = [0] * 64
    for sq, p in enumerate(state.placement):
        if p != 0:
            placement[square(file_of(sq), 7 - rank_of(sq))] = -p
    castling = 0
    if state.castling & CASTLE_WQ:
        castling |= CASTLE_BQ
    if state.castling & CASTLE_WK:
        castling |= CASTLE_BK
    if state.castling & CASTLE_BQ:
        castling |= CASTLE_WQ
    if state.castling & CASTLE_BK:
        castling |= CASTLE_WK
    ep = None if state.ep is None else square(file_of(state.ep), 7 - rank_of(state.ep))
    return BoardState(
        placement,
        BLACK if state.stm == WHITE else WHITE,
        castling,
        ep,
        state.halfmove,
        state.fullmove,
    )
