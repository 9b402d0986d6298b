"""PGN import/export: SAN movetext, mainline only (variations skipped)."""

from __future__ import annotations

import re
from typing import List, Optional, Tuple

from .board import (
    BISHOP, BLACK, KING, KNIGHT, PAWN, QUEEN, ROOK, WHITE,
    BoardState, Move, apply_move, game_outcome, initial_position, parse_fen,
    file_of, rank_of, parse_square,
)

_SAN_PIECE = {"N": KNIGHT, "B": BISHOP, "R": ROOK, "Q": QUEEN, "K": KING}
_PIECE_SAN = {v: k for k, v in _SAN_PIECE.items()}

_RESULTS = {"1-0", "0-1", "1/2-1/2", "*"}

_SAN_RE = re.compile(
    r"^(?P<piece>[NBRQK])?(?P<ffile>[a-h])?(?P<frank>[1-8])?(?P<capture>x)?"
    r"(?P<target>[a-h][1-8])(?:=(?P<promo>[NBRQ]))?$"
)


class PgnError(ValueError):
    """Unparseable PGN movetext."""


def move_from_san(state: BoardState, token: str) -> Move:
    """Resolve a SAN token against the legal moves of `state`."""
    raw = token.rstrip("+#!?")
    if raw in ("O-O", "0-0"):
        home = 4 if state.stm == WHITE else 60
        want = Move(home, home + 2)
        if want in state.legal_moves:
            return want
        raise PgnError(f"illegal castle {token!r}")
    if raw in ("O-O-O", "0-0-0"):
        home = 4 if state.stm == WHITE else 60
        want = Move(home, home - 2)
        if want in state.legal_moves:
            return want
        raise PgnError(f"illegal castle {token!r}")

    m = _SAN_RE.match(raw)
    if m is None:
        raise PgnError(f"unparseable SAN token {token!r}")
    kind = _SAN_PIECE.get(m.group("piece"), PAWN)
    target = parse_square(m.group("target"))
    promo = _SAN_PIECE[m.group("promo")] if m.group("promo") else None
    sign = 1 if state.stm == WHITE else -1

    candidates = []
    for mv in state.legal_moves:
        if mv.to_sq != target or mv.promotion != promo:
            continue
        if state.placement[mv.from_sq] != kind * sign:
            continue
        if m.group("ffile") and file_of(mv.from_sq) != "abcdefgh".index(m.group("ffile")):
            continue
        if m.group("frank") and rank_of(mv.from_sq) != int(m.group("frank")) - 1:
            continue
        candidates.append(mv)
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise PgnError(f"no legal move matches SAN {token!r}")
    raise PgnError(f"ambiguous SAN {token!r}: {[c.uci() for c in candidates]}")


def move_to_san(state: BoardState, move: Move) -> str:
    """SAN for a legal move, with +/# suffix."""
    if move not in state.legal_moves:
        raise ValueError(f"move {move.uci()} not legal here")
    sign = 1 if state.stm == WHITE else -1
    kind = state.placement[move.from_sq] * sign
    capture = state.placement[move.to_sq] != 0 or (
        kind == PAWN and state.ep is not None and move.to_sq == state.ep
    )

    if kind == KING and abs(move.to_sq - move.from_sq) == 2:
        san = "O-O" if move.to_sq > move.from_sq else "O-O-O"
    elif kind == PAWN:
        san = ""
        if capture:
            san += "abcdefgh"[file_of(move.from_sq)] + "x"
        san += "abcdefgh"[file_of(move.to_sq)] + str(rank_of(move.to_sq) + 1)
        if move.promotion is not None:
            san += "=" + _PIECE_SAN[move.promotion]
    else:
        # Disambiguate among same-kind pieces that can also reach the target.
        others = [
            mv for mv in state.legal_moves
            if mv.to_sq == move.to_sq and mv.from_sq != move.from_sq
            and state.placement[mv.from_sq] == kind * sign
        ]
        san = _PIECE_SAN[kind]
        if others:
            same_file = any(file_of(mv.from_sq) == file_of(move.from_sq) for mv in others)
            same_rank = any(rank_of(mv.from_sq) == rank_of(move.from_sq) for mv in others)
            if not same_file:
                san += "abcdefgh"[file_of(move.from_sq)]
            elif not same_rank:
                san += str(rank_of(move.from_sq) + 1)
            else:
                san += "abcdefgh"[file_of(move.from_sq)] + str(rank_of(move.from_sq) + 1)
        if capture:
            san += "x"
        san += "abcdefgh"[file_of(move.to_sq)] + str(rank_of(move.to_sq) + 1)

    after = apply_move(state, move)
    if after.in_check:
        san += "#" if not after.legal_moves else "+"
    return san


def _strip_comments(text: str) -> str:
    out = []
    depth_brace = False
    depth_paren = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if depth_brace:
            if ch == "}":
                depth_brace = False
            i += 1
            continue
        if ch == "{":
            depth_brace = True
            i += 1
            continue
        if ch == "(":
            depth_paren += 1
            i += 1
            continue
        if ch == ")":
            if depth_paren == 0:
                raise PgnError("unbalanced ')' in movetext")
            depth_paren -= 1
            i += 1
            continue
        if ch == ";":  # rest-of-line comment
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if depth_paren == 0:
            out.append(ch)
        i += 1
    return "".join(out)


def _split_games(text: str) -> List[Tuple[dict, str]]:
    """Split raw PGN into (tags, movetext) pairs."""
    games = []
    tags: dict = {}
    movetext_lines: List[str] = []
    in_moves = False

    def flush():
        nonlocal tags, movetext_lines, in_moves
        if movetext_lines or tags:
            # Newline-joined so ";" rest-of-line comments stay line-bounded.
            games.append((tags, "\n".join(movetext_lines)))
        tags = {}
        movetext_lines = []
        in_moves = False

    tag_re = re.compile(r'^\[(\w+)\s+"(.*)"\]\s*$')
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        tag_m = tag_re.match(line)
        if tag_m:
            if in_moves:
                flush()
            tags[tag_m.group(1)] = tag_m.group(2)
            continue
        in_moves = True
        movetext_lines.append(line)
        if any(line.endswith(res) for res in _RESULTS - {"*"}) or line.endswith("*"):
            flush()
    flush()
    return [g for g in games if g[1].strip()]


class PgnGame:
    """One parsed game: tag pairs, moves, positions (initial position included)."""

    def __init__(self, tags, moves, states, result):
        self.tags = tags
        self.moves: List[Move] = moves
        self.states: List[BoardState] = states
        self.result: Optional[str] = result


def parse_pgn(text: str) -> List[PgnGame]:
    """Parse PGN text into games; comments and variations are skipped."""
    games = []
    for game_idx, (tags, raw_movetext) in enumerate(_split_games(text)):
        movetext = _strip_comments(raw_movetext)
        state = parse_fen(tags["FEN"]) if "FEN" in tags else initial_position()
        states = [state]
        moves: List[Move] = []
        result = None
        ply = 0
        for token in movetext.split():
            if token in _RESULTS:
                result = token
                break
            if re.fullmatch(r"\d+\.+", token) or token.startswith("$"):
                continue
            # Glued move numbers like "1.e4" or "3...Nf6".
            token = re.sub(r"^\d+\.+", "", token)
            if not token:
                continue
            try:
                mv = move_from_san(state, token)
            except PgnError as exc:
                raise PgnError(f"game {game_idx + 1}, ply {ply + 1}: {exc}") from None
            moves.append(mv)
            state = apply_move(state, mv)
            states.append(state)
            ply += 1
        games.append(PgnGame(tags, moves, states, result))
    return games


def write_pgn(moves: List[Move], result: str = "*", tags: Optional[dict] = None,
              start: Optional[BoardState] = None) -> str:
    """Render a mainline game as PGN text."""
    state = start if start is not None else initial_position()
    header = dict(tags or {})
    header.setdefault("Result", result)
    lines = [f'[{k} "{v}"]' for k, v in header.items()]
    lines.append("")
    tokens = []
    for mv in moves:
        if state.stm == WHITE:
            tokens.append(f"{state.fullmove}.")
        tokens.append(move_to_san(state, mv))
        state = apply_move(state, mv)
    tokens.append(result)
    # Wrap movetext at a readable width.
    body, line = [], ""
    for tok in tokens:
        if line and len(line) + 1 + len(tok) > 79:
            body.append(line)
            line = tok
        else:
            line = f"{line} {tok}".strip()
    if line:
        body.append(line)
    return "\n".join(lines + body) + "\n"


def outcome_to_result(outcome) -> str:
    """Map a GameOutcome to a PGN result string."""
    from .board import OutcomeKind
    if outcome.kind in (OutcomeKind.WHITE_WIN, OutcomeKind.BLACK_RESIGNED):
        return "1-0"
    if outcome.kind in (OutcomeKind.BLACK_WIN, OutcomeKind.WHITE_RESIGNED):
        return "0-1"
    if outcome.kind is OutcomeKind.DRAW:
        return "1/2-1/2"
    return "*"
