"""PGN/SAN parsing and generation tests."""

import numpy as np
import pytest

from pepper.board import Move, apply_move, emit_fen, game_outcome, initial_position, parse_fen
from pepper.pgn import PgnError, move_from_san, move_to_san, outcome_to_result, parse_pgn, write_pgn

from conftest import random_playout_positions


class TestParse:
    def test_short_fragment(self):
        games = parse_pgn("1. e4 e5 2. Nf3 *")
        assert len(games) == 1
        g = games[0]
        assert len(g.moves) == 3
        assert len(g.states) == 4  # initial position plus one per move
        assert g.result == "*"
        assert [m.uci() for m in g.moves] == ["e2e4", "e7e5", "g1f3"]

    def test_result_recorded(self):
        g = parse_pgn('[Event "t"]\n\n1. f3 e5 2. g4 Qh4# 0-1')[0]
        assert g.result == "0-1"
        assert game_outcome(g.states[-1]).kind.value == "black-win"

    def test_variations_ignored(self):
        g = parse_pgn("1. e4 (1. d4 d5 (1... Nf6 2. c4)) 1... e5 *")[0]
        assert [m.uci() for m in g.moves] == ["e2e4", "e7e5"]

    def test_comments_and_nags_ignored(self):
        g = parse_pgn("1. e4 {best by test} e5 $1 2. Nf3 ; casual\n Nc6 *")[0]
        assert len(g.moves) == 4

    def test_error_names_game_and_ply(self):
        with pytest.raises(PgnError) as err:
            parse_pgn("1. e4 e5 2. Qxf9 *")
        assert "game 1" in str(err.value)
        assert "ply 3" in str(err.value)

    def test_multiple_games(self):
        text = '[Round "1"]\n\n1. e4 e5 1/2-1/2\n\n[Round "2"]\n\n1. d4 d5 *\n'
        games = parse_pgn(text)
        assert len(games) == 2
        assert games[0].result == "1/2-1/2"
        assert games[1].tags["Round"] == "2"

    def test_fen_tag_sets_start(self):
        text = '[FEN "7k/5Q2/5K2/8/8/8/8/8 w - - 0 1"]\n\n1. Qg7# 1-0'
        g = parse_pgn(text)[0]
        assert game_outcome(g.states[-1]).kind.value == "white-win"

    def test_glued_move_numbers(self):
        g = parse_pgn("1.e4 e5 2.Nf3 Nc6 *")[0]
        assert len(g.moves) == 4

    def test_positions_replayable(self):
        g = parse_pgn("1. e4 c5 2. Nf3 d6 3. d4 cxd4 4. Nxd4 Nf6 *")[0]
        state = g.states[0]
        for mv, expect in zip(g.moves, g.states[1:]):
            state = apply_move(state, mv)
            assert state == expect


class TestSan:
    def test_castling_tokens(self):
        s = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1")
        assert move_from_san(s, "O-O") == Move.from_uci("e1g1")
        assert move_from_san(s, "O-O-O") == Move.from_uci("e1c1")
        assert move_to_san(s, Move.from_uci("e1g1")) == "O-O"

    def test_file_disambiguation(self):
        s = parse_fen("3k4/8/8/8/8/8/1K6/R6R w - - 0 1")
        assert move_from_san(s, "Rad1") == Move.from_uci("a1d1")
        assert move_from_san(s, "Rhd1") == Move.from_uci("h1d1")
        assert move_to_san(s, Move.from_uci("a1d1")) == "Rad1+"

    def test_rank_disambiguation(self):
        s = parse_fen("k7/8/8/8/7R/8/1K6/7R w - - 0 1")
        assert move_to_san(s, Move.from_uci("h1h2")) == "R1h2"
        assert move_from_san(s, "R4h2") == Move.from_uci("h4h2")

    def test_ambiguous_san_rejected(self):
        s = parse_fen("3k4/8/8/8/8/8/1K6/R6R w - - 0 1")
        with pytest.raises(PgnError):
            move_from_san(s, "Rd1")

    def test_promotion_with_check(self):
        s = parse_fen("r3k3/1P6/8/8/8/8/8/4K3 w - - 0 1")
        mv = move_from_san(s, "bxa8=Q+")
        assert mv == Move.from_uci("b7a8q")
        assert move_to_san(s, mv) == "bxa8=Q+"

    def test_mate_suffix(self):
        s = parse_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1")
        assert move_to_san(s, Move.from_uci("a1a8")) == "Ra8#"

    def test_pawn_capture_token(self):
        s = apply_move(initial_position(), Move.from_uci("e2e4"))
        s = apply_move(s, Move.from_uci("d7d5"))
        assert move_to_san(s, Move.from_uci("e4d5")) == "exd5"

    def test_roundtrip_over_random_playouts(self):
        rng = np.random.default_rng(5)
        for s in random_playout_positions(120, seed=11):
            m = s.legal_moves[int(rng.integers(len(s.legal_moves)))]
            assert move_from_san(s, move_to_san(s, m)) == m


class TestWrite:
    def test_roundtrip_through_writer(self):
        rng = np.random.default_rng(9)
        state = initial_position()
        moves = []
        for _ in range(30):
            if not game_outcome(state).ongoing:
                break
            m = state.legal_moves[int(rng.integers(len(state.legal_moves)))]
            moves.append(m)
            state = apply_move(state, m)
        text = write_pgn(moves, outcome_to_result(game_outcome(state)), {"Event": "rt"})
        g = parse_pgn(text)[0]
        assert g.moves == moves
        assert emit_fen(g.states[-1]) == emit_fen(state)

    def test_outcome_to_result_mapping(self):
        from pepper.board import GameOutcome, OutcomeKind, OutcomeReason
        assert outcome_to_result(GameOutcome(OutcomeKind.WHITE_WIN, OutcomeReason.CHECKMATE)) == "1-0"
        assert outcome_to_result(GameOutcome(OutcomeKind.BLACK_RESIGNED, OutcomeReason.ADJUDICATED)) == "1-0"
        assert outcome_to_result(GameOutcome(OutcomeKind.WHITE_RESIGNED, OutcomeReason.ADJUDICATED)) == "0-1"
        assert outcome_to_result(GameOutcome(OutcomeKind.DRAW, OutcomeReason.STALEMATE)) == "1/2-1/2"
