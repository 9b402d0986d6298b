"""Chess-core tests: FEN, move generation, outcomes, perft."""

import numpy as np
import pytest

from pepper.board import (
    BLACK, CASTLE_BK, CASTLE_BQ, CASTLE_WK, CASTLE_WQ, QUEEN, WHITE,
    BoardState, FenError, GameOutcome, IllegalMoveError, Move, OutcomeKind,
    OutcomeReason, apply_move, emit_fen, game_outcome, initial_position,
    is_attacked, mirror, move_index, parse_fen, parse_square, perft,
    square_name,
)

from conftest import random_playout_positions

KIWIPETE = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"


class TestFen:
    def test_startpos_roundtrip(self):
        s = parse_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1")
        assert s.stm == WHITE
        assert s.castling == CASTLE_WQ | CASTLE_WK | CASTLE_BQ | CASTLE_BK
        assert emit_fen(s) == "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

    def test_lone_kings(self):
        s = parse_fen("8/8/8/8/8/8/8/K6k w - - 0 1")
        assert s.castling == 0
        assert s.ep is None
        assert emit_fen(s) == "8/8/8/8/8/8/8/K6k w - - 0 1"

    def test_emit_is_idempotent(self, playout_corpus):
        for s in playout_corpus[:50]:
            fen = emit_fen(s)
            assert emit_fen(parse_fen(fen)) == fen

    @pytest.mark.parametrize("fen,field", [
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBN w KQkq - 0 1", "placement"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0", "6 fields"),
        ("KK6/8/8/8/8/8/8/k7 w - - 0 1", "king"),
        ("P7/8/8/8/8/8/8/Kk6 w - - 0 1", "pawn on"),
        ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w XQkq - 0 1", "castling"),
        ("8/8/8/8/8/8/8/K6k w KQkq - 0 1", "castling"),
        ("8/8/8/8/8/8/8/K6k w - e6 0 1", "en-passant"),
        ("8/8/8/8/8/8/8/K6k w - - -1 1", "halfmove"),
        ("8/8/8/8/8/8/8/K6k w - - 0 0", "fullmove"),
    ])
    def test_rejects_bad_fens(self, fen, field):
        with pytest.raises(FenError) as err:
            parse_fen(fen)
        assert field.split()[0] in str(err.value)

    def test_rejects_side_not_to_move_in_check(self):
        # White queen gives check to the black king, but White is to move.
        with pytest.raises(FenError):
            parse_fen("7k/7Q/8/8/8/8/8/K7 w - - 0 1")

    def test_ep_square_accepted(self):
        s = parse_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1")
        assert s.ep == parse_square("e3")


class TestMoveGeneration:
    def test_initial_has_20_moves(self):
        assert len(initial_position().legal_moves) == 20

    def test_moves_sorted_by_policy_index(self, playout_corpus):
        for s in playout_corpus[:50]:
            idx = [move_index(m) for m in s.legal_moves]
            assert idx == sorted(idx)
            assert len(set(idx)) == len(idx)

    def test_kings_never_adjacent(self):
        s = parse_fen("8/8/8/8/8/5k2/8/6K1 b - - 0 1")
        moves = s.legal_moves
        assert len(moves) <= 8
        wk = s.placement.index(6)
        for m in moves:
            df = abs((m.to_sq & 7) - (wk & 7))
            dr = abs((m.to_sq >> 3) - (wk >> 3))
            assert max(df, dr) > 1, f"{m.uci()} lands next to the white king"

    def test_stalemate_has_no_moves(self):
        s = parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1")
        assert s.legal_moves == ()

    def test_king_never_left_in_check(self):
        for s in random_playout_positions(80, seed=3):
            sign = 1 if s.stm == WHITE else -1
            for m in s.legal_moves:
                after = apply_move(s, m)
                king_sq = after.placement.index(6 * sign)
                assert not is_attacked(after.placement, king_sq, after.stm == WHITE)


class TestApplyMove:
    def test_double_push_sets_en_passant(self):
        s = apply_move(initial_position(), Move.from_uci("e2e4"))
        assert s.stm == BLACK
        assert square_name(s.ep) == "e3"
        assert s.halfmove == 0  # pawn move resets the clock

    def test_kingside_castle(self):
        s = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1")
        after = apply_move(s, Move.from_uci("e1g1"))
        assert after.placement[parse_square("g1")] == 6
        assert after.placement[parse_square("f1")] == 4
        assert not after.castling & (CASTLE_WK | CASTLE_WQ)
        assert after.castling & (CASTLE_BK | CASTLE_BQ)

    def test_capture_promotion(self):
        s = parse_fen("rn2k3/1P6/8/8/8/8/8/4K3 w - - 0 1")
        after = apply_move(s, Move.from_uci("b7a8q"))
        assert after.placement[parse_square("a8")] == QUEEN
        assert after.placement[parse_square("b7")] == 0

    def test_en_passant_capture_removes_pawn(self):
        s = parse_fen("8/8/8/3pP3/8/8/8/K6k w - d6 0 1")
        after = apply_move(s, Move.from_uci("e5d6"))
        assert after.placement[parse_square("d6")] == 1
        assert after.placement[parse_square("d5")] == 0

    def test_illegal_move_rejected(self):
        s = initial_position()
        with pytest.raises(IllegalMoveError):
            apply_move(s, Move.from_uci("e2e5"))

    def test_original_state_unmodified(self):
        s = initial_position()
        fen = emit_fen(s)
        apply_move(s, Move.from_uci("e2e4"))
        assert emit_fen(s) == fen

    def test_state_immutable(self):
        s = initial_position()
        with pytest.raises(AttributeError):
            s.stm = BLACK


class TestOutcomes:
    def test_fools_mate_by_replay(self):
        s = initial_position()
        for uci in ("f2f3", "e7e5", "g2g4", "d8h4"):
            s = apply_move(s, Move.from_uci(uci))
        assert emit_fen(s) == "rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3"
        out = game_outcome(s)
        assert out == GameOutcome(OutcomeKind.BLACK_WIN, OutcomeReason.CHECKMATE)

    def test_kings_only_insufficient(self):
        out = game_outcome(parse_fen("8/8/8/8/8/8/8/K6k w - - 0 1"))
        assert out == GameOutcome(OutcomeKind.DRAW, OutcomeReason.INSUFFICIENT_MATERIAL)

    def test_king_and_minor_insufficient(self):
        for fen in ("8/8/8/8/8/2B5/8/K6k w - - 0 1", "8/8/8/8/8/2n5/8/K6k w - - 0 1"):
            assert game_outcome(parse_fen(fen)).reason is OutcomeReason.INSUFFICIENT_MATERIAL

    def test_same_color_bishops_insufficient(self):
        # c3 and f6 are both dark squares.
        out = game_outcome(parse_fen("8/8/5b2/8/8/2B5/8/K6k w - - 0 1"))
        assert out.reason is OutcomeReason.INSUFFICIENT_MATERIAL

    def test_opposite_color_bishops_not_insufficient(self):
        out = game_outcome(parse_fen("8/8/4b3/8/8/2B5/8/K6k w - - 0 1"))
        assert out.ongoing

    def test_fifty_move_rule(self):
        out = game_outcome(parse_fen("8/8/8/8/8/2R5/8/K6k b - - 100 80"))
        assert out == GameOutcome(OutcomeKind.DRAW, OutcomeReason.FIFTY_MOVE)
        assert game_outcome(parse_fen("8/8/8/8/8/2R5/8/K6k b - - 99 80")).ongoing

    def test_checkmate_beats_fifty_move_clock(self):
        s = parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 100 60")
        assert game_outcome(s).reason is OutcomeReason.CHECKMATE

    def test_threefold_repetition(self):
        s = initial_position()
        for uci in ("g1f3", "g8f6", "f3g1", "f6g8", "g1f3", "g8f6", "f3g1", "f6g8"):
            assert game_outcome(s).ongoing
            s = apply_move(s, Move.from_uci(uci))
        assert game_outcome(s) == GameOutcome(OutcomeKind.DRAW, OutcomeReason.THREEFOLD)

    def test_stalemate(self):
        out = game_outcome(parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1"))
        assert out == GameOutcome(OutcomeKind.DRAW, OutcomeReason.STALEMATE)

    def test_ongoing_iff_moves_and_no_draw(self, playout_corpus):
        for s in playout_corpus[:60]:
            out = game_outcome(s)
            if out.ongoing:
                assert s.legal_moves
                assert out.reason is None
            else:
                assert out.reason is not None


class TestPerft:
    def test_depth_zero_is_one(self):
        assert perft(parse_fen(KIWIPETE), 0) == 1

    @pytest.mark.parametrize("depth,count", [(1, 20), (2, 400), (3, 8902)])
    def test_initial(self, depth, count):
        assert perft(initial_position(), depth) == count

    @pytest.mark.parametrize("depth,count", [(1, 48), (2, 2039)])
    def test_kiwipete(self, depth, count):
        assert perft(parse_fen(KIWIPETE), depth) == count

    def test_en_passant_pin_position(self):
        # Standard suite position 3: discovered checks and en-passant pins.
        s = parse_fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1")
        assert [perft(s, d) for d in (1, 2, 3)] == [14, 191, 2812]


class TestMirror:
    def test_mirror_is_involution(self, playout_corpus):
        for s in playout_corpus[:30]:
            back = mirror(mirror(s))
            assert back == s

    def test_mirror_swaps_legal_move_count(self, playout_corpus):
        for s in playout_corpus[:30]:
            assert len(mirror(s).legal_moves) == len(s.legal_moves)
