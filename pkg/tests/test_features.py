"""Feature-vector and move-index tests."""

import json

import numpy as np
import pytest

from pepper.board import BLACK, Move, initial_position, mirror, parse_fen
from pepper.features import (
    N_FEATURES, N_GLOBAL, N_PIECE_CENTRIC, N_SQUARE_CENTRIC, POLICY_SIZE,
    decode_move, encode_move, extract_features, legal_mask, legal_move_indices,
)

from conftest import GOLDEN_DIR


class TestLayout:
    def test_dimensions(self):
        assert N_FEATURES == 353
        assert N_GLOBAL == 17
        assert N_PIECE_CENTRIC == 208
        assert N_SQUARE_CENTRIC == 128
        assert N_GLOBAL + N_PIECE_CENTRIC + N_SQUARE_CENTRIC == 353
        assert POLICY_SIZE == 5120

    def test_initial_matches_golden(self):
        golden = np.array(json.loads((GOLDEN_DIR / "initial_features.json").read_text()))
        got = extract_features(initial_position())
        np.testing.assert_array_equal(got, golden)

    def test_initial_globals(self):
        v = extract_features(initial_position())
        assert v[0] == 1.0
        assert list(v[1:5]) == [1.0, 1.0, 1.0, 1.0]
        assert list(v[5:17]) == [1.0] * 12  # full starting material

    def test_initial_rook_mobility_zero(self):
        v = extract_features(initial_position())
        assert not v[177:225].any()

    def test_black_to_move_flag(self):
        s = parse_fen("8/8/8/8/8/8/8/K6k b - - 0 1")
        assert extract_features(s)[0] == 0.0


class TestQueenExample:
    """Lone black queen on d5, kings a1/h1, White to move."""

    FEN = "8/8/8/3q4/8/8/8/K6k w - - 0 1"

    def test_record_slots(self):
        v = extract_features(parse_fen(self.FEN))
        # Black queen record sits at the second black roster slot (97 + 5).
        record = v[102:107]
        assert record[0] == 1.0
        assert record[1] == pytest.approx(3 / 7)
        assert record[2] == pytest.approx(4 / 7)
        assert record[3] == 0.0  # no white piece attacks d5
        assert record[4] == 0.0  # no black piece defends it

    def test_mobility_rays(self):
        v = extract_features(parse_fen(self.FEN))
        # Black queen mobility slots, direction order N,NE,E,SE,S,SW,W,NW.
        rays = v[201:209] * 7
        assert list(np.round(rays).astype(int)) == [3, 3, 4, 3, 4, 3, 3, 3]
        # 26 reachable squares: an open-board queen's 27 minus h1 (own king).
        assert rays.sum() == pytest.approx(26)

    def test_white_queen_slots_empty(self):
        v = extract_features(parse_fen(self.FEN))
        assert not v[22:27].any()   # white queen record absent
        assert not v[177:185].any()  # white queen mobility absent


class TestMoveIndex:
    def test_e2e4(self):
        assert encode_move(Move.from_uci("e2e4")) == 796

    def test_white_queen_promotion(self):
        # e7e8=Q: 4096 + side 0 + file 4*64 + (dfile+1)*16 + code 3.
        assert encode_move(Move.from_uci("e7e8q")) == 4371

    def test_black_promotion_block(self):
        idx = encode_move(Move.from_uci("e2e1q"))
        assert idx == 4096 + 512 + 4 * 64 + 16 + 3

    def test_promotion_dfile_out_of_range(self):
        with pytest.raises(ValueError):
            encode_move(Move.from_uci("e7g8q"))

    def test_decode_initial(self):
        assert decode_move(796, initial_position()) == Move.from_uci("e2e4")

    def test_decode_promotion(self):
        s = parse_fen("8/4P3/8/8/8/8/8/K6k w - - 0 1")
        assert decode_move(4371, s) == Move.from_uci("e7e8q")

    def test_decode_illegal_index(self):
        s = parse_fen("8/4P3/8/8/8/8/8/K6k w - - 0 1")
        with pytest.raises(ValueError):
            decode_move(796, s)  # no piece on e2 here


class TestLegalMask:
    def test_initial_popcount(self):
        mask = legal_mask(initial_position())
        assert mask.sum() == 20

    def test_stalemate_empty(self):
        mask = legal_mask(parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1"))
        assert mask.sum() == 0

    def test_promotion_indices_present(self):
        s = parse_fen("3r1r2/4P3/8/8/8/8/8/K6k w - - 0 1")
        mask = legal_mask(s)
        base = 4096 + 4 * 64
        for dfile in (-1, 0, 1):  # captures d8/f8 plus the push
            for code in range(4):
                assert mask[base + (dfile + 1) * 16 + code]


class TestInvariants:
    def test_mask_matches_moves_and_roundtrip(self, playout_corpus):
        for s in playout_corpus:
            mask = legal_mask(s)
            moves = s.legal_moves
            assert mask.sum() == len(moves)
            for m in moves:
                idx = encode_move(m)
                assert mask[idx]
                assert decode_move(idx, s) == m

    def test_values_in_unit_interval(self, playout_corpus):
        for s in playout_corpus:
            v = extract_features(s)
            assert v.shape == (353,)
            assert (v >= 0.0).all() and (v <= 1.0).all()

    def test_extraction_is_pure(self, playout_corpus):
        for s in playout_corpus[:40]:
            a = extract_features(s)
            b = extract_features(s)
            assert np.array_equal(a, b)

    def test_mirror_swaps_count_halves(self, playout_corpus):
        for s in playout_corpus[:60]:
            v = extract_features(s)
            w = extract_features(mirror(s))
            np.testing.assert_array_equal(w[5:11], v[11:17])
            np.testing.assert_array_equal(w[11:17], v[5:11])
            assert w[0] == 1.0 - v[0]

    def test_legal_move_indices_sorted(self, playout_corpus):
        for s in playout_corpus[:40]:
            idx = legal_move_indices(s)
            assert list(idx) == sorted(idx)
