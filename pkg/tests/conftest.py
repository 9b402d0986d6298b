"""Shared fixtures and helpers for the test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

from pepper.board import apply_move, game_outcome, initial_position

TESTS_DIR = Path(__file__).parent
GOLDEN_DIR = TESTS_DIR / "golden"
FAKE_ENGINE = TESTS_DIR / "fake_engine.py"


def fake_engine_cmd(*flags: str) -> str:
    """Shell command string that launches the scripted UCI engine."""
    return " ".join([sys.executable, str(FAKE_ENGINE), *flags])


def random_playout_positions(n_positions: int, seed: int = 0, max_plies: int = 60):
    """Positions sampled from uniformly random legal playouts."""
    rng = np.random.default_rng(seed)
    positions = []
    while len(positions) < n_positions:
        state = initial_position()
        for _ in range(max_plies):
            if not game_outcome(state).ongoing:
                break
            state = apply_move(state, state.legal_moves[int(rng.integers(len(state.legal_moves)))])
            positions.append(state)
            if len(positions) >= n_positions:
                break
    return positions


@pytest.fixture(scope="session")
def playout_corpus():
    """200 random-playout positions shared across invariant tests."""
    return random_playout_positions(200, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
