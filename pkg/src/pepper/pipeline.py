"""Self-play training pipeline: game generation with oracle-adjudicated
early resignation, network training on (state, policy, value) triplets,
improvement gating, and pretraining from PGN corpora.

Game values are backfilled white-centric (+1 white win, -1 black win, 0
draw, tanh-scaled centipawns on resignation) and stored per-triplet from
the perspective of the side to move at that triplet.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import multiprocessing
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .board import (
    BLACK, WHITE, BoardState, GameOutcome, Move, OutcomeKind, OutcomeReason,
    apply_move, game_outcome, initial_position,
)
from .features import POLICY_SIZE, extract_features, legal_move_indices
from .net import AdamState, NetworkParams, adam_step, backward, forward, loss, save_weights
from .oracle import OracleConfig, connect, normalize_cp
from .search import SearchConfig, advance_root, run_mcts

log = logging.getLogger(__name__)


class TrainingAborted(RuntimeError):
    """A training epoch hit a non-finite loss and was rolled back."""


@dataclass
class TrainingTriplet:
    features: np.ndarray             # 353 floats
    target_policy: Dict[int, float]  # sparse distribution over move indices
    z: float                         # outcome value, side-to-move perspective
    legal_indices: Tuple[int, ...]   # set bits of the position's legal mask


@dataclass
class GameRecord:
    triplets: List[TrainingTriplet]
    outcome: GameOutcome
    termination_ply: int
    adjudicated: bool
    adjudication_cp: Optional[int]
    moves: List[Move] = field(default_factory=list)


@dataclass
class GenerationConfig:
    adjudication_start_k: int = 80     # half-moves before the oracle may end games
    resign_threshold_cp: int = 600
    max_game_plies: int = 512          # capped games score as draws
    games_per_epoch: int = 10
    mini_batch_size: int = 32
    search: SearchConfig = field(default_factory=SearchConfig)
    rng_seed: int = 0


@dataclass
class GateResult:
    games: int
    new_wins: int
    old_wins: int
    draws: int
    accepted: bool


@dataclass
class MatchResult:
    games: int
    a_wins: int
    b_wins: int
    draws: int

    @property
    def a_score(self) -> float:
        return (self.a_wins + 0.5 * self.draws) / self.games if self.games else 0.0


@dataclass
class EpochStats:
    mean_total: float
    mean_mse: float
    mean_ce: float
    final_total: float
    batches: int


def _argmax_search(cfg: SearchConfig) -> SearchConfig:
    """Gate/eval games pick the max-visit move from ply 1 (noise kept)."""
    return dataclasses.replace(cfg, opening_plies=0)


def _white_value(outcome: GameOutcome, adjudication_cp: Optional[int]) -> float:
    if outcome.kind is OutcomeKind.WHITE_WIN:
        return 1.0
    if outcome.kind is OutcomeKind.BLACK_WIN:
        return -1.0
    if outcome.kind in (OutcomeKind.WHITE_RESIGNED, OutcomeKind.BLACK_RESIGNED):
        return normalize_cp(adjudication_cp)
    return 0.0


def _play_game(white_params, black_params, gen_cfg: GenerationConfig, oracle,
               rng: np.random.Generator, record_triplets: bool,
               search_cfg: Optional[SearchConfig] = None,
               adjudicate: bool = True):
    """Run one game. `None` params denote a uniform-random legal mover.

    Returns (pending, outcome, adjudication_cp, moves) where pending holds
    (features, policy, stm, legal_indices) tuples awaiting value backfill.
    """
    cfg = search_cfg if search_cfg is not None else gen_cfg.search
    state = initial_position()
    shared_tree = white_params is black_params
    trees = {WHITE: None, BLACK: None}
    pending = []
    moves: List[Move] = []
    adjudication_cp = None

    while True:
        outcome = game_outcome(state)
        if not outcome.ongoing:
            break
        if len(moves) >= gen_cfg.max_game_plies:
            outcome = GameOutcome(OutcomeKind.DRAW, OutcomeReason.ADJUDICATED)
            break
        side = state.stm
        params = white_params if side == WHITE else black_params
        if params is None:
            move = state.legal_moves[int(rng.integers(len(state.legal_moves)))]
        else:
            tree_key = WHITE if shared_tree else side
            result, tree = run_mcts(state, params, cfg, trees[tree_key], rng)
            trees[tree_key] = tree
            if record_triplets:
                pending.append((extract_features(state), dict(result.policy),
                                side, legal_move_indices(state)))
            move = result.chosen_move
        state = apply_move(state, move)
        moves.append(move)
        for key in (WHITE,) if shared_tree else (WHITE, BLACK):
            if trees[key] is not None:
                trees[key] = advance_root(trees[key], move)
        if adjudicate and len(moves) >= gen_cfg.adjudication_start_k and game_outcome(state).ongoing:
            cp = oracle.evaluate(state).clamped_cp()
            if abs(cp) >= gen_cfg.resign_threshold_cp:
                adjudication_cp = cp
                kind = OutcomeKind.BLACK_RESIGNED if cp > 0 else OutcomeKind.WHITE_RESIGNED
                outcome = GameOutcome(kind, OutcomeReason.ADJUDICATED)
                break

    return pending, outcome, adjudication_cp, moves


def generate_game(params: NetworkParams, gen_cfg: GenerationConfig, oracle,
                  rng: Optional[np.random.Generator] = None) -> GameRecord:
    """One self-play game with subtree reuse; triplets carry backfilled values."""
    if rng is None:
        rng = np.random.default_rng(gen_cfg.rng_seed)
    pending, outcome, cp, moves = _play_game(params, params, gen_cfg, oracle, rng,
                                             record_triplets=True)
    z_white = _white_value(outcome, cp)
    triplets = [
        TrainingTriplet(feats, {i: p for i, p in policy.items() if p > 0.0},
                        z_white if stm == WHITE else -z_white, legal)
        for feats, policy, stm, legal in pending
    ]
    adjudicated = outcome.reason is OutcomeReason.ADJUDICATED and cp is not None
    return GameRecord(triplets, outcome, len(moves), adjudicated, cp, moves)


# ---------------------------------------------------------------------------
# Parallel game drivers. Workers inherit shared state by fork; on platforms
# without fork the drivers fall back to serial execution.

_SHARED: dict = {}


def _worker_oracle():
    handle = _SHARED.get("oracle_handle")
    if handle is None:
        handle = connect(_SHARED["oracle_cfg"])
        _SHARED["oracle_handle"] = handle
    return handle


def _generate_one(game_idx: int) -> GameRecord:
    rng = np.random.default_rng(list(_SHARED["entropy"]) + [game_idx])
    return generate_game(_SHARED["params"], _SHARED["gen_cfg"], _worker_oracle(), rng)


def _match_one(game_idx: int) -> int:
    """Play one match game; returns 0 a-wins, 1 b-wins, 2 draw."""
    a, b = _SHARED["params_a"], _SHARED["params_b"]
    gen_cfg = _SHARED["gen_cfg"]
    white, black = (a, b) if game_idx % 2 == 0 else (b, a)
    rng = np.random.default_rng(list(_SHARED["entropy"]) + [game_idx])
    _, outcome, _, _ = _play_game(
        white, black, gen_cfg, _worker_oracle(), rng, record_triplets=False,
        search_cfg=_argmax_search(gen_cfg.search), adjudicate=_SHARED["adjudicate"])
    if outcome.kind in (OutcomeKind.WHITE_WIN, OutcomeKind.BLACK_RESIGNED):
        winner_white = True
    elif outcome.kind in (OutcomeKind.BLACK_WIN, OutcomeKind.WHITE_RESIGNED):
        winner_white = False
    else:
        return 2
    a_is_white = game_idx % 2 == 0
    return 0 if winner_white == a_is_white else 1


def _run_indexed(fn, n: int, workers: int) -> list:
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return [fn(i) for i in range(n)]
    with ctx.Pool(min(workers, n)) as pool:
        return pool.map(fn, range(n))


def generate_games(params: NetworkParams, gen_cfg: GenerationConfig,
                   oracle_cfg: OracleConfig, n_games: int,
                   entropy: Sequence[int], workers: int = 1) -> List[GameRecord]:
    """n self-play games with per-game seeds derived from `entropy`."""
    _SHARED.clear()
    _SHARED.update(params=params, gen_cfg=gen_cfg, oracle_cfg=oracle_cfg,
                   entropy=tuple(entropy))
    try:
        return _run_indexed(_generate_one, n_games, workers)
    finally:
        _teardown_shared()


def play_match(params_a, params_b, n_games: int, gen_cfg: GenerationConfig,
               oracle_cfg: OracleConfig, entropy: Sequence[int],
               workers: int = 1, adjudicate: bool = True) -> MatchResult:
    """Paired games with alternating colors; `None` params = random mover."""
    _SHARED.clear()
    _SHARED.update(params_a=params_a, params_b=params_b, gen_cfg=gen_cfg,
                   oracle_cfg=oracle_cfg, entropy=tuple(entropy),
                   adjudicate=adjudicate)
    try:
        results = _run_indexed(_match_one, n_games, workers)
    finally:
        _teardown_shared()
    return MatchResult(n_games, results.count(0), results.count(1), results.count(2))


def _teardown_shared():
    handle = _SHARED.pop("oracle_handle", None)
    if handle is not None:
        handle.close()
    _SHARED.clear()


def gate(new_params: NetworkParams, old_params: NetworkParams, n_games: int,
         gen_cfg: GenerationConfig, oracle_cfg: OracleConfig,
         entropy: Sequence[int] = (0,), workers: int = 1) -> GateResult:
    """Candidate-vs-incumbent match; accepted only on a strict win majority."""
    if n_games < 2 or n_games % 2:
        raise ValueError("gate needs an even number of games >= 2")
    m = play_match(new_params, old_params, n_games, gen_cfg, oracle_cfg,
                   entropy, workers, adjudicate=True)
    decisive = m.a_wins + m.b_wins
    accepted = decisive > 0 and m.a_wins / decisive > 0.5
    return GateResult(n_games, m.a_wins, m.b_wins, m.draws, accepted)


# ---------------------------------------------------------------------------
# Training

def _batch_arrays(triplets: Sequence[TrainingTriplet]):
    X = np.stack([t.features for t in triplets])
    n = len(triplets)
    pi = np.zeros((n, POLICY_SIZE))
    mask = np.zeros((n, POLICY_SIZE), dtype=bool)
    z = np.empty(n)
    for row, t in enumerate(triplets):
        mask[row, list(t.legal_indices)] = True
        for idx, p in t.target_policy.items():
            pi[row, idx] = p
        z[row] = t.z
    return X, pi, z, mask


def train_epoch(buffer: Sequence[TrainingTriplet], params: NetworkParams,
                adam: AdamState, gen_cfg: GenerationConfig,
                rng: np.random.Generator, lam: float = 1e-4) -> EpochStats:
    """One shuffled pass of mini-batch Adam steps over the buffer.

    A non-finite loss aborts the epoch and rolls parameters and optimizer
    state back to their values at epoch start.
    """
    if not buffer:
        raise ValueError("training buffer is empty")
    start_params = params.copy()
    start_adam = adam.copy()
    order = rng.permutation(len(buffer))
    batch_size = gen_cfg.mini_batch_size
    totals, mses, ces = [], [], []
    final = 0.0
    for lo in range(0, len(order), batch_size):
        batch = [buffer[i] for i in order[lo:lo + batch_size]]
        X, pi, z, mask = _batch_arrays(batch)
        _, trace = forward(params, X, mask)
        lb = loss(trace, pi, z, lam, params)
        if not np.isfinite(lb.total):
            params.layers.update(start_params.layers)
            adam.m, adam.v, adam.t = start_adam.m, start_adam.v, start_adam.t
            raise TrainingAborted(f"non-finite loss at batch {len(totals)}")
        grads = backward(trace, pi, z, lam, params)
        adam_step(params, grads, adam)
        totals.append(lb.total)
        mses.append(lb.value_mse)
        ces.append(lb.policy_ce)
        final = lb.total
    return EpochStats(float(np.mean(totals)), float(np.mean(mses)),
                      float(np.mean(ces)), final, len(totals))


# ---------------------------------------------------------------------------
# Pretraining

def pretrain_label(state: BoardState, oracle):
    """Oracle-derived labels: softmax over child evaluations (in pawns,
    mover's perspective) and a tanh-scaled value for the position itself."""
    legal = state.legal_moves
    if not legal:
        raise ValueError("cannot label a position with no legal moves")
    indices = legal_move_indices(state)
    cps = np.empty(len(legal))
    for j, m in enumerate(legal):
        child = apply_move(state, m)
        child_outcome = game_outcome(child)
        if child_outcome.ongoing:
            cp = oracle.evaluate(child).clamped_cp()
        elif child_outcome.kind is OutcomeKind.WHITE_WIN:
            cp = 10_000
        elif child_outcome.kind is OutcomeKind.BLACK_WIN:
            cp = -10_000
        else:
            cp = 0
        cps[j] = cp
    if state.stm == BLACK:
        cps = -cps
    pawns = cps / 100.0
    e = np.exp(pawns - pawns.max())
    probs = e / e.sum()
    policy = {idx: float(p) for idx, p in zip(indices, probs)}
    cp_here = oracle.evaluate(state).clamped_cp()
    value = normalize_cp(cp_here if state.stm == WHITE else -cp_here)
    return policy, value


def positions_from_pgn(paths: Sequence) -> List[BoardState]:
    """All ongoing positions from the given PGN files, deduplicated."""
    from .pgn import parse_pgn

    seen = set()
    out = []
    for path in paths:
        text = Path(path).read_text()
        for game in parse_pgn(text):
            for state in game.states:
                if state.key in seen:
                    continue
                seen.add(state.key)
                if state.legal_moves and game_outcome(state).ongoing:
                    out.append(state)
    return out


def pretrain(pgn_paths: Sequence, params: NetworkParams, oracle,
             gen_cfg: GenerationConfig, epochs: int = 1, lam: float = 1e-4,
             seed: int = 0, lr: float = 1e-3, max_positions: Optional[int] = None):
    """Label corpus positions with the oracle and fit the network on them.

    Returns (params, metrics rows). Positions whose labeling fails are
    skipped with a warning.
    """
    positions = positions_from_pgn(pgn_paths)
    if max_positions is not None:
        positions = positions[:max_positions]
    if not positions:
        raise ValueError("pretraining corpus contains no usable positions")

    triplets = []
    for state in positions:
        try:
            policy, value = pretrain_label(state, oracle)
        except Exception as exc:  # oracle failure: skip the position
            log.warning("skipping position %r: %s", state, exc)
            continue
        triplets.append(TrainingTriplet(extract_features(state), policy, value,
                                        legal_move_indices(state)))
    if not triplets:
        raise ValueError("no positions could be labeled")

    adam = AdamState.for_params(params, lr=lr)
    metrics = []
    for epoch in range(epochs):
        rng = np.random.default_rng([seed, epoch])
        stats = train_epoch(triplets, params, adam, gen_cfg, rng, lam)
        metrics.append({"epoch": epoch + 1, "positions": len(triplets),
                        "mean_J": stats.mean_total, "value_mse": stats.mean_mse,
                        "policy_ce": stats.mean_ce})
        log.info("pretrain epoch %d: J=%.4f mse=%.4f ce=%.4f",
                 epoch + 1, stats.mean_total, stats.mean_mse, stats.mean_ce)
    return params, metrics


# ---------------------------------------------------------------------------
# Full loop

METRICS_COLUMNS = ["iter", "games", "mean_J", "mse", "ce", "gate_new_wins",
                   "gate_old_wins", "gate_draws", "accepted", "mean_game_plies"]


def run_training(iterations: int, params: NetworkParams, gen_cfg: GenerationConfig,
                 oracle_cfg: OracleConfig, out_dir, gate_games: int = 10,
                 seed: int = 0, workers: int = 1, lam: float = 1e-4,
                 lr: float = 1e-3, epochs_per_iteration: int = 1,
                 retain_buffer: bool = False, start_iteration: int = 1,
                 export_pgn: bool = False) -> List[dict]:
    """Iterate generate -> train -> gate, checkpointing each iteration.

    Rejected candidates keep the incumbent parameters but their generated
    data is retained for the next iteration's buffer.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.csv"
    rows = []
    retained: List[TrainingTriplet] = []

    for it in range(start_iteration, start_iteration + iterations):
        records = generate_games(params, gen_cfg, oracle_cfg,
                                 gen_cfg.games_per_epoch, (seed, it, 0), workers)
        buffer = retained + [t for r in records for t in r.triplets]
        mean_plies = float(np.mean([r.termination_ply for r in records])) if records else 0.0
        if export_pgn:
            _export_records(records, out / f"iter_{it}_games.pgn")

        candidate = params.copy()
        adam = AdamState.for_params(candidate, lr=lr)
        try:
            stats = None
            for epoch in range(epochs_per_iteration):
                rng = np.random.default_rng([seed, it, 1, epoch])
                stats = train_epoch(buffer, candidate, adam, gen_cfg, rng, lam)
        except TrainingAborted as exc:
            log.warning("iteration %d aborted: %s", it, exc)
            save_weights(params, out / f"iter_{it}.weights")
            continue

        gres = gate(candidate, params, gate_games, gen_cfg, oracle_cfg,
                    (seed, it, 2), workers)
        if gres.accepted:
            params = candidate
            retained = buffer if retain_buffer else []
        else:
            retained = buffer  # rejected iterations keep their data in the buffer
        save_weights(params, out / f"iter_{it}.weights")

        row = {"iter": it, "games": len(records), "mean_J": f"{stats.mean_total:.6f}",
               "mse": f"{stats.mean_mse:.6f}", "ce": f"{stats.mean_ce:.6f}",
               "gate_new_wins": gres.new_wins, "gate_old_wins": gres.old_wins,
               "gate_draws": gres.draws, "accepted": int(gres.accepted),
               "mean_game_plies": f"{mean_plies:.1f}"}
        rows.append(row)
        _append_metrics(metrics_path, row)
        log.info("iteration %d: J=%s gate %d-%d-%d accepted=%s", it, row["mean_J"],
                 gres.new_wins, gres.old_wins, gres.draws, gres.accepted)
    return rows


def _append_metrics(path: Path, row: dict) -> None:
    new_file = not path.exists()
    with open(path, "a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRICS_COLUMNS)
        if new_file:
            writer.writeheader()
        writer.writerow(row)


def _export_records(records: Sequence[GameRecord], path: Path) -> None:
    from .pgn import outcome_to_result, write_pgn

    chunks = []
    for i, r in enumerate(records):
        result = outcome_to_result(r.outcome)
        tags = {"Event": "self-play", "Round": str(i + 1), "Result": result,
                "Termination": r.outcome.reason.value if r.outcome.reason else "normal"}
        chunks.append(write_pgn(r.moves, result, tags))
    path.write_text("\n".join(chunks))


def latest_checkpoint(out_dir) -> Optional[Tuple[int, Path]]:
    """(iteration, path) of the newest iter_<n>.weights under out_dir."""
    out = Path(out_dir)
    best = None
    if out.is_dir():
        for p in out.glob("iter_*.weights"):
            stem = p.stem.split("_")[-1]
            if stem.isdigit():
                n = int(stem)
                if best is None or n > best[0]:
                    best = (n, p)
    return best
