"""Operator entry points: pretrain, train, eval, gate, perft, uci.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .board import FenError, Move, apply_move, game_outcome, initial_position, parse_fen, perft
from .config import ConfigError, apply_overrides, load_config
from .net import WeightsFormatError, init_params, load_weights, save_weights
from .oracle import OracleError, connect
from .pipeline import (
    gate as run_gate, latest_checkpoint, play_match, pretrain, run_training,
)
from .search import SearchNode, run_mcts

log = logging.getLogger("pepper")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepper", description=__doc__)
    parser.add_argument("--config", type=Path, help="INI config file")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    parser.add_argument("--workers", type=int, help="worker processes for game play")
    parser.add_argument("--engine", help="UCI engine binary for the oracle")
    parser.add_argument("--sims", type=int, help="MCTS simulations per move")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="fit the network on oracle-labeled PGN positions")
    p.add_argument("--pgn", nargs="+", required=True, type=Path, help="PGN corpus files")
    p.add_argument("--out", required=True, type=Path, help="output weights file")
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--max-positions", type=int, help="cap the number of corpus positions")

    p = sub.add_parser("train", help="run the self-play training loop")
    p.add_argument("--out-dir", required=True, type=Path, help="checkpoint directory")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--weights", type=Path, help="starting weights (default: fresh init)")
    p.add_argument("--fresh", action="store_true", help="ignore existing checkpoints")
    p.add_argument("--resume", action="store_true", help="require resuming from a checkpoint")

    p = sub.add_parser("eval", help="match two weight files (or 'random')")
    p.add_argument("weights_a", help="weights file, or 'random'")
    p.add_argument("weights_b", help="weights file, or 'random'")
    p.add_argument("--games", type=int, default=25)
    p.add_argument("--out", type=Path, help="also write W/D/L as CSV")

    p = sub.add_parser("gate", help="candidate-vs-incumbent acceptance match")
    p.add_argument("new_weights", type=Path)
    p.add_argument("old_weights", type=Path)
    p.add_argument("--games", type=int, default=10)

    p = sub.add_parser("perft", help="move-generator node count")
    p.add_argument("fen", help="position FEN, or 'startpos'")
    p.add_argument("depth", type=int)

    p = sub.add_parser("uci", help="serve the engine over UCI on stdio")
    p.add_argument("--weights", type=Path, help="weights file (default: fresh init)")
    return parser


def _load_or_init(path, cfg):
    if path is None:
        return init_params(cfg.net.architecture, cfg.net.init_seed)
    return load_weights(path, expect_arch=cfg.net.architecture)


def cmd_pretrain(args, cfg) -> int:
    for path in args.pgn:
        if not path.exists():
            print(f"error: corpus not found: {path}", file=sys.stderr)
            return EXIT_USAGE
    params = init_params(cfg.net.architecture, cfg.net.init_seed)
    oracle = connect(cfg.oracle)
    try:
        params, metrics = pretrain(
            args.pgn, params, oracle, cfg.generation_config(),
            epochs=args.epochs, lam=cfg.net.l2_lambda, seed=cfg.seed,
            lr=cfg.net.learning_rate, max_positions=args.max_positions)
    finally:
        oracle.close()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_weights(params, args.out)
    metrics_path = args.out.parent / "metrics.csv"
    with open(metrics_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(metrics[0]))
        writer.writeheader()
        writer.writerows(metrics)
    print(f"wrote {args.out} and {metrics_path} ({metrics[-1]['positions']} positions, "
          f"final J={metrics[-1]['mean_J']:.4f})")
    return EXIT_OK


def cmd_train(args, cfg) -> int:
    if args.fresh and args.resume:
        print("error: --fresh and --resume conflict", file=sys.stderr)
        return EXIT_USAGE
    start_iteration = 1
    checkpoint = latest_checkpoint(args.out_dir)
    if args.resume and checkpoint is None:
        print(f"error: --resume given but no checkpoint under {args.out_dir}", file=sys.stderr)
        return EXIT_USAGE
    if checkpoint is not None and not args.fresh:
        n, path = checkpoint
        params = load_weights(path, expect_arch=cfg.net.architecture)
        start_iteration = n + 1
        print(f"resuming from {path} (iteration {n})")
    else:
        params = _load_or_init(args.weights, cfg)
    rows = run_training(
        args.iterations, params, cfg.generation_config(), cfg.oracle,
        args.out_dir, gate_games=cfg.pipeline.gate_games, seed=cfg.seed,
        workers=cfg.workers, lam=cfg.net.l2_lambda, lr=cfg.net.learning_rate,
        epochs_per_iteration=cfg.pipeline.epochs,
        retain_buffer=cfg.pipeline.retain_buffer,
        start_iteration=start_iteration, export_pgn=cfg.pipeline.export_pgn)
    for row in rows:
        print(f"iter {row['iter']}: J={row['mean_J']} "
              f"gate {row['gate_new_wins']}-{row['gate_old_wins']}-{row['gate_draws']} "
              f"accepted={row['accepted']}")
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    if args.games < 1:
        print("error: --games must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    params_a = None if args.weights_a == "random" else load_weights(
        Path(args.weights_a), expect_arch=cfg.net.architecture)
    params_b = None if args.weights_b == "random" else load_weights(
        Path(args.weights_b), expect_arch=cfg.net.architecture)
    result = play_match(params_a, params_b, args.games, cfg.generation_config(),
                        cfg.oracle, (cfg.seed, 100), workers=cfg.workers,
                        adjudicate=cfg.pipeline.eval_adjudicate)
    win_rate = result.a_score
    print(f"A wins {result.a_wins}, B wins {result.b_wins}, draws {result.draws} "
          f"of {result.games}; A score {win_rate:.3f}")
    if args.out:
        with open(args.out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["a_wins", "b_wins", "draws", "games", "a_score"])
            writer.writerow([result.a_wins, result.b_wins, result.draws,
                             result.games, f"{win_rate:.4f}"])
    return EXIT_OK


def cmd_gate(args, cfg) -> int:
    new_params = load_weights(args.new_weights, expect_arch=cfg.net.architecture)
    old_params = load_weights(args.old_weights, expect_arch=cfg.net.architecture)
    result = run_gate(new_params, old_params, args.games, cfg.generation_config(),
                      cfg.oracle, (cfg.seed, 200), workers=cfg.workers)
    print(f"new {result.new_wins}, old {result.old_wins}, draws {result.draws}: "
          f"{'accepted' if result.accepted else 'rejected'}")
    return EXIT_OK


def cmd_perft(args, cfg) -> int:
    fen = initial_position() if args.fen == "startpos" else parse_fen(args.fen)
    if args.depth < 0:
        print("error: depth must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    nodes = perft(fen, args.depth)
    dt = time.perf_counter() - t0
    rate = nodes / dt if dt > 0 else float("inf")
    print(f"perft({args.depth}) = {nodes}  ({dt:.3f}s, {rate:,.0f} nodes/s)")
    return EXIT_OK


def cmd_uci(args, cfg) -> int:
    params = _load_or_init(args.weights, cfg)
    state = initial_position()
    tree = None
    rng = np.random.default_rng(cfg.seed)

    def send(line):
        print(line, flush=True)

    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        cmd = tokens[0]
        if cmd == "uci":
            send("id name pepper")
            send("id author pepper contributors")
            send("uciok")
        elif cmd == "isready":
            send("readyok")
        elif cmd == "ucinewgame":
            state, tree = initial_position(), None
        elif cmd == "position":
            try:
                state = _parse_position(tokens[1:])
                tree = None
            except (FenError, ValueError, IndexError) as exc:
                send(f"info string error: {exc}")
        elif cmd == "go":
            if not game_outcome(state).ongoing:
                send("info string error: position is terminal")
                send("bestmove 0000")
                continue
            result, tree = run_mcts(state, params, cfg.search, tree, rng)
            send(f"bestmove {result.chosen_move.uci()}")
        elif cmd == "quit":
            return EXIT_OK
        # Unknown commands are ignored, per convention.
    return EXIT_OK


def _parse_position(tokens):
    if not tokens:
        raise ValueError("position needs 'startpos' or 'fen ...'")
    if tokens[0] == "startpos":
        state = initial_position()
        rest = tokens[1:]
    elif tokens[0] == "fen":
        if "moves" in tokens:
            cut = tokens.index("moves")
            fen_tokens, rest = tokens[1:cut], tokens[cut:]
        else:
            fen_tokens, rest = tokens[1:], []
        state = parse_fen(" ".join(fen_tokens))
    else:
        raise ValueError(f"bad position mode {tokens[0]!r}")
    if rest:
        if rest[0] != "moves":
            raise ValueError(f"expected 'moves', got {rest[0]!r}")
        for text in rest[1:]:
            state = apply_move(state, Move.from_uci(text))
    return state


_COMMANDS = {
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "eval": cmd_eval,
    "gate": cmd_gate,
    "perft": cmd_perft,
    "uci": cmd_uci,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        apply_overrides(cfg, seed=args.seed, workers=args.workers,
                        engine=args.engine, sims=args.sims)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FenError, WeightsFormatError, OracleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
