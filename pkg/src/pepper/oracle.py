"""Position-evaluation oracle: external UCI engine client with a built-in
material-heuristic fallback.

Scores are white-centric centipawns. UCI engines report side-to-move
scores, so replies for Black-to-move positions are sign-flipped. Mate
scores clamp to +/-10000 cp before normalization; normalize_cp maps
centipawns into (-1, 1) via tanh(cp / 600).
"""

from __future__ import annotations

import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Optional

from .board import (
    BISHOP, BLACK, KNIGHT, PAWN, QUEEN, ROOK, WHITE,
    BoardState, emit_fen,
)

MATE_CP = 10_000
CP_SCALE = 600.0

MATERIAL_CP = {PAWN: 100, KNIGHT: 320, BISHOP: 330, ROOK: 500, QUEEN: 900}
MOBILITY_CP = 10


class OracleError(RuntimeError):
    """Engine startup, protocol, or response failure."""


@dataclass
class OracleConfig:
    engine_path: Optional[str] = None
    depth: Optional[int] = 8
    movetime_ms: Optional[int] = None
    fallback_allowed: bool = True
    handshake_timeout: float = 5.0
    reply_timeout: float = 30.0


@dataclass
class EvalResult:
    score_cp: Optional[int]      # white-centric centipawns
    mate_in: Optional[int]       # plies, sign = winning side (white positive)
    source: str                  # "external-engine" | "material-heuristic"

    def clamped_cp(self) -> int:
        """Centipawns with mate scores clamped to +/-MATE_CP."""
        if self.mate_in is not None:
            return MATE_CP if self.mate_in > 0 else -MATE_CP
        return self.score_cp


def normalize_cp(cp: float) -> float:
    """Centipawns -> (-1, 1); a rook up lands near 0.68, a queen near 0.91."""
    return math.tanh(cp / CP_SCALE)


def material_eval(state: BoardState) -> int:
    """White-minus-black piece values plus 10 cp per legal-move mobility edge."""
    material = 0
    for p in state.placement:
        if p != 0 and abs(p) != 6:
            material += MATERIAL_CP[abs(p)] if p > 0 else -MATERIAL_CP[abs(p)]
    white_mob = len(_moves_for(state, WHITE))
    black_mob = len(_moves_for(state, BLACK))
    return material + MOBILITY_CP * (white_mob - black_mob)


def _moves_for(state: BoardState, color: int):
    """Legal moves for `color`, flipping the side to move when needed."""
    if state.stm == color:
        return state.legal_moves
    flipped = BoardState(state.placement, color, state.castling, None,
                         state.halfmove, state.fullmove)
    return flipped.legal_moves


class MaterialOracle:
    """Deterministic fallback handle with the material heuristic."""

    source = "material-heuristic"

    def evaluate(self, state: BoardState) -> EvalResult:
        return EvalResult(material_eval(state), None, self.source)

    def close(self) -> None:
        pass


class ExternalEngine:
    """UCI client over a subprocess; one handle serves one caller at a time."""

    source = "external-engine"

    def __init__(self, cfg: OracleConfig):
        self.cfg = cfg
        try:
            self._proc = subprocess.Popen(
                shlex.split(cfg.engine_path),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise OracleError(f"cannot start engine {cfg.engine_path!r}: {exc}") from None
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._send("uci")
            self._wait_for("uciok", cfg.handshake_timeout)
            self._send("isready")
            self._wait_for("readyok", cfg.handshake_timeout)
            self._send("ucinewgame")
        except OracleError:
            self._proc.kill()
            raise

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send(self, command: str) -> None:
        try:
            self._proc.stdin.write(command + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleError(f"engine pipe closed while sending {command!r}") from exc

    def _read_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise OracleError(f"engine reply timeout after {timeout:.1f}s") from None
        if line is None:
            raise OracleError("engine closed its output stream")
        return line

    def _wait_for(self, token: str, timeout: float) -> None:
        while True:
            if self._read_line(timeout).strip() == token:
                return

    def evaluate(self, state: BoardState) -> EvalResult:
        self._send(f"position fen {emit_fen(state)}")
        if self.cfg.movetime_ms is not None:
            self._send(f"go movetime {self.cfg.movetime_ms}")
        else:
            self._send(f"go depth {self.cfg.depth or 8}")
        score_cp = None
        mate = None
        while True:
            line = self._read_line(self.cfg.reply_timeout)
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "info" and "score" in tokens:
                i = tokens.index("score")
                try:
                    kind, value = tokens[i + 1], int(tokens[i + 2])
                except (IndexError, ValueError):
                    raise OracleError(f"unparseable score in line {line!r}") from None
                if kind == "cp":
                    score_cp, mate = value, None
                elif kind == "mate":
                    mate, score_cp = value, None
                else:
                    raise OracleError(f"unknown score kind in line {line!r}")
            elif tokens[0] == "bestmove":
                break
        if score_cp is None and mate is None:
            raise OracleError("engine sent bestmove without any score")
        # UCI scores are side-to-move-centric; convert to white-centric.
        if state.stm == BLACK:
            score_cp = -score_cp if score_cp is not None else None
            mate = -mate if mate is not None else None
        return EvalResult(score_cp, mate, self.source)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send("quit")
                self._proc.wait(timeout=2.0)
            except (OracleError, subprocess.TimeoutExpired):
                self._proc.kill()


def connect(cfg: OracleConfig):
    """Open an oracle handle: the configured engine, or the material fallback."""
    if cfg.engine_path:
        try:
            return ExternalEngine(cfg)
        except OracleError:
            if not cfg.fallback_allowed:
                raise
            return MaterialOracle()
    if not cfg.fallback_allowed:
        raise OracleError("no engine path configured and fallback disallowed")
    return MaterialOracle()
