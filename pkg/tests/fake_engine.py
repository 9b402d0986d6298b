#!/usr/bin/env python3
"""Scripted UCI engine for oracle protocol tests.

Behavior is driven by command-line flags so each test session can stage a
different conversation:

  --cp N            reply to `go` with `score cp N`
  --mate N          reply with `score mate N`
  --first-cp N      emit an earlier score line before the final one
                    (the last score before bestmove must win)
  --junk N          interleave N unrelated info lines around the score
  --no-score        send bestmove without any score line
  --silent          never answer the uci handshake (timeout test)
  --garbage         emit a malformed score token
"""

import argparse
import sys


def send(line):
    sys.stdout.write(line + "\n")
    sys.stdout.flush()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cp", type=int)
    parser.add_argument("--mate", type=int)
    parser.add_argument("--first-cp", type=int)
    parser.add_argument("--junk", type=int, default=0)
    parser.add_argument("--no-score", action="store_true")
    parser.add_argument("--silent", action="store_true")
    parser.add_argument("--garbage", action="store_true")
    args = parser.parse_args()

    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        cmd = line.split()[0]
        if cmd == "uci":
            if args.silent:
                continue
            send("id name fake-engine")
            send("id author tests")
            send("option name Hash type spin default 16 min 1 max 1024")
            send("uciok")
        elif cmd == "isready":
            send("readyok")
        elif cmd in ("ucinewgame", "position", "setoption"):
            pass
        elif cmd == "go":
            for i in range(args.junk):
                send(f"info depth {i + 1} nodes {100 * (i + 1)} nps 5000 hashfull 3")
            if args.first_cp is not None:
                send(f"info depth 2 seldepth 4 score cp {args.first_cp} pv e2e4")
            if args.garbage:
                send("info depth 3 score cp banana pv e2e4")
            if args.cp is not None:
                send(f"info depth 8 seldepth 12 multipv 1 score cp {args.cp} nodes 4242 pv e2e4 e7e5")
            if args.mate is not None:
                send(f"info depth 8 score mate {args.mate} pv h5f7")
            if args.junk:
                send("info string verification line, no score here")
            send("bestmove e2e4 ponder e7e5")
        elif cmd == "quit":
            return
    # EOF: exit quietly, like a real engine.


if __name__ == "__main__":
    main()
