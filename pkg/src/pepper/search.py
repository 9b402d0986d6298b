"""PUCT-guided Monte Carlo Tree Search, plus a classic UCT reference.

Selection maximizes Q + U with U = c_puct * P * sqrt(sum_k N) / (1 + N);
expansion evaluates leaves with the network (terminal leaves bypass it);
backup adds the leaf value along the path with the sign alternating per
ply, so each node's edge W totals are from that node's side-to-move
perspective. Dirichlet noise is mixed into the root priors once per call.

Visit accounting: a node's first visit is its own expansion, so for every
expanded non-terminal node N(node) = sum_a N(node, a) + 1, and a fresh
root searched with S simulations ends with root edge visits summing to
S - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .board import BoardState, Move, OutcomeKind, apply_move, game_outcome, move_index
from .features import extract_features, legal_mask
from .net import NetworkParams, forward

# Temperature sentinel: one-hot at the max visit count.
TAU_ARGMAX = 0.0


class EdgeStats:
    """Per-edge visit count N, total value W, and prior P."""

    __slots__ = ("n", "w", "p")

    def __init__(self, p: float):
        self.n = 0
        self.w = 0.0
        self.p = p

    @property
    def q(self) -> float:
        return self.w / self.n if self.n else 0.0

    def __repr__(self):
        return f"EdgeStats(n={self.n}, w={self.w:.3f}, p={self.p:.3f})"


class SearchNode:
    """One board state in the tree, with per-edge statistics."""

    __slots__ = ("state", "edges", "children", "moves", "visits", "terminal_value",
                 "expanded", "value")

    def __init__(self, state: BoardState):
        self.state = state
        self.edges: Dict[int, EdgeStats] = {}
        self.children: Dict[int, SearchNode] = {}
        self.moves: Dict[int, Move] = {}
        self.visits = 0
        self.terminal_value: Optional[float] = None
        self.expanded = False
        self.value = 0.0


@dataclass
class SearchConfig:
    simulations: int = 800
    c_puct: float = 1.5
    dirichlet_alpha: float = 0.3
    dirichlet_epsilon: float = 0.25
    tau_opening: float = 1.0
    opening_plies: int = 20
    tau_after: float = TAU_ARGMAX
    rng_seed: int = 0

    def tau_for_ply(self, ply: int) -> float:
        return self.tau_opening if ply < self.opening_plies else self.tau_after


@dataclass
class SearchResult:
    policy: Dict[int, float]       # distribution over legal move indices
    chosen_move: Move
    root_value: float              # visit-weighted Q from the root mover's view
    visit_counts: Dict[int, int]


def puct_score(edge: EdgeStats, parent_visit_sum: int, c: float) -> float:
    """Q + U for one edge; Q is 0 while the edge is unvisited."""
    u = c * edge.p * math.sqrt(parent_visit_sum) / (1 + edge.n)
    return edge.q + u


def select_child(node: SearchNode, c: float) -> int:
    """Edge index maximizing Q + U; ties break by higher P then lower index."""
    if node.terminal_value is not None:
        raise ValueError("cannot select a child of a terminal node")
    total = node.visits - 1
    sqrt_total = math.sqrt(total) if total > 0 else 0.0
    best_idx = -1
    best_score = -math.inf
    best_p = -math.inf
    for idx, e in node.edges.items():  # ascending move-index order
        score = (e.w / e.n if e.n else 0.0) + c * e.p * sqrt_total / (1 + e.n)
        if score > best_score or (score == best_score and e.p > best_p):
            best_idx, best_score, best_p = idx, score, e.p
    return best_idx


def visit_policy(counts: Dict[int, int], tau: float) -> Dict[int, float]:
    """Exponentiated-count distribution; tau = TAU_ARGMAX gives a one-hot."""
    if not counts or not any(counts.values()):
        raise ValueError("visit policy needs at least one visited edge")
    indices = sorted(counts)
    if tau == TAU_ARGMAX:
        best = max(indices, key=lambda i: (counts[i], -i))
        return {i: (1.0 if i == best else 0.0) for i in indices}
    if tau < 0:
        raise ValueError("temperature must be positive or TAU_ARGMAX")
    n_max = max(counts.values())
    weights = [(counts[i] / n_max) ** (1.0 / tau) for i in indices]
    total = sum(weights)
    return {i: w / total for i, w in zip(indices, weights)}


def _expand(node: SearchNode, params: NetworkParams) -> float:
    """Evaluate a leaf: terminal value, or network priors + value."""
    outcome = game_outcome(node.state)
    node.expanded = True
    if not outcome.ongoing:
        # Checkmate means the side to move here has lost.
        node.terminal_value = -1.0 if outcome.kind in (OutcomeKind.WHITE_WIN, OutcomeKind.BLACK_WIN) else 0.0
        node.value = node.terminal_value
        return node.terminal_value
    x = extract_features(node.state)
    mask = legal_mask(node.state)
    out, _ = forward(params, x, mask)
    for m in node.state.legal_moves:
        idx = move_index(m)
        node.edges[idx] = EdgeStats(float(out.policy[idx]))
        node.moves[idx] = m
    node.value = float(out.value)
    return node.value


def _simulate(root: SearchNode, params: NetworkParams, c_puct: float) -> None:
    node = root
    path = []
    while True:
        if node.terminal_value is not None:
            v = node.terminal_value
            break
        if not node.expanded:
            v = _expand(node, params)
            break
        idx = select_child(node, c_puct)
        path.append((node, idx))
        child = node.children.get(idx)
        if child is None:
            child = SearchNode(apply_move(node.state, node.moves[idx]))
            node.children[idx] = child
        node = child
    node.visits += 1
    for parent, idx in reversed(path):
        v = -v  # flip to the parent mover's perspective
        e = parent.edges[idx]
        e.n += 1
        e.w += v
        parent.visits += 1


def run_mcts(root_state: BoardState, params: NetworkParams, cfg: SearchConfig,
             tree: Optional[SearchNode] = None,
             rng: Optional[np.random.Generator] = None):
    """Search from root_state; returns (SearchResult, root node for reuse)."""
    if not game_outcome(root_state).ongoing:
        raise ValueError("cannot search a terminal position")
    if cfg.simulations < 1:
        raise ValueError("need at least one simulation")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    root = tree if tree is not None and tree.state == root_state else SearchNode(root_state)
    sims_done = 0
    if not root.expanded:
        _expand(root, params)
        root.visits += 1
        sims_done = 1

    if cfg.dirichlet_epsilon > 0 and root.edges:
        noise = rng.dirichlet([cfg.dirichlet_alpha] * len(root.edges))
        for e, eta in zip(root.edges.values(), noise):
            e.p = (1.0 - cfg.dirichlet_epsilon) * e.p + cfg.dirichlet_epsilon * eta

    while sims_done < cfg.simulations:
        _simulate(root, params, cfg.c_puct)
        sims_done += 1

    counts = {idx: e.n for idx, e in root.edges.items()}
    tau = cfg.tau_for_ply(root_state.ply)
    if any(counts.values()):
        pi = visit_policy(counts, tau)
    else:
        # Degenerate single-simulation case: no edge has been visited yet;
        # concentrate the policy on the edge selection would take next.
        pi = {idx: 0.0 for idx in counts}
        pi[select_child(root, cfg.c_puct)] = 1.0

    indices = sorted(pi)
    probs = np.array([pi[i] for i in indices])
    chosen_idx = indices[int(rng.choice(len(indices), p=probs))]

    edge_n = sum(e.n for e in root.edges.values())
    if edge_n:
        root_value = sum(e.w for e in root.edges.values()) / edge_n
    else:
        root_value = root.value
    return SearchResult(pi, root.moves[chosen_idx], root_value, counts), root


def advance_root(tree: SearchNode, m: Move) -> SearchNode:
    """Child subtree after playing m; a fresh node if that edge was never expanded."""
    if m not in tree.state.legal_moves:
        raise ValueError(f"move {m.uci()} is not legal at the tree root")
    child = tree.children.get(move_index(m))
    if child is None:
        child = SearchNode(apply_move(tree.state, m))
    return child


# ---------------------------------------------------------------------------
# Classic UCT on explicit toy trees, for verification against known bandits.

class ToyTree:
    """Explicit tree; a node with no children is a leaf with a stochastic reward."""

    __slots__ = ("children", "reward", "n", "total", "label")

    def __init__(self, children=(), reward=None, label=None):
        self.children = list(children)
        self.reward = reward
        self.label = label
        self.n = 0
        self.total = 0.0

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else 0.0

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.reward(rng)) if callable(self.reward) else float(self.reward)


@dataclass
class UctResult:
    best: ToyTree
    best_mean: float
    arm_means: list = field(default_factory=list)
    arm_visits: list = field(default_factory=list)


def uct_reference(tree: ToyTree, iterations: int, c: float, seed: int = 0) -> UctResult:
    """Classic UCT: descend by A = mean + c*sqrt(log N_parent / N_child),
    sample the leaf reward, and back the running means up the path."""
    rng = np.random.default_rng(seed)
    for _ in range(iterations):
        node = tree
        path = [tree]
        while node.children:
            unvisited = next((ch for ch in node.children if ch.n == 0), None)
            if unvisited is not None:
                node = unvisited
            else:
                log_parent = math.log(node.n)
                node = max(node.children,
                           key=lambda ch: ch.mean + c * math.sqrt(log_parent / ch.n))
            path.append(node)
        r = node.sample(rng)
        for nd in path:
            nd.n += 1
            nd.total += r
    # Best leaf by greedy max-mean descent.
    node = tree
    while node.children:
        node = max(node.children, key=lambda ch: ch.mean)
    return UctResult(
        best=node,
        best_mean=node.mean,
        arm_means=[ch.mean for ch in tree.children],
        arm_visits=[ch.n for ch in tree.children],
    )
