"""Self-play chess engine: hand-crafted board features, policy/value MLPs,
PUCT-guided tree search, and a generate/train/gate training pipeline."""

__version__ = "0.1.0"
