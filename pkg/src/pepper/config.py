"""Run configuration: INI-style sections mirroring the search, net,
pipeline, and oracle knobs. Unknown sections or keys are rejected; CLI
flags override file values, and PEPPER_ENGINE supplies the engine path
when neither does.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .net import ARCHITECTURES
from .oracle import OracleConfig
from .pipeline import GenerationConfig
from .search import TAU_ARGMAX, SearchConfig

ENGINE_ENV_VAR = "PEPPER_ENGINE"


class ConfigError(ValueError):
    """Bad configuration file or option value."""


@dataclass
class NetConfig:
    architecture: str = "policy-val-parts"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    l2_lambda: float = 1e-4
    init_seed: int = 0


@dataclass
class PipelineOptions:
    adjudication_start_k: int = 80
    resign_threshold_cp: int = 600
    max_game_plies: int = 512
    games_per_epoch: int = 10
    mini_batch_size: int = 32
    gate_games: int = 10
    epochs: int = 1
    retain_buffer: bool = False
    eval_adjudicate: bool = False
    export_pgn: bool = False


@dataclass
class RunConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    net: NetConfig = field(default_factory=NetConfig)
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    seed: int = 0
    workers: int = 1

    def generation_config(self) -> GenerationConfig:
        p = self.pipeline
        return GenerationConfig(
            adjudication_start_k=p.adjudication_start_k,
            resign_threshold_cp=p.resign_threshold_cp,
            max_game_plies=p.max_game_plies,
            games_per_epoch=p.games_per_epoch,
            mini_batch_size=p.mini_batch_size,
            search=self.search,
            rng_seed=self.seed,
        )


# Every accepted key, with its target attribute and parse type.
_KEY_TYPES = {
    "search": {
        "simulations": int, "c_puct": float, "dirichlet_alpha": float,
        "dirichlet_epsilon": float, "tau_opening": float,
        "opening_plies": int, "tau_after": float,
    },
    "net": {
        "architecture": str, "learning_rate": float, "beta1": float,
        "beta2": float, "epsilon": float, "l2_lambda": float, "init_seed": int,
    },
    "pipeline": {
        "adjudication_start_k": int, "resign_threshold_cp": int,
        "max_game_plies": int, "games_per_epoch": int, "mini_batch_size": int,
        "gate_games": int, "epochs": int, "retain_buffer": bool,
        "eval_adjudicate": bool, "export_pgn": bool,
    },
    "oracle": {
        "engine_path": str, "depth": int, "movetime_ms": int,
        "fallback_allowed": bool,
    },
}


def _coerce(section: str, key: str, raw: str, target_type):
    raw = raw.strip()
    try:
        if target_type is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError("not a boolean")
        if target_type is int:
            return int(raw)
        if target_type is float:
            if raw.lower() == "argmax":
                return TAU_ARGMAX
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {target_type.__name__}") from None


def load_config(path=None) -> RunConfig:
    """Parse an INI config file into a RunConfig, validating every key."""
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None

    for section in parser.sections():
        if section not in _KEY_TYPES:
            raise ConfigError(f"unknown config section [{section}]")
        target = getattr(cfg, section)
        known = _KEY_TYPES[section]
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            setattr(target, key, _coerce(section, key, raw, known[key]))

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.net.architecture not in ARCHITECTURES:
        raise ConfigError(
            f"[net] architecture: {cfg.net.architecture!r} is not one of {', '.join(ARCHITECTURES)}")
    if cfg.search.simulations < 1:
        raise ConfigError("[search] simulations must be >= 1")
    if cfg.search.c_puct <= 0:
        raise ConfigError("[search] c_puct must be > 0")
    if not 0.0 <= cfg.search.dirichlet_epsilon <= 1.0:
        raise ConfigError("[search] dirichlet_epsilon must be in [0, 1]")
    if cfg.search.dirichlet_alpha <= 0:
        raise ConfigError("[search] dirichlet_alpha must be > 0")
    if cfg.pipeline.resign_threshold_cp <= 0:
        raise ConfigError("[pipeline] resign_threshold_cp must be > 0")
    if cfg.pipeline.adjudication_start_k < 0:
        raise ConfigError("[pipeline] adjudication_start_k must be >= 0")
    if cfg.pipeline.mini_batch_size < 1:
        raise ConfigError("[pipeline] mini_batch_size must be >= 1")
    if cfg.oracle.depth is not None and cfg.oracle.depth < 1:
        raise ConfigError("[oracle] depth must be >= 1")
    if cfg.oracle.movetime_ms is not None and cfg.oracle.movetime_ms < 10:
        raise ConfigError("[oracle] movetime_ms must be >= 10")


def apply_overrides(cfg: RunConfig, *, seed=None, workers=None, engine=None, sims=None) -> RunConfig:
    """CLI flags override file values; the environment supplies the engine path last."""
    if seed is not None:
        cfg.seed = seed
        cfg.search.rng_seed = seed
    if workers is not None:
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg.workers = workers
    if sims is not None:
        if sims < 1:
            raise ConfigError("--sims must be >= 1")
        cfg.search.simulations = sims
    if engine is not None:
        cfg.oracle.engine_path = engine
    elif cfg.oracle.engine_path is None and os.environ.get(ENGINE_ENV_VAR):
        cfg.oracle.engine_path = os.environ[ENGINE_ENV_VAR]
    return cfg
