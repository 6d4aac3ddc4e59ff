"""Flat ``key = value`` run configuration shared by all subcommands.

Precedence: built-in defaults < config file < command-line flags. The
resolved configuration is echoed next to the run outputs in the same
format, so ``--config <echo>`` replays a run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .clustering import ClusterConfig
from .env import EnvConfig
from .errors import GroupFormError
from .maddpg import TrainConfig

_ENV = EnvConfig()
_TRAIN = TrainConfig()


@dataclass
class RunConfig:
    # environment
    reward_weights: tuple = _ENV.reward_weights
    step_size: float = _ENV.step_size
    prune_threshold: float = _ENV.prune_threshold
    weighted_degree: bool = _ENV.weighted_degree
    mutation: str = _ENV.mutation
    # training
    episodes: int = _TRAIN.episodes
    steps_per_episode: int = _TRAIN.steps_per_episode
    batch_size: int = _TRAIN.batch_size
    capacity: int = _TRAIN.capacity
    gamma: float = _TRAIN.gamma
    soft_tau: float = _TRAIN.soft_tau
    lr_actor: float = _TRAIN.lr_actor
    lr_critic: float = _TRAIN.lr_critic
    momentum: float = _TRAIN.momentum
    hidden_sizes: tuple = _TRAIN.hidden_sizes
    warmup: int = _TRAIN.warmup
    ou_mu: float = _TRAIN.ou_mu
    ou_theta: float = _TRAIN.ou_theta
    ou_sigma: float = _TRAIN.ou_sigma
    sigma_decay: float = _TRAIN.sigma_decay
    # clustering
    k: int = 10
    cap: int = 0  # 0 means ceil(n / k)
    strategy: str = "occupancy"
    # shared
    seed: int = 42
    records: str = ""
    graph: str = ""
    out: str = "."

    def env_config(self) -> EnvConfig:
        return EnvConfig(self.reward_weights, self.step_size, self.prune_threshold,
                         self.steps_per_episode, self.seed, self.weighted_degree, self.mutation)

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(self.k, self.cap or None, self.seed, self.strategy)

    def update(self, values: dict[str, Any]) -> "RunConfig":
        for key, raw in values.items():
            if raw is None:
                continue
            setattr(self, key, parse_value(key, raw))
        return self

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_value(key: str, raw: Any) -> Any:
    if key not in _TYPES:
        raise GroupFormError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return tuple(raw) if kind == "tuple" else raw
    text = raw.strip()
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple":
            cast = int if key == "hidden_sizes" else float
            return tuple(cast(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise GroupFormError(f"bad value for {key}: {raw!r}") from None
    return text


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GroupFormError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GroupFormError(f"{path}: line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise GroupFormError(f"{path}: line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve(config_path: str | None, overrides: dict[str, Any]) -> RunConfig:
    cfg = RunConfig()
    if config_path:
        cfg.update(read_config_file(config_path))
    return cfg.update(overrides)
