"""Multi-agent DDPG over the graph-editing environment.

Each participant owns a deterministic actor that reads the full edge
vector and emits one scalar. Critics are centralized: they score the edge
vector together with the whole joint action. All agents share one replay
buffer of joint transitions.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .env import EnvConfig, GraphEnv
from .errors import BufferUnderfilledError, GroupFormError
from .graph import RewardBreakdown, WeightedGraph
from .nets import SGD, DenseNet, forward_critic, soft_update


class TrainingDivergedError(GroupFormError):
    pass


@dataclass
class OUNoise:
    mu: float = 0.0
    theta: float = 0.15
    sigma: float = 0.2
    x: float | None = None

    def __post_init__(self):
        if self.x is None:
            self.x = self.mu

    def reset(self) -> None:
        self.x = self.mu

    def sample(self, rng: np.random.Generator) -> float:
        self.x = self.x + self.theta * (self.mu - self.x) + self.sigma * rng.standard_normal()
        return self.x


def ou_sample(noise: OUNoise, rng: np.random.Generator) -> float:
    return noise.sample(rng)


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    actions: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool

    def __post_init__(self):
        if np.shape(self.state) != np.shape(self.next_state):
            raise ValueError("state and next_state must have equal length")


class ReplayMemory:
    """Bounded FIFO of experiences backed by a ring buffer."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Experience] = []
        self._head = 0  # index of the oldest item once the buffer is full

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        """Oldest to newest."""
        return iter(self._items[self._head:] + self._items[:self._head])

    def push(self, e: Experience) -> None:
        if len(self._items) < self.capacity:
            self._items.append(e)
        else:
            self._items[self._head] = e
            self._head = (self._head + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Experience]:
        """Uniform draw without replacement."""
        if len(self._items) < batch_size:
            raise BufferUnderfilledError(
                f"buffer underfilled: {len(self._items)} < batch size {batch_size}")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[k] for k in idx]

    def sample_arrays(self, batch_size: int, rng: np.random.Generator):
        batch = self.sample(batch_size, rng)
        return (np.stack([e.state for e in batch]),
                np.stack([e.actions for e in batch]),
                np.array([e.reward for e in batch], dtype=float),
                np.stack([e.next_state for e in batch]),
                np.array([float(e.done) for e in batch]))


def memory_push(mem: ReplayMemory, e: Experience) -> None:
    mem.push(e)


def memory_sample(mem: ReplayMemory, batch_size: int, rng: np.random.Generator) -> list[Experience]:
    return mem.sample(batch_size, rng)


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 300
    steps_per_episode: int = 20
    batch_size: int = 64
    capacity: int = 100_000
    gamma: float = 0.99
    soft_tau: float = 0.01
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    momentum: float = 0.0
    hidden_sizes: tuple[int, int] = (64, 64)
    seed: int = 42
    warmup: int = 500
    ou_mu: float = 0.0
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    sigma_decay: float = 0.995

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        for name in ("episodes", "steps_per_episode", "batch_size", "capacity"):
            if getattr(self, name) < 1:
                raise GroupFormError(f"{name} must be positive")
        if len(self.hidden_sizes) != 2 or min(self.hidden_sizes) < 1:
            raise GroupFormError("hidden_sizes must be two positive integers")
        if self.batch_size > self.capacity:
            raise GroupFormError("batch_size must not exceed capacity")
        if not 0 <= self.gamma < 1:
            raise GroupFormError("gamma must lie in [0, 1)")
        if not 0 < self.soft_tau <= 1:
            raise GroupFormError("soft_tau must lie in (0, 1]")
        if self.lr_actor <= 0 or self.lr_critic <= 0:
            raise GroupFormError("learning rates must be positive")
        if not 0 <= self.momentum < 1:
            raise GroupFormError("momentum must lie in [0, 1)")
        if self.warmup < 0:
            raise GroupFormError("warmup must be non-negative")


@dataclass
class Agent:
    actor: DenseNet
    critic: DenseNet
    target_actor: DenseNet
    target_critic: DenseNet
    noise: OUNoise
    actor_opt: SGD = field(repr=False, default=None)
    critic_opt: SGD = field(repr=False, default=None)

    @classmethod
    def create(cls, obs_size: int, n_agents: int, cfg: TrainConfig,
               rng: np.random.Generator) -> "Agent":
        h1, h2 = cfg.hidden_sizes
        actor = DenseNet.init((obs_size, h1, h2, 1), rng, head_activation="tanh")
        critic = DenseNet.init((obs_size + n_agents, h1, h2, 1), rng, head_activation="identity")
        agent = cls(actor, critic, actor.copy(), critic.copy(),
                    OUNoise(cfg.ou_mu, cfg.ou_theta, cfg.ou_sigma))
        agent.attach_optimizers(cfg)
        return agent

    def attach_optimizers(self, cfg: TrainConfig) -> None:
        self.actor_opt = SGD(self.actor, cfg.lr_actor, cfg.momentum)
        self.critic_opt = SGD(self.critic, cfg.lr_critic, cfg.momentum)

    def act(self, obs: np.ndarray, rng: np.random.Generator | None = None) -> float:
        a = float(self.actor.forward(obs, cache=False)[0])
        if rng is not None:
            a += self.noise.sample(rng)
        return min(1.0, max(-1.0, a))

    def networks(self) -> dict[str, DenseNet]:
        return {"actor": self.actor, "critic": self.critic,
                "target_actor": self.target_actor, "target_critic": self.target_critic}

    def is_finite(self) -> bool:
        return all(net.is_finite() for net in self.networks().values())


def make_agents(obs_size: int, n_agents: int, cfg: TrainConfig,
                rng: np.random.Generator) -> list[Agent]:
    return [Agent.create(obs_size, n_agents, cfg, rng) for _ in range(n_agents)]


def critic_targets(target_critic: DenseNet, R: np.ndarray, S2: np.ndarray, A2: np.ndarray,
                   D: np.ndarray, gamma: float) -> np.ndarray:
    """Bootstrapped regression targets; terminal rows get ``y = r`` exactly."""
    q_next = forward_critic(target_critic, S2, A2)
    return np.where(D > 0, R, R + gamma * q_next)


def learn_step(agents: Sequence[Agent], mem: ReplayMemory, cfg: TrainConfig,
               rng: np.random.Generator) -> list[dict[str, float]]:
    """One critic and one actor update per agent from a shared minibatch.

    The actor gradient holds the other agents' actions at their replayed
    values and ascends the online critic along this agent's own action.
    """
    need = max(cfg.batch_size, cfg.warmup)
    if len(mem) < need:
        raise BufferUnderfilledError(f"buffer underfilled: {len(mem)} < {need}")
    S, A, R, S2, D = mem.sample_arrays(cfg.batch_size, rng)
    B = len(R)
    obs_size = S.shape[1]
    A2 = np.column_stack([ag.target_actor.forward(S2, cache=False)[:, 0] for ag in agents])

    report = []
    for i, ag in enumerate(agents):
        y = critic_targets(ag.target_critic, R, S2, A2, D, cfg.gamma)
        td = forward_critic(ag.critic, S, A) - y
        grads, _ = ag.critic.backward((2.0 / B) * td[:, None])
        ag.critic_opt.step(grads)

        joint = A.copy()
        joint[:, i] = ag.actor.forward(S)[:, 0]
        q = forward_critic(ag.critic, S, joint)
        _, dx = ag.critic.backward(np.full((B, 1), -1.0 / B))
        grads, _ = ag.actor.backward(dx[:, obs_size + i:obs_size + i + 1])
        ag.actor_opt.step(grads)

        soft_update(ag.target_critic, ag.critic, cfg.soft_tau)
        soft_update(ag.target_actor, ag.actor, cfg.soft_tau)
        report.append({"critic_loss": float(np.mean(td ** 2)), "actor_loss": float(-q.mean())})
    return report


@dataclass
class EpisodeRecord:
    episode: int
    score: float
    final: RewardBreakdown


@dataclass
class TrainResult:
    history: list[EpisodeRecord]
    initial_graph: WeightedGraph
    final_graph: WeightedGraph
    agents: list[Agent]
    rng: np.random.Generator
    experiences: int
    learn_steps: int
    config: dict

    @property
    def scores(self) -> list[float]:
        return [h.score for h in self.history]

    def checkpoint(self) -> "Checkpoint":
        return Checkpoint.from_agents(self.agents, self.rng, self.config)


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, episode]).generate_state(1, np.uint64)[0])


def decile_means(scores: Sequence[float]) -> tuple[float, float]:
    """Mean of the first and of the last 10% of episodes (at least one each)."""
    k = max(1, len(scores) // 10)
    return float(np.mean(scores[:k])), float(np.mean(scores[-k:]))


def train(initial_graph: WeightedGraph, env_cfg: EnvConfig, cfg: TrainConfig,
          on_episode: Callable[[EpisodeRecord], None] | None = None) -> TrainResult:
    """Run ``cfg.episodes`` episodes of ``cfg.steps_per_episode`` steps.

    Each episode restarts from ``initial_graph``; the returned final graph
    is the state at the end of the last episode.
    """
    env_cfg = replace(env_cfg, max_steps=cfg.steps_per_episode)
    env = GraphEnv(initial_graph, env_cfg)
    rng = np.random.default_rng(cfg.seed)
    n = env.n_agents
    agents = make_agents(env.observation_size, n, cfg, rng)
    mem = ReplayMemory(cfg.capacity)
    history: list[EpisodeRecord] = []
    learn_steps = 0
    experiences = 0
    sigma = cfg.ou_sigma
    warm = max(cfg.batch_size, cfg.warmup)

    for episode in range(cfg.episodes):
        obs = env.reset(seed=episode_seed(env_cfg.seed, episode))
        for ag in agents:
            ag.noise.sigma = sigma
            ag.noise.reset()
        score = 0.0
        outcome = None
        for _ in range(cfg.steps_per_episode):
            actions = np.array([ag.act(obs, rng) for ag in agents])
            outcome = env.step(actions)
            next_obs = outcome.next_state.observation()
            mem.push(Experience(obs, actions, outcome.reward, next_obs, outcome.done))
            experiences += 1
            score += outcome.reward
            obs = next_obs
            if len(mem) >= warm:
                learn_step(agents, mem, cfg, rng)
                learn_steps += 1
                if not all(ag.is_finite() for ag in agents):
                    raise TrainingDivergedError(
                        f"non-finite parameters after learn step {learn_steps} (episode {episode})")
            if outcome.done:
                break
        record = EpisodeRecord(episode, score, outcome.breakdown)
        history.append(record)
        if on_episode is not None:
            on_episode(record)
        sigma *= cfg.sigma_decay

    config = {"env": asdict(env_cfg), "train": asdict(cfg)}
    return TrainResult(history, initial_graph, env.state.graph, agents, rng,
                       experiences, learn_steps, config)


# --- checkpoints -------------------------------------------------------

CHECKPOINT_MAGIC = b"GROUPFORM-CKPT\n"
CHECKPOINT_VERSION = 1


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Checkpoint:
    """All network parameters, the trainer RNG state and the run config.

    Serialized as magic, version, a JSON header and raw little-endian
    float64 parameter data. Encoding is canonical so that
    ``from_bytes(b).to_bytes() == b``.
    """

    config: dict
    rng_state: dict
    noise: list[dict]
    arrays: dict[str, np.ndarray]

    @classmethod
    def from_agents(cls, agents: Sequence[Agent], rng: np.random.Generator,
                    config: dict) -> "Checkpoint":
        arrays = {}
        for k, ag in enumerate(agents):
            for net_name, net in ag.networks().items():
                for layer, (w, b) in enumerate(zip(net.weights, net.biases), start=1):
                    arrays[f"agent{k}.{net_name}.fc{layer}.weight"] = w
                    arrays[f"agent{k}.{net_name}.fc{layer}.bias"] = b
        noise = [asdict(ag.noise) for ag in agents]
        return cls(json.loads(json.dumps(config, default=list)),
                   rng.bit_generator.state, noise, arrays)

    def to_bytes(self) -> bytes:
        header = {
            "version": CHECKPOINT_VERSION,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "rng_state": self.rng_state,
            "noise": self.noise,
            "arrays": [[name, list(a.shape)] for name, a in self.arrays.items()],
        }
        head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                        for a in self.arrays.values())
        return CHECKPOINT_MAGIC + struct.pack("<IQ", CHECKPOINT_VERSION, len(head)) + head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if not data.startswith(CHECKPOINT_MAGIC):
            raise GroupFormError("not a checkpoint file")
        off = len(CHECKPOINT_MAGIC)
        version, head_len = struct.unpack_from("<IQ", data, off)
        if version != CHECKPOINT_VERSION:
            raise GroupFormError(f"unsupported checkpoint version {version}")
        off += struct.calcsize("<IQ")
        header = json.loads(data[off:off + head_len])
        off += head_len
        if header["config_hash"] != config_hash(header["config"]):
            raise GroupFormError("checkpoint config hash mismatch")
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            a = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape)
            arrays[name] = a.astype(float)
            off += 8 * count
        if off != len(data):
            raise GroupFormError("trailing bytes in checkpoint")
        return cls(header["config"], header["rng_state"], header["noise"], arrays)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def restore_agents(self) -> tuple[list[Agent], np.random.Generator]:
        cfg = TrainConfig(**self.config["train"])
        agents = []
        k = 0
        while f"agent{k}.actor.fc1.weight" in self.arrays:
            nets = {}
            for net_name in ("actor", "critic", "target_actor", "target_critic"):
                ws = [self.arrays[f"agent{k}.{net_name}.fc{l}.weight"].copy() for l in (1, 2, 3)]
                bs = [self.arrays[f"agent{k}.{net_name}.fc{l}.bias"].copy() for l in (1, 2, 3)]
                sizes = (ws[0].shape[1],) + tuple(w.shape[0] for w in ws)
                head = "tanh" if net_name.endswith("actor") else "identity"
                nets[net_name] = DenseNet(sizes, ws, bs, head)
            agent = Agent(**nets, noise=OUNoise(**self.noise[k]))
            agent.attach_optimizers(cfg)
            agents.append(agent)
            k += 1
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng_state
        return agents, rng
