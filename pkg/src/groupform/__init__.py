"""Group formation from coded collaboration data.

Build a weighted participant graph, reshape it with multi-agent DDPG
against connectivity / balance / path-length / dominance rewards, then
split participants into size-capped groups.
"""

from .clustering import (
    ClusterAssignment,
    ClusterConfig,
    occupancy_constrained_clustering,
    validate_assignment,
    weight_greedy_constrained_clustering,
)
from .env import EnvConfig, GraphEnv, composite_reward
from .graph import (
    InteractionRecord,
    RewardBreakdown,
    WeightedGraph,
    average_path_length,
    build_graph,
    degree_variance,
    dominance_penalty,
    normalize_weights,
    overall_connectivity,
    weighted_degree,
)
from .maddpg import Checkpoint, OUNoise, ReplayMemory, TrainConfig, train

__all__ = [
    "Checkpoint",
    "ClusterAssignment",
    "ClusterConfig",
    "EnvConfig",
    "GraphEnv",
    "InteractionRecord",
    "OUNoise",
    "ReplayMemory",
    "RewardBreakdown",
    "TrainConfig",
    "WeightedGraph",
    "average_path_length",
    "build_graph",
    "composite_reward",
    "degree_variance",
    "dominance_penalty",
    "normalize_weights",
    "occupancy_constrained_clustering",
    "overall_connectivity",
    "train",
    "validate_assignment",
    "weight_greedy_constrained_clustering",
    "weighted_degree",
]

__version__ = "0.1.0"
