"""Graph-editing environment.

Every agent emits one scalar in [-1, 1] per step. The scalar is mapped to
[0, 1] to weight an edge draw, the drawn edge is nudged by the signed
action, and the whole population shares a single composite reward
computed on the graph after all agents have acted.

Edge draws are proportional to ``w_ij * a'``. The ``a'`` factor appears in
every term of the normalizer, so the draw depends on the weights alone
whenever ``a' > 0``; it is kept in the computation for fidelity to the
selection rule and only matters for the ``a' == 0`` fallback (uniform over
positive-weight pairs).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GroupFormError, NoSelectableEdgeError
from .graph import (
    DEFAULT_PRUNE_THRESHOLD,
    RewardBreakdown,
    WeightedGraph,
    _average_path_length,
    _degree_variance,
    _dominance_penalty,
    _overall_connectivity,
    upper_pairs,
)

MUTATION_MODES = ("signed", "additive")


@dataclass(frozen=True)
class EnvConfig:
    reward_weights: tuple[float, float, float, float] = (1.0, 0.5, 0.5, 0.5)
    step_size: float = 0.1
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD
    max_steps: int = 20
    seed: int = 0
    weighted_degree: bool = True
    # "signed": w += step_size * alpha; "additive": w += (alpha + 1) / 2
    mutation: str = "signed"

    def __post_init__(self):
        lam = tuple(float(x) for x in self.reward_weights)
        if len(lam) != 4:
            raise GroupFormError("reward_weights needs 4 entries (oc, var, pl, pd)")
        if any(x < 0 for x in lam) or not any(x > 0 for x in lam):
            raise GroupFormError("reward weights must be >= 0 with at least one > 0")
        object.__setattr__(self, "reward_weights", lam)
        if not 0 < self.step_size <= 1:
            raise GroupFormError("step_size must lie in (0, 1]")
        if not 0 <= self.prune_threshold < 1:
            raise GroupFormError("prune_threshold must lie in [0, 1)")
        if self.max_steps < 1:
            raise GroupFormError("max_steps must be positive")
        if self.mutation not in MUTATION_MODES:
            raise GroupFormError(f"mutation must be one of {MUTATION_MODES}")


@dataclass(frozen=True)
class EnvState:
    graph: WeightedGraph
    step: int = 0

    def observation(self) -> np.ndarray:
        return self.graph.upper_triangle()


@dataclass(frozen=True)
class EdgeChange:
    i: int
    j: int
    old: float
    new: float


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    breakdown: RewardBreakdown
    done: bool
    modified_edges: list[EdgeChange] = field(default_factory=list)


class ActionClampCounter:
    """Counts actions that arrived outside [-1, 1] and had to be clamped."""

    def __init__(self):
        self.count = 0


clamp_diagnostics = ActionClampCounter()


def normalize_action(alpha: float, counter: ActionClampCounter | None = None) -> float:
    if not -1.0 <= alpha <= 1.0:
        (counter or clamp_diagnostics).count += 1
        alpha = min(1.0, max(-1.0, alpha))
    return (alpha + 1.0) / 2.0


def _check_normalized(g: WeightedGraph) -> None:
    if g.n and g.weights.max() > 1.0:
        raise GroupFormError("initial graph is not normalized: max weight > 1")


def reset(initial_graph: WeightedGraph, cfg: EnvConfig) -> tuple[EnvState, np.random.Generator]:
    """Fresh state at step 0 plus an RNG seeded from ``cfg.seed``."""
    _check_normalized(initial_graph)
    return EnvState(initial_graph, 0), np.random.default_rng(cfg.seed)


def _select_from_matrix(w: np.ndarray, a_prime: float, rng) -> tuple[int, int]:
    i, j = upper_pairs(w.shape[0])
    pw = w[i, j]
    positive = pw > 0
    # zero-mass pairs get an empty cdf interval and can never be drawn
    mass = pw * a_prime if a_prime > 0 else positive.astype(float)
    mass[~positive] = 0.0
    cdf = np.cumsum(mass)
    total = cdf[-1] if len(cdf) else 0.0
    if not total > 0:
        raise NoSelectableEdgeError("no selectable edge")
    u = float(rng.random()) * total
    k = min(int(cdf.searchsorted(u, side="right")), len(cdf) - 1)
    while mass[k] == 0:  # u landed on the top edge of the cdf
        k -= 1
    return int(i[k]), int(j[k])


def select_edge(state: EnvState, a_prime: float, rng) -> tuple[int, int]:
    """Draw an unordered pair ``(i, j)``, ``i < j``, with probability
    proportional to ``w_ij * a_prime`` among positive-weight pairs.

    One uniform variate is consumed per draw (``rng.random()``), which lets
    tests script the draw.
    """
    return _select_from_matrix(state.graph.weights, a_prime, rng)


def edge_probabilities(g: WeightedGraph, a_prime: float) -> dict[tuple[int, int], float]:
    """Exact selection law used by :func:`select_edge`."""
    i, j = upper_pairs(g.n)
    pw = g.weights[i, j]
    keep = pw > 0
    if not keep.any():
        raise NoSelectableEdgeError("no selectable edge")
    mass = pw[keep] * a_prime if a_prime > 0 else np.ones(keep.sum())
    p = mass / mass.sum()
    return {(int(a), int(b)): float(q) for a, b, q in zip(i[keep], j[keep], p)}


def _mutate(w: np.ndarray, alpha: float, cfg: EnvConfig, rng,
            counter: ActionClampCounter | None = None) -> EdgeChange:
    a_prime = normalize_action(alpha, counter)
    alpha = min(1.0, max(-1.0, alpha))
    i, j = _select_from_matrix(w, a_prime, rng)
    old = float(w[i, j])
    delta = cfg.step_size * alpha if cfg.mutation == "signed" else a_prime
    new = min(1.0, max(0.0, old + delta))
    w[i, j] = w[j, i] = new
    return EdgeChange(i, j, old, new)


def apply_action(state: EnvState, alpha: float, rng, cfg: EnvConfig) -> tuple[EnvState, EdgeChange]:
    """Select one edge and move its weight; the step counter is untouched."""
    w = np.array(state.graph.weights)
    change = _mutate(w, alpha, cfg, rng)
    return EnvState(state.graph.with_weights(w), state.step), change


def _reward_from_matrix(w: np.ndarray, cfg: EnvConfig) -> RewardBreakdown:
    n = w.shape[0]
    tau = cfg.prune_threshold
    oc = _overall_connectivity(w)
    var = _degree_variance(w, cfg.weighted_degree, tau)
    pl = _average_path_length(w, tau)
    pd = _dominance_penalty(w, cfg.weighted_degree, tau)
    l_oc, l_var, l_pl, l_pd = cfg.reward_weights
    composite = l_oc * oc - l_var * var - l_pl * (pl / n) - l_pd * (pd / (n - 1))
    return RewardBreakdown(oc, var, pl, pd, composite)


def composite_reward(g: WeightedGraph, cfg: EnvConfig) -> RewardBreakdown:
    """Linear blend: connectivity is rewarded; degree spread, path length
    (scaled by ``n``) and dominance (scaled by ``n - 1``) are penalized."""
    return _reward_from_matrix(g.weights, cfg)


def step(state: EnvState, joint_actions: Sequence[float], cfg: EnvConfig, rng,
         counter: ActionClampCounter | None = None) -> StepOutcome:
    n = state.graph.n
    if len(joint_actions) != n:
        raise GroupFormError(f"expected {n} actions (one per participant), got {len(joint_actions)}")
    w = np.array(state.graph.weights)
    changes = []
    for alpha in joint_actions:
        # a fully pruned graph has nothing left to select; later agents idle
        if not (w > 0).any():
            break
        changes.append(_mutate(w, float(alpha), cfg, rng, counter))
    breakdown = _reward_from_matrix(w, cfg)
    nxt = EnvState(state.graph.with_weights(w), state.step + 1)
    return StepOutcome(nxt, breakdown.composite, breakdown, nxt.step >= cfg.max_steps, changes)


class GraphEnv:
    """Stateful wrapper: owns the current state and the edge-draw RNG."""

    def __init__(self, initial_graph: WeightedGraph, cfg: EnvConfig):
        _check_normalized(initial_graph)
        self.initial_graph = initial_graph
        self.cfg = cfg
        self.clamps = ActionClampCounter()
        self.state: EnvState | None = None
        self.rng: np.random.Generator | None = None

    @property
    def n_agents(self) -> int:
        return self.initial_graph.n

    @property
    def observation_size(self) -> int:
        n = self.initial_graph.n
        return n * (n - 1) // 2

    def reset(self, seed: int | None = None) -> np.ndarray:
        cfg = self.cfg if seed is None else replace(self.cfg, seed=seed)
        self.state, self.rng = reset(self.initial_graph, cfg)
        return self.state.observation()

    def step(self, joint_actions: Sequence[float]) -> StepOutcome:
        if self.state is None:
            raise GroupFormError("reset() must be called before step()")
        outcome = step(self.state, joint_actions, self.cfg, self.rng, self.clamps)
        self.state = outcome.next_state
        return outcome

