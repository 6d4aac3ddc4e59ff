"""Size-capped partitioning of participants into a fixed number of groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityExceededError, GroupFormError
from .graph import WeightedGraph

STRATEGIES = ("occupancy", "weight_greedy")


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    cap: int | None = None
    seed: int = 0
    strategy: str = "occupancy"

    def __post_init__(self):
        if self.k < 1:
            raise GroupFormError("k must be positive")
        if self.cap is not None and self.cap < 1:
            raise GroupFormError("cap must be positive")
        if self.strategy not in STRATEGIES:
            raise GroupFormError(f"strategy must be one of {STRATEGIES}")

    def resolved_cap(self, n: int) -> int:
        return self.cap if self.cap is not None else max(1, math.ceil(n / self.k))

    def check_feasible(self, n: int) -> None:
        cap = self.resolved_cap(n)
        if self.k * cap < n:
            raise CapacityExceededError(
                f"capacity exceeded: k*cap = {self.k}*{cap} < {n} participants")


@dataclass(frozen=True)
class ClusterAssignment:
    """Participant id -> cluster index, in assignment order."""

    assignment: dict[int, int]
    k: int

    def groups(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for pid, c in self.assignment.items():
            out[c].append(pid)
        return out

    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups()]


def occupancy_constrained_clustering(participants: Sequence[int], cfg: ClusterConfig,
                                     rng: np.random.Generator) -> ClusterAssignment:
    """Shuffle, then hand each participant to the emptiest open cluster.

    Ties go to the lowest cluster index; a cluster that reaches the cap is
    closed.
    """
    n = len(participants)
    cfg.check_feasible(n)
    cap = cfg.resolved_cap(n)
    order = list(participants)
    rng.shuffle(order)
    counts = [0] * cfg.k
    open_clusters = list(range(cfg.k))
    assignment = {}
    for pid in order:
        target = min(open_clusters, key=lambda c: (counts[c], c))
        assignment[int(pid)] = target
        counts[target] += 1
        if counts[target] >= cap:
            open_clusters.remove(target)
    return ClusterAssignment(assignment, cfg.k)


def weight_greedy_constrained_clustering(g: WeightedGraph, cfg: ClusterConfig,
                                         rng: np.random.Generator) -> ClusterAssignment:
    """Like the occupancy rule, but each participant joins the open cluster
    with the largest total edge weight to its current members; occupancy
    and then cluster index break ties."""
    n = g.n
    cfg.check_feasible(n)
    cap = cfg.resolved_cap(n)
    order = rng.permutation(n)
    members: list[list[int]] = [[] for _ in range(cfg.k)]
    assignment = {}
    for pid in order:
        pid = int(pid)
        best, best_key = None, None
        for c in range(cfg.k):
            if len(members[c]) >= cap:
                continue
            pull = float(g.weights[pid, members[c]].sum()) if members[c] else 0.0
            key = (-pull, len(members[c]), c)
            if best_key is None or key < best_key:
                best, best_key = c, key
        members[best].append(pid)
        assignment[pid] = best
    return ClusterAssignment(assignment, cfg.k)


def cluster(g: WeightedGraph, cfg: ClusterConfig) -> ClusterAssignment:
    rng = np.random.default_rng(cfg.seed)
    if cfg.strategy == "occupancy":
        return occupancy_constrained_clustering(range(g.n), cfg, rng)
    return weight_greedy_constrained_clustering(g, cfg, rng)


def validate_assignment(a: ClusterAssignment, cfg: ClusterConfig, n: int,
                        pairs: Sequence[tuple[int, int]] | None = None) -> tuple[bool, list[str]]:
    """Check every assignment invariant; returns ``(ok, reasons)``.

    ``pairs`` may supply raw ``(participant, cluster)`` rows, which is the
    only way a double assignment can be represented.
    """
    reasons = []
    rows = list(pairs) if pairs is not None else list(a.assignment.items())
    cap = cfg.resolved_cap(n)
    seen = set()
    for pid, c in rows:
        if pid in seen:
            reasons.append(f"double assignment: participant {pid}")
        seen.add(pid)
        if not 0 <= pid < n:
            reasons.append(f"unknown participant {pid}")
        if not 0 <= c < cfg.k:
            reasons.append(f"cluster index {c} out of range")
    missing = set(range(n)) - seen
    if missing:
        reasons.append(f"unassigned participants: {sorted(missing)}")
    sizes = [0] * cfg.k
    for _, c in rows:
        if 0 <= c < cfg.k:
            sizes[c] += 1
    for c, s in enumerate(sizes):
        if s > cap:
            reasons.append(f"cap exceeded: cluster {c} has {s} > {cap}")
    return not reasons, reasons
