"""Collaboration graphs built from coded interaction records, and the
four structural metrics used as reward terms.

Participants become nodes; two members of the same group are linked by
the number of distinct thematic codes they share inside that group.
"""

from __future__ import annotations

import csv
import itertools
from collections import defaultdict
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGraphError, MetricUndefinedError, RecordError

RECORD_FIELDS = ("participant", "group", "task", "code")
DEFAULT_PRUNE_THRESHOLD = 0.05


def standardize(value: str) -> str:
    return value.strip().casefold()


@dataclass(frozen=True)
class InteractionRecord:
    participant: str
    group: str
    task: str
    code: str

    @classmethod
    def from_raw(cls, participant: str, group: str, task: str, code: str,
                 row: int | None = None) -> "InteractionRecord":
        values = [standardize(str(v)) for v in (participant, group, task, code)]
        for name, value in zip(RECORD_FIELDS, values):
            if not value:
                where = f"row {row}" if row is not None else "record"
                raise RecordError(f"{where}: empty field '{name}'")
        return cls(*values)


def read_records(path: str | Path) -> list[InteractionRecord]:
    """Parse a ``participant,group,task,code`` CSV file.

    Line numbers in error messages count the header as line 1.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecordError("line 1: missing header") from None
        if tuple(standardize(h) for h in header) != RECORD_FIELDS:
            raise RecordError(f"line 1: expected header {','.join(RECORD_FIELDS)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(RECORD_FIELDS):
                raise RecordError(f"line {line}: expected 4 fields, got {len(row)}")
            try:
                records.append(InteractionRecord.from_raw(*row))
            except RecordError as exc:
                raise RecordError(f"line {line}: {str(exc).removeprefix('record: ')}") from None
    if not records:
        raise RecordError("no records")
    return records


def write_records(records: Iterable[InteractionRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow((r.participant, r.group, r.task, r.code))


@lru_cache(maxsize=64)
def upper_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major ``(i, j)`` index arrays of the pairs ``i < j`` (cached)."""
    i, j = np.triu_indices(n, k=1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def _frozen(weights: np.ndarray) -> np.ndarray:
    w = np.array(weights, dtype=float, copy=True)
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph as a symmetric weight matrix with zero diagonal.

    The matrix is read-only; operations that change weights return a new
    graph. ``labels`` holds the participant name for each node index.
    """

    weights: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight matrix has non-finite entries")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not np.array_equal(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weight matrix must have a zero diagonal")
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(len(w)))
        if len(labels) != len(w):
            raise ValueError("one label per node required")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def upper_triangle(self) -> np.ndarray:
        """Row-major upper triangle, length n(n-1)/2."""
        return self.weights[upper_pairs(self.n)]

    def edge_count(self, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> int:
        return int(np.count_nonzero(self.upper_triangle() > threshold))

    def edges(self, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> list[tuple[int, int, float]]:
        i, j = upper_pairs(self.n)
        w = self.weights[i, j]
        keep = w > threshold
        return [(int(a), int(b), float(c)) for a, b, c in zip(i[keep], j[keep], w[keep])]

    def with_weights(self, weights: np.ndarray) -> "WeightedGraph":
        return WeightedGraph(weights, self.labels)

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.weights, other.weights)

    __hash__ = None


def participant_index(records: Sequence[InteractionRecord]) -> dict[str, int]:
    """Dense ids in first-appearance order."""
    index: dict[str, int] = {}
    for r in records:
        index.setdefault(r.participant, len(index))
    return index


def build_graph(records: Sequence[InteractionRecord],
                participants: Sequence[str] | None = None) -> WeightedGraph:
    """Raw integer co-coding weights.

    ``participants`` pins the node order; by default ids follow first
    appearance in ``records``. Weights accumulate over groups when a pair
    shares more than one group.
    """
    if not records:
        raise RecordError("no records")
    for row, r in enumerate(records, start=1):
        for name in RECORD_FIELDS:
            if not getattr(r, name):
                raise RecordError(f"row {row}: empty field '{name}'")

    if participants is None:
        index = participant_index(records)
    else:
        index = {p: i for i, p in enumerate(participants)}
        missing = {r.participant for r in records} - index.keys()
        if missing:
            raise RecordError(f"participants missing from pinned order: {sorted(missing)}")

    codes: dict[str, dict[int, set[str]]] = defaultdict(lambda: defaultdict(set))
    for r in records:
        codes[r.group][index[r.participant]].add(r.code)

    n = len(index)
    w = np.zeros((n, n))
    for members in codes.values():
        for (a, ca), (b, cb) in itertools.combinations(members.items(), 2):
            shared = len(ca & cb)
            w[a, b] += shared
            w[b, a] += shared

    labels = sorted(index, key=index.__getitem__)
    return WeightedGraph(w, tuple(labels))


def normalize_weights(g: WeightedGraph) -> WeightedGraph:
    top = g.weights.max() if g.n else 0.0
    if top <= 0:
        raise DegenerateGraphError("degenerate graph: no interactions")
    return g.with_weights(g.weights / top)


# --- metrics -----------------------------------------------------------
#
# The public functions take a WeightedGraph. The underscore variants work
# on a bare matrix so the environment can score its working copy directly.

def _degrees(w: np.ndarray, weighted: bool, threshold: float) -> np.ndarray:
    if weighted:
        return w.sum(axis=1)
    return (w > threshold).sum(axis=1).astype(float)


def _overall_connectivity(w: np.ndarray) -> float:
    n = w.shape[0]
    if n < 2:
        raise MetricUndefinedError("metric undefined: need at least 2 nodes")
    return float(np.triu(w, k=1).sum() / (n * (n - 1) / 2))


def _degree_variance(w: np.ndarray, weighted: bool = True,
                     threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    d = _degrees(w, weighted, threshold)
    return float(np.mean((d - d.mean()) ** 2))


def _dominance_penalty(w: np.ndarray, weighted: bool = True,
                       threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    d = _degrees(w, weighted, threshold)
    return float(d.max() - d.mean())


def hop_distances(adjacency: np.ndarray) -> np.ndarray:
    """All-pairs hop counts by breadth-first frontier expansion.

    Unreachable pairs are -1.
    """
    n = adjacency.shape[0]
    adj = adjacency.astype(np.int64)
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    reached = np.eye(n, dtype=bool)
    frontier = reached.copy()
    hops = 0
    while frontier.any():
        hops += 1
        frontier = ((frontier.astype(np.int64) @ adj) > 0) & ~reached
        dist[frontier] = hops
        reached |= frontier
    return dist


def _average_path_length(w: np.ndarray, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    n = w.shape[0]
    if n < 2:
        raise MetricUndefinedError("metric undefined: need at least 2 nodes")
    dist = hop_distances(w > threshold)
    upper = dist[upper_pairs(n)]
    upper = np.where(upper < 0, n, upper)
    return float(upper.sum() / (n * (n - 1) / 2))


def overall_connectivity(g: WeightedGraph) -> float:
    """Sum of pair weights over the number of node pairs."""
    return _overall_connectivity(g.weights)


def weighted_degree(g: WeightedGraph, i: int) -> float:
    if not 0 <= i < g.n:
        raise IndexError(f"participant {i} out of range for n={g.n}")
    return float(g.weights[i].sum())


def degree_variance(g: WeightedGraph, weighted: bool = True,
                    threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    """Population variance of node degrees (strength when ``weighted``)."""
    return _degree_variance(g.weights, weighted, threshold)


def average_path_length(g: WeightedGraph, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    """Mean hop distance over all pairs of the graph binarized at ``threshold``.

    A disconnected pair counts as ``n`` hops, so the value is bounded for
    every graph.
    """
    return _average_path_length(g.weights, threshold)


def dominance_penalty(g: WeightedGraph, weighted: bool = True,
                      threshold: float = DEFAULT_PRUNE_THRESHOLD) -> float:
    """Gap between the largest and the mean degree."""
    return _dominance_penalty(g.weights, weighted, threshold)


@dataclass(frozen=True)
class RewardBreakdown:
    oc: float
    var: float
    pl: float
    pd: float
    composite: float
