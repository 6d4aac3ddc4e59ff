"""Reading and writing graphs, score tables and group tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np

from .clustering import ClusterAssignment
from .errors import GroupFormError
from .graph import (
    DEFAULT_PRUNE_THRESHOLD,
    WeightedGraph,
    average_path_length,
    degree_variance,
    dominance_penalty,
    overall_connectivity,
    upper_pairs,
)

GRAPH_FORMAT = "groupform.graph"
GRAPH_VERSION = 1
EXPORT_FORMATS = ("nodelink", "edgelist", "gexf")
SCORE_COLUMNS = ("episode", "score", "oc", "var", "pl", "pd")


def save_graph(g: WeightedGraph, path: str | Path) -> None:
    """Native graph file: the full weight matrix as JSON. Floats are
    written with shortest round-trip repr, so loading is exact."""
    doc = {
        "format": GRAPH_FORMAT,
        "version": GRAPH_VERSION,
        "labels": list(g.labels),
        "weights": g.weights.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> WeightedGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise GroupFormError(f"cannot read graph file {path}: {exc}") from None
    if doc.get("format") != GRAPH_FORMAT:
        raise GroupFormError(f"{path}: not a {GRAPH_FORMAT} file")
    if doc.get("version") != GRAPH_VERSION:
        raise GroupFormError(f"{path}: unsupported graph version {doc.get('version')}")
    try:
        return WeightedGraph(np.array(doc["weights"], dtype=float).reshape(-1, len(doc["labels"])),
                             tuple(doc["labels"]))
    except ValueError as exc:
        raise GroupFormError(f"{path}: {exc}") from None


def to_networkx(g: WeightedGraph, threshold: float = DEFAULT_PRUNE_THRESHOLD,
                include_pruned: bool = False) -> nx.Graph:
    """Edges above ``threshold``; with ``include_pruned`` the positive
    weights at or below it are kept too, flagged ``pruned=True``."""
    G = nx.Graph()
    for i, label in enumerate(g.labels):
        G.add_node(i, label=label)
    for i, j in zip(*upper_pairs(g.n)):
        w = float(g.weights[i, j])
        if w > threshold:
            G.add_edge(int(i), int(j), weight=w, pruned=False)
        elif include_pruned and w > 0:
            G.add_edge(int(i), int(j), weight=w, pruned=True)
    return G


def from_networkx(G: nx.Graph) -> WeightedGraph:
    nodes = sorted(G.nodes)
    if nodes != list(range(len(nodes))):
        raise GroupFormError("node ids must be 0..n-1")
    w = np.zeros((len(nodes), len(nodes)))
    for u, v, data in G.edges(data=True):
        w[u, v] = w[v, u] = float(data.get("weight", 1.0))
    labels = tuple(str(G.nodes[i].get("label", i)) for i in nodes)
    return WeightedGraph(w, labels)


def export_graph(g: WeightedGraph, path: str | Path, fmt: str = "nodelink",
                 threshold: float = DEFAULT_PRUNE_THRESHOLD, include_pruned: bool = False) -> None:
    if fmt not in EXPORT_FORMATS:
        raise GroupFormError(f"unknown format {fmt!r}; choose from {', '.join(EXPORT_FORMATS)}")
    G = to_networkx(g, threshold, include_pruned)
    if fmt == "nodelink":
        data = nx.node_link_data(G, edges="edges")
        data["graph"] = {"threshold": threshold}
        Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    elif fmt == "gexf":
        with open(path, "wb") as fh:
            nx.write_gexf(G, fh)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# threshold {threshold!r}\n")
            fh.write("# node <id> <label> | edge <source> <target> <weight> <pruned>\n")
            for i, label in enumerate(g.labels):
                fh.write(f"node\t{i}\t{label}\n")
            for u, v, data in G.edges(data=True):
                fh.write(f"edge\t{u}\t{v}\t{data['weight']!r}\t{int(data['pruned'])}\n")


def import_graph(path: str | Path, fmt: str = "nodelink") -> WeightedGraph:
    if fmt not in EXPORT_FORMATS:
        raise GroupFormError(f"unknown format {fmt!r}; choose from {', '.join(EXPORT_FORMATS)}")
    if fmt == "nodelink":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return from_networkx(nx.node_link_graph(data, edges="edges"))
    if fmt == "gexf":
        with open(path, "rb") as fh:
            return from_networkx(nx.read_gexf(fh, node_type=int))
    G = nx.Graph()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "node" and len(parts) == 3:
                G.add_node(int(parts[1]), label=parts[2])
            elif parts[0] == "edge" and len(parts) == 5:
                G.add_edge(int(parts[1]), int(parts[2]), weight=float(parts[3]),
                           pruned=bool(int(parts[4])))
            else:
                raise GroupFormError(f"{path}: line {lineno}: malformed entry")
    return from_networkx(G)


def graph_stats(g: WeightedGraph, threshold: float = DEFAULT_PRUNE_THRESHOLD,
                weighted: bool = True) -> dict:
    return {
        "n": g.n,
        "edges": g.edge_count(threshold),
        "oc": overall_connectivity(g),
        "var": degree_variance(g, weighted, threshold),
        "pl": average_path_length(g, threshold),
        "pd": dominance_penalty(g, weighted, threshold),
    }


def write_scores(history: Iterable, path: str | Path) -> None:
    """One row per episode; floats in shortest round-trip form."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for rec in history:
            b = rec.final
            w.writerow([rec.episode, repr(rec.score), repr(b.oc), repr(b.var), repr(b.pl), repr(b.pd)])


def read_scores(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: (int(v) if k == "episode" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]


def write_groups(a: ClusterAssignment, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("group", "participant_ids"))
        for c, members in enumerate(a.groups()):
            w.writerow((c, ", ".join(str(p) for p in members)))


def read_groups(path: str | Path) -> list[list[int]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [[int(p) for p in r["participant_ids"].split(",") if p.strip()] for r in rows]
