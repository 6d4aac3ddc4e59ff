"""Command-line entry point: ``groupform <subcommand> ...``.

Failures print a single ``error: <message>`` line on stderr and exit
non-zero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import exchange
from .clustering import cluster, validate_assignment
from .errors import GroupFormError
from .graph import build_graph, normalize_weights, read_records, write_records
from .maddpg import decile_means, train
from .runconfig import RunConfig, resolve
from .synthetic import generate_records

log = logging.getLogger("groupform")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser, names) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, metavar="VALUE")


def _overrides(args, names) -> dict:
    return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}


TRAIN_KEYS = [f.name for f in fields(RunConfig) if f.name not in ("k", "cap", "strategy")]
CLUSTER_KEYS = ["k", "cap", "strategy", "seed", "graph", "out"]


def _load_initial_graph(cfg: RunConfig):
    if cfg.graph:
        g = exchange.load_graph(cfg.graph)
        return g if g.weights.max() <= 1.0 else normalize_weights(g)
    if cfg.records:
        return normalize_weights(build_graph(read_records(cfg.records)))
    raise GroupFormError("train needs --graph or --records")


def cmd_build_graph(args) -> int:
    g = normalize_weights(build_graph(read_records(args.records)))
    exchange.save_graph(g, args.out)
    stats = exchange.graph_stats(g, args.prune_threshold)
    stats_path = Path(args.stats) if args.stats else Path(args.out).with_suffix(".stats.json")
    stats_path.write_text(json.dumps(stats, indent=1) + "\n", encoding="utf-8")
    print(" ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in stats.items()))
    return 0


def cmd_train(args) -> int:
    cfg = resolve(args.config, _overrides(args, TRAIN_KEYS))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    g = _load_initial_graph(cfg)
    env_cfg, train_cfg = cfg.env_config(), cfg.train_config()
    cfg.save(out / "config.txt")

    def report(rec):
        if rec.episode % max(1, train_cfg.episodes // 20) == 0:
            log.info("episode %d score %.4f", rec.episode, rec.score)

    result = train(g, env_cfg, train_cfg, on_episode=report)
    exchange.write_scores(result.history, out / "scores.csv")
    exchange.save_graph(g, out / "initial_graph.json")
    exchange.save_graph(result.final_graph, out / "final_graph.json")
    result.checkpoint().save(out / "checkpoint.bin")
    first, last = decile_means(result.scores)
    tau = env_cfg.prune_threshold
    print(f"first_decile_mean={first:.6f} last_decile_mean={last:.6f} "
          f"edges_initial={g.edge_count(tau)} edges_final={result.final_graph.edge_count(tau)}")
    return 0


def cmd_cluster(args) -> int:
    cfg = resolve(args.config, _overrides(args, CLUSTER_KEYS))
    if not cfg.graph:
        raise GroupFormError("cluster needs --graph")
    g = exchange.load_graph(cfg.graph)
    ccfg = cfg.cluster_config()
    assignment = cluster(g, ccfg)
    ok, reasons = validate_assignment(assignment, ccfg, g.n)
    if not ok:
        raise GroupFormError("invalid assignment: " + "; ".join(reasons))
    out = Path(cfg.out)
    if out.is_dir():
        out = out / "groups.csv"
    exchange.write_groups(assignment, out)
    cfg.save(out.with_suffix(".config.txt"))
    print(f"groups={ccfg.k} participants={g.n} sizes={','.join(map(str, assignment.sizes()))}")
    return 0


def cmd_export(args) -> int:
    g = exchange.load_graph(args.graph)
    exchange.export_graph(g, args.out, args.format, args.prune_threshold, args.include_pruned)
    print(f"format={args.format} nodes={g.n} edges={g.edge_count(args.prune_threshold)}")
    return 0


def cmd_gen_synthetic(args) -> int:
    records = generate_records(args.participants, args.groups, args.codes, args.density,
                               args.seed, args.tasks)
    write_records(records, args.out)
    print(f"records={len(records)} participants={args.participants}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupform",
                     description="Build participant graphs, optimize them and form groups.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-graph", help="records CSV -> normalized graph + stats")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="stats JSON path (default: <out>.stats.json)")
    p.add_argument("--prune-threshold", type=float, default=RunConfig.prune_threshold)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="optimize a graph with multi-agent DDPG")
    _add_config_flags(p, TRAIN_KEYS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cluster", help="size-capped groups from a graph")
    _add_config_flags(p, CLUSTER_KEYS)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("export", help="write a graph in an exchange format")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="nodelink", help="nodelink, edgelist or gexf")
    p.add_argument("--prune-threshold", type=float, default=RunConfig.prune_threshold)
    p.add_argument("--include-pruned", action="store_true",
                   help="keep sub-threshold weights as edges flagged pruned")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("gen-synthetic", help="write a synthetic records CSV")
    p.add_argument("--participants", type=int, default=48)
    p.add_argument("--groups", type=int, default=10)
    p.add_argument("--codes", type=int, default=8)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--tasks", type=int, default=11)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (GroupFormError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
