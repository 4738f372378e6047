"""Command-line interface.

Subcommands: topo gen, dataset gen, train, eval, baseline embed,
embed validate, report qer, report convergence.
Exit codes: 0 success, 2 configuration error, 3 run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baseline as bl
from . import evaluation as ev
from . import ppo
from . import problems as pr
from . import topology as topo
from .augmentation import AugmentationSampler
from .embedding import embedding_from_json, embedding_to_json, validate_embedding
from .environment import EmbeddingEnv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3


def _add_topology_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=[topo.CHIMERA, topo.ZEPHYR], required=True)
    p.add_argument("--size", type=int, required=True, metavar="M", help="unit cells per side")


def _load_graph_arg(args) -> pr.ProblemGraph:
    if getattr(args, "complete", None):
        return pr.complete_graph(args.complete)
    if getattr(args, "graph", None):
        return pr.graph_from_json(Path(args.graph).read_text())
    raise ev.ConfigError("provide --graph FILE or --complete N")


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    """Values from --config FILE fill in any attribute still at None."""
    if not getattr(args, "config", None):
        return args
    cfg = json.loads(Path(args.config).read_text())
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def cmd_topo_gen(args) -> int:
    h = topo.build_hardware(args.family, args.size)
    topo.write_topology(h, args.out)
    print(f"{args.family} m={args.size}: {h.node_count} nodes, {h.edge_count} edges -> {args.out}")
    return EXIT_OK


def cmd_dataset_gen(args) -> int:
    manifest = pr.build_dataset(
        args.out,
        min_n=args.min_n,
        max_n=args.max_n,
        train_target=args.train,
        test_target=args.test,
        seed=args.seed,
    )
    for n, counts in sorted(manifest.counts.items()):
        line = f"n={n}: {counts['train']} train / {counts['test']} test"
        if manifest.skipped.get(n):
            line += f" ({len(manifest.skipped[n])} slots skipped)"
        print(line)
    return EXIT_OK


def cmd_train(args) -> int:
    args = _apply_config_file(args)
    if args.steps is None:
        args.steps = 1_000_000 if args.scenario == "complete" else 3_000_000
    hardware = topo.build_hardware(args.family, args.size)
    hp = ppo.Hyperparams(total_steps=args.steps, seed=args.seed)
    if args.scenario == "complete":
        g = pr.complete_graph(args.g_size)
        source = ppo.constant_graph_source(g)
        max_nodes = args.max_nodes or g.n
    else:
        if not args.dataset:
            raise ev.ConfigError("dataset scenario needs --dataset DIR")
        graphs = pr.load_dataset(args.dataset, split="train")
        graphs = {n: gs for n, gs in graphs.items() if gs}
        source = ppo.dataset_graph_source(graphs, np.random.default_rng(hp.seed))
        max_nodes = args.max_nodes or max(graphs)
    env = EmbeddingEnv(hardware, max_nodes=max_nodes)
    sampler = AugmentationSampler(hardware, seed=hp.seed) if args.augment != "off" else None
    result = ppo.train(source, env, hp, augment_sampler=sampler, log_every=args.log_every)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ppo.save_checkpoint(
        out,
        result.policy,
        result.value,
        hp,
        result.steps_trained,
        extra={
            "topology": {"family": hardware.family, "m": hardware.m},
            "max_nodes": max_nodes,
            "augment": args.augment,
        },
    )
    ppo.write_trace_csv(result.trace, str(out) + ".trace.csv")
    sr = 100.0 * result.successes / max(result.episodes, 1)
    print(
        f"trained {result.steps_trained} steps, {result.episodes} episodes "
        f"(train SR {sr:.1f}%) -> {out}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    args = _apply_config_file(args)
    hardware = topo.build_hardware(args.family, args.size)
    if args.scenario == "complete":
        graphs = [pr.complete_graph(args.g_size)]
    else:
        if not args.dataset:
            raise ev.ConfigError("dataset scenario needs --dataset DIR")
        by_n = pr.load_dataset(args.dataset, split=args.split)
        graphs = [g for n in sorted(by_n) for g in by_n[n] if g.n <= (args.max_g or 10**9)]
    records = ev.evaluate(
        args.checkpoint,
        hardware,
        graphs,
        episodes=args.episodes,
        augment=args.augment,
        csv_path=args.out,
        greedy=args.greedy,
    )
    agg = ev.aggregate(records)
    best = agg.best_qubits if agg.best_qubits is not None else "-"
    print(f"{agg.episodes} episodes, SR {agg.sr:.1f}%, best qubits {best} -> {args.out}")
    return EXIT_OK


def cmd_baseline_embed(args) -> int:
    hardware = topo.build_hardware(args.family, args.size)
    cfg = bl.BaselineConfig(tries=args.tries, seed=args.seed)
    if args.dataset:
        by_n = pr.load_dataset(args.dataset, split=args.split)
        graphs = [g for n in sorted(by_n) for g in by_n[n]]
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            fh.write("graph_id,n,success,best_qubits\n")
            for g in graphs:
                res = bl.heuristic_embed(g, hardware, cfg)
                fh.write(f"{g.graph_id},{g.n},{int(res.success)},{res.qubits if res.success else ''}\n")
        print(f"baseline over {len(graphs)} graphs -> {out}")
        return EXIT_OK
    g = _load_graph_arg(args)
    res = bl.heuristic_embed(g, hardware, cfg)
    if not res.success:
        fails = sum(1 for r in res.reports if not r.success)
        print(f"no valid embedding in {cfg.tries} tries ({fails} failures)", file=sys.stderr)
        return EXIT_RUN
    Path(args.out).write_text(embedding_to_json(res.embedding))
    print(f"embedded with {res.qubits} qubits in {cfg.tries} tries -> {args.out}")
    return EXIT_OK


def cmd_embed_validate(args) -> int:
    g = _load_graph_arg(args)
    hardware = topo.build_hardware(args.family, args.size)
    e = embedding_from_json(Path(args.embedding).read_text())
    verdict = validate_embedding(g, hardware, e)
    if verdict.valid:
        print(f"valid minor, {sum(len(c) for c in e.chains)} qubits")
        return EXIT_OK
    print(f"invalid: {verdict.clause} ({verdict.detail})", file=sys.stderr)
    return EXIT_RUN


def cmd_report_qer(args) -> int:
    import pandas as pd

    from . import report

    rl_records = ev.read_records_csv(args.rl)
    baseline_df = pd.read_csv(args.baseline)
    if "n" in baseline_df.columns:
        sizes = dict(zip(baseline_df["graph_id"], baseline_df["n"]))
    else:
        sizes = {}
    if args.dataset:
        by_n = pr.load_dataset(args.dataset)
        sizes = {g.graph_id: n for n, gs in by_n.items() for g in gs}
    csv_path = report.write_qer_report(rl_records, baseline_df, sizes, args.out)
    table = pd.read_csv(csv_path)
    with_qer = table.dropna(subset=["qer"])
    if len(with_qer):
        print(
            f"{len(table)} graphs, mean QER {with_qer['qer'].mean():.3f}, "
            f"best QER {with_qer['qer'].max():.3f} -> {csv_path}"
        )
    else:
        print(f"{len(table)} graphs, QER undefined (no agent success) -> {csv_path}")
    return EXIT_OK


def cmd_report_convergence(args) -> int:
    import pandas as pd

    from . import report

    traces = {Path(t).stem: pd.read_csv(t) for t in args.trace}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.render_convergence_figure(traces, out)
    print(f"convergence figure over {len(traces)} trace(s) -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlminor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_topo = sub.add_parser("topo", help="hardware topologies").add_subparsers(dest="sub", required=True)
    p = p_topo.add_parser("gen", help="generate a hardware graph edge list")
    _add_topology_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_topo_gen)

    p_ds = sub.add_parser("dataset", help="problem-graph corpus").add_subparsers(dest="sub", required=True)
    p = p_ds.add_parser("gen", help="generate the random-graph corpus")
    p.add_argument("--min-n", type=int, default=3)
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("--train", type=int, default=1000)
    p.add_argument("--test", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_gen)

    p = sub.add_parser("train", help="train one PPO agent")
    p.add_argument("--scenario", choices=["complete", "dataset"], default="complete")
    _add_topology_args(p)
    p.add_argument("--g-size", type=int, default=6, help="complete-graph size")
    p.add_argument("--dataset", help="dataset directory (dataset scenario)")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--max-nodes", type=int, default=None, help="observation padding size")
    p.add_argument("--augment", choices=["off", "train", "train+test"], default="off")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=None)
    p.add_argument("--config", help="JSON file with defaults for unset flags")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints")
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--scenario", choices=["complete", "dataset"], default="complete")
    _add_topology_args(p)
    p.add_argument("--g-size", type=int, default=6)
    p.add_argument("--dataset")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--max-g", type=int, default=None)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--augment", choices=["off", "train+test"], default="off")
    p.add_argument("--greedy", action="store_true", help="argmax instead of sampling")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p_base = sub.add_parser("baseline", help="heuristic embedder").add_subparsers(dest="sub", required=True)
    p = p_base.add_parser("embed", help="best-of-N heuristic embedding")
    p.add_argument("--graph", help="problem graph JSON")
    p.add_argument("--complete", type=int, help="use a complete graph of this size")
    p.add_argument("--dataset", help="run over a dataset directory, writing a CSV")
    p.add_argument("--split", choices=["train", "test"], default="test")
    _add_topology_args(p)
    p.add_argument("--tries", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline_embed)

    p_embed = sub.add_parser("embed", help="embedding utilities").add_subparsers(dest="sub", required=True)
    p = p_embed.add_parser("validate", help="check an embedding JSON against a graph")
    p.add_argument("--graph", help="problem graph JSON")
    p.add_argument("--complete", type=int)
    _add_topology_args(p)
    p.add_argument("--embedding", required=True)
    p.set_defaults(func=cmd_embed_validate)

    p_rep = sub.add_parser("report", help="aggregate reports and figures").add_subparsers(dest="sub", required=True)
    p = p_rep.add_parser("qer", help="SR/QER summary CSV + figure")
    p.add_argument("--rl", required=True, help="evaluation records CSV")
    p.add_argument("--baseline", required=True, help="baseline CSV (graph_id,n,success,best_qubits)")
    p.add_argument("--dataset", help="dataset directory, to label graph sizes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report_qer)
    p = p_rep.add_parser("convergence", help="episode-length convergence figure")
    p.add_argument("--trace", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report_convergence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ev.ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # run failures
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
