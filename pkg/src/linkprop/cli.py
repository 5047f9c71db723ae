"""Command-line entry point.

Subcommands map to pipeline stages (ingest, split, train, evaluate), plus
the dual-path verification harness and the full experiment orchestrator
(report).  Heavy imports happen inside handlers so the thread-count
environment variable can take effect before numpy loads its BLAS.
"""

from __future__ import annotations

import argparse
import os
import sys

EPILOG = """environment:
  LINKPROP_THREADS   pin BLAS/OpenMP thread count (set before numpy loads;
                     required for bit-reproducible reports across runs)
  LINKPROP_OUTDIR    default output directory for train/report artifacts
"""

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
               "NUMEXPR_NUM_THREADS")


def _apply_thread_env():
    threads = os.environ.get("LINKPROP_THREADS")
    if threads:
        for var in THREAD_VARS:
            os.environ.setdefault(var, threads)


def _default_outdir(flag_value):
    if flag_value:
        return flag_value
    return os.environ.get("LINKPROP_OUTDIR", "runs/out")


def cmd_ingest(args) -> int:
    from linkprop.data_io import load_edge_list, write_canonical, graph_density_pct
    dataset = load_edge_list(args.input, args.format)
    graph = dataset.to_graph()
    write_canonical(dataset, args.output)
    density, _ = graph_density_pct(graph)
    print(f"{args.output}: {graph.partition.num_users} users, "
          f"{graph.partition.num_items} items, {graph.num_edges} links, "
          f"density {density:.3f}%")
    return 0


def cmd_split(args) -> int:
    from linkprop.data_io import load_edge_list, save_splits, split_dataset
    dataset = load_edge_list(args.input, args.format)
    splits = split_dataset(dataset.to_graph(), tuple(args.ratios), args.seed)
    save_splits(dataset, splits, args.outdir)
    print(f"{args.outdir}: train {splits.train.shape[0]}, "
          f"val {splits.val.shape[0]}, test {splits.test.shape[0]} "
          f"({len(splits.flagged)} users without test edges)")
    return 0


def cmd_train(args) -> int:
    import numpy as np
    from linkprop.data_io import graph_from_split, load_splits
    from linkprop.diagnostics import emit_trajectories
    from linkprop.negatives import sample_negatives
    from linkprop.training import TrainConfig, train
    _, splits = load_splits(args.splits)
    graph = graph_from_split(splits)
    config = TrainConfig(model=args.model, alpha=args.alpha, dim=args.dim,
                         beta=args.beta, lam=args.lam, window=args.window,
                         layers=args.layers, max_epochs=args.epochs,
                         patience=args.patience, path=args.path,
                         init_scale=args.init_scale, seed=args.seed,
                         eval_every=args.eval_every, eval_k=args.k,
                         trace_substeps=args.trace)
    negatives = sample_negatives(graph, per_positive=args.per_positive,
                                 strategy=args.neg_strategy,
                                 exponent=args.neg_exponent, seed=args.seed)
    result = train(graph, negatives, config, splits=splits)
    outdir = _default_outdir(args.outdir)
    os.makedirs(outdir, exist_ok=True)
    stem = f"{args.model}_seed{args.seed}"
    emb_path = os.path.join(outdir, f"embeddings_{stem}.npy")
    np.save(emb_path, result.embeddings)
    traj_path = os.path.join(outdir, f"trajectory_{stem}.csv")
    emit_trajectories(result.history.records, traj_path)
    hist = result.history
    print(f"{emb_path}: stopped at epoch {hist.stopped_epoch} ({hist.reason})"
          + (f", best val recall {hist.best_metric:.5f} at epoch "
             f"{hist.best_epoch}" if hist.best_metric is not None else ""))
    return 0


def cmd_evaluate(args) -> int:
    import numpy as np
    from linkprop.data_io import graph_from_split, load_splits, write_metrics_csv
    from linkprop.losses import ModelParams, build_masks
    from linkprop.negatives import sample_negatives
    from linkprop.ranking import evaluate
    from linkprop.training import scoring_embeddings
    _, splits = load_splits(args.splits)
    graph = graph_from_split(splits)
    X = np.load(args.embeddings)
    params = ModelParams(model=args.model, window=args.window,
                         layers=args.layers)
    negatives = sample_negatives(graph, seed=args.seed)
    masks = build_masks(graph, negatives, params)
    result = evaluate(scoring_embeddings(X, masks), splits, graph, k=args.k)
    print(f"precision@{args.k} {result.precision:.5f}  "
          f"recall@{args.k} {result.recall:.5f}  ndcg@{args.k} "
          f"{result.ndcg:.5f}  ({result.users_evaluated} users, "
          f"{result.users_skipped} skipped)")
    if args.csv:
        write_metrics_csv([(args.splits, args.model, args.seed, result)],
                          args.csv)
    return 0


def cmd_verify_equivalence(args) -> int:
    import numpy as np
    from linkprop.kernel import KernelOperator, config_params, model_config
    from linkprop.losses import build_masks, gd_step, loss_gradient
    from linkprop.synthetic import equivalence_instance
    from linkprop.training import init_embeddings

    variants = [("mf", {}), ("line", {}), ("deepwalk", {"window": 2}),
                ("lightgcn", {"layers": 3})]
    if args.model != "all":
        variants = [(m, kw) for m, kw in variants if m == args.model]
        if not variants:
            print(f"unknown model {args.model!r}", file=sys.stderr)
            return 2
    failed = False
    for model, kw in variants:
        worst_step = worst_cum = 0.0
        for seed in range(args.graphs):
            graph, negatives = equivalence_instance(seed)
            n = graph.num_nodes
            cfg = model_config(model, alpha=args.alpha, beta=args.beta,
                               lam=1.0, **kw)
            params = config_params(cfg)
            masks = build_masks(graph, negatives, params)
            op = KernelOperator.build(cfg, graph, negatives)
            Xg = init_embeddings(n, args.dim, seed=seed)
            Xk = Xg.copy()
            for step in range(args.steps):
                Xg = gd_step(Xg, loss_gradient(Xg, graph, negatives, params,
                                               masks), args.alpha)
                Xk = op.step(Xk)
                worst_step = max(worst_step, float(np.abs(Xg - Xk).max()))
            worst_cum = max(worst_cum, float(np.abs(Xg - Xk).max()))
        ok = worst_step < args.tolerance
        failed = failed or not ok
        print(f"{model:10s} per-step max dev {worst_step:.3e}  "
              f"final dev {worst_cum:.3e}  "
              f"{'OK' if ok else 'EXCEEDS ' + str(args.tolerance)}")
    return 1 if failed else 0


def cmd_report(args) -> int:
    from linkprop.experiment import RunConfig, run_experiment
    config = RunConfig.from_ini(args.config)
    if args.outdir or "LINKPROP_OUTDIR" in os.environ:
        from dataclasses import replace
        config = replace(config, outdir=_default_outdir(args.outdir))
    report = run_experiment(config)
    print(report.table(), end="")
    print(f"artifacts in {config.outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkprop",
        description="Link prediction by gradient descent and equivalent "
                    "propagation kernels.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an edge list, write canonical form")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="auto",
                   choices=["auto", "pairs", "adjlist"])
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="per-user train/val/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="auto",
                   choices=["auto", "pairs", "adjlist"])
    p.add_argument("--outdir", required=True)
    p.add_argument("--ratios", nargs=3, type=float, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one model on a split directory")
    p.add_argument("--splits", required=True)
    p.add_argument("--model", required=True,
                   choices=["mf", "line", "deepwalk", "lightgcn"])
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--path", default="gradient",
                   choices=["gradient", "kernel", "both"])
    p.add_argument("--init-scale", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--trace", action="store_true",
                   help="record substep norms each epoch")
    p.add_argument("--neg-strategy", default="uniform",
                   choices=["uniform", "degree_power"])
    p.add_argument("--neg-exponent", type=float, default=0.75)
    p.add_argument("--per-positive", type=int, default=1)
    p.add_argument("--outdir", default="")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="rank and score saved embeddings")
    p.add_argument("--splits", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--model", required=True,
                   choices=["mf", "line", "deepwalk", "lightgcn"])
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--csv", default="")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify-equivalence",
                       help="check kernel steps against gradient steps")
    p.add_argument("--model", default="all")
    p.add_argument("--graphs", type=int, default=20)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_equivalence)

    p = sub.add_parser("report", help="run a full experiment from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", default="")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
