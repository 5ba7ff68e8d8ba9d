"""Command-line orchestration: synth, prepare, train, evaluate, stats.

Exit codes: 0 success, 1 validation error (bad flags, bad config, missing
inputs), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from .corpus.synthetic import SynthConfig, generate_synthetic, write_corpus_jsonl, write_taxonomy_json
from .encoders import HuggingFaceAdapter, load_word_vectors
from .evaluation import MetricsReport, aggregate_runs, apply_thresholds, compute_metrics, paired_t_test
from .experiment import ConfigError, ExperimentConfig
from .pipeline import PreparedDataset, prepare_dataset
from .training import (
    RunDirectory,
    ThresholdSet,
    atomic_write_json,
    load_checkpoint,
    save_checkpoint,
    train_flat,
    train_hierarchical,
    train_multitask,
    train_n_binary,
    tune_thresholds,
)
from .training.inference import flat_probabilities, hierarchical_probabilities


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicbench",
        description="Hierarchical multi-label topic classification workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus and taxonomy")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--parents", type=int, default=3)
    synth.add_argument("--children", type=int, default=3)
    synth.add_argument("--docs-per-leaf", type=int, default=100)
    synth.set_defaults(handler=cmd_synth)

    prepare = sub.add_parser("prepare", help="build encoded dataset artifacts")
    prepare.add_argument("--corpus", required=True)
    prepare.add_argument("--taxonomy", required=True)
    prepare.add_argument("--out", required=True)
    prepare.add_argument("--level", type=int, default=2)
    prepare.add_argument("--min-support", type=int, default=100)
    prepare.add_argument("--seed", type=int, default=0)
    prepare.add_argument("--mode", choices=("classical", "pretrained-adapter"), default="classical")
    prepare.add_argument("--max-text-tokens", type=int, default=100)
    prepare.add_argument("--max-keyword-tokens", type=int, default=15)
    prepare.set_defaults(handler=cmd_prepare)

    train = sub.add_parser("train", help="train models per the experiment config")
    train.add_argument("--config", help="experiment config JSON; flags override it")
    train.add_argument("--prepared")
    train.add_argument("--run-dir")
    train.add_argument("--hierarchy", choices=("flat", "hierarchical", "n-binary"))
    train.add_argument("--family", choices=("recurrent", "convolutional", "pretrained"))
    train.add_argument("--adapter")
    train.add_argument("--embeddings")
    train.add_argument("--input-mode", choices=("text-only", "text-plus-keywords", "keywords-only"))
    train.add_argument("--multitask", action="store_true", default=None)
    train.add_argument("--no-keywords-at-test", dest="keywords_at_test", action="store_false", default=None)
    train.add_argument("--alpha", type=float)
    train.add_argument("--beta", type=float)
    train.add_argument("--seeds", type=int, nargs="+")
    train.add_argument("--max-epochs", type=int)
    train.add_argument("--patience", type=int)
    train.add_argument("--no-patience", action="store_true")
    train.add_argument("--batch-size", type=int)
    train.add_argument("--learning-rate", type=float)
    train.add_argument("--pos-weight-search", action="store_true", default=None)
    train.add_argument("--record-init-snapshots", action="store_true", default=None)
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser("evaluate", help="compute metrics for a run")
    evaluate.add_argument("--run", required=True)
    evaluate.add_argument("--prepared", help="defaults to the run's prepared dir")
    evaluate.add_argument("--split", choices=("dev", "test"), default="test")
    evaluate.add_argument("--vs", help="second run directory for a significance test")
    evaluate.add_argument("--alpha", type=float, default=0.05)
    evaluate.add_argument("--closure", action="store_true", help="force ancestors on for predicted children")
    evaluate.set_defaults(handler=cmd_evaluate)

    stats = sub.add_parser("stats", help="per-topic label distribution of a prepared dataset")
    stats.add_argument("--prepared", required=True)
    stats.add_argument("--out", help="also write the table as JSON")
    stats.set_defaults(handler=cmd_stats)

    return parser


def cmd_synth(args) -> int:
    config = SynthConfig(
        parents=args.parents,
        children_per_parent=args.children,
        docs_per_leaf=args.docs_per_leaf,
    )
    try:
        records, taxonomy = generate_synthetic(config, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus_jsonl(records, out / "papers.jsonl")
    write_taxonomy_json(taxonomy, out / "taxonomy.json")
    print(f"wrote {len(records)} records and {config.n_topics} topics to {out}")
    return 0


def cmd_prepare(args) -> int:
    for path in (args.corpus, args.taxonomy):
        if not Path(path).exists():
            raise ConfigError(f"input file does not exist: {path}")
    try:
        summary = prepare_dataset(
            args.corpus,
            args.taxonomy,
            args.out,
            level=args.level,
            min_support=args.min_support,
            seed=args.seed,
            mode=args.mode,
            max_text_tokens=args.max_text_tokens,
            max_keyword_tokens=args.max_keyword_tokens,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sizes = summary.n_encoded
    print(
        f"prepared {summary.n_topics} topics; "
        f"train/dev/test = {sizes['train']}/{sizes['dev']}/{sizes['test']} "
        f"(excluded by pruning: {sum(summary.n_excluded.values())})"
    )
    return 0


def _config_from_args(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.prepared:
        config.prepared_dir = args.prepared
    if args.run_dir:
        config.run_dir = args.run_dir
    if args.hierarchy:
        config.hierarchy = args.hierarchy
    if args.family:
        config.family = args.family
    if args.adapter:
        config.adapter_name = args.adapter
    if args.embeddings:
        config.embeddings = args.embeddings
    if args.input_mode:
        config.input_mode = args.input_mode
    if args.multitask is not None:
        config.multitask = args.multitask
    if args.keywords_at_test is not None:
        config.keywords_at_test = args.keywords_at_test
    if args.alpha is not None or args.beta is not None:
        alpha = args.alpha if args.alpha is not None else config.loss_weights[0]
        beta = args.beta if args.beta is not None else config.loss_weights[1]
        config.loss_weights = (alpha, beta)
    if args.seeds:
        config.seeds = tuple(args.seeds)
    for key, value in (
        ("max_epochs", args.max_epochs),
        ("patience", args.patience),
        ("batch_size", args.batch_size),
        ("learning_rate", args.learning_rate),
        ("pos_weight_search", args.pos_weight_search),
        ("record_init_snapshots", args.record_init_snapshots),
    ):
        if value is not None:
            config.training[key] = value
    if args.no_patience:
        config.training["patience"] = None
    return config


def cmd_train(args) -> int:
    config = _config_from_args(args)
    if not config.prepared_dir:
        raise ConfigError("a prepared dataset directory is required (--prepared)")
    if not config.run_dir:
        raise ConfigError("a run directory is required (--run-dir)")
    config.validate()
    if not Path(config.prepared_dir).is_dir():
        raise ConfigError(f"prepared dataset not found: {config.prepared_dir}")

    prepared = PreparedDataset.load(config.prepared_dir)
    _check_family_mode(config, prepared)
    adapter = _make_adapter(config)
    embedding_weights = None
    if config.embeddings:
        if prepared.vocab is None:
            raise ConfigError("word vectors require a classical prepared dataset")
        embedding_weights = load_word_vectors(
            config.embeddings, prepared.vocab, config.encoder_config().embedding_dim
        )

    run = RunDirectory(config.run_dir)
    run.write_config({"experiment": config.to_json(), "row_label": config.row_label()})

    for seed in config.seeds:
        train_config = config.train_config(seed)
        trainer_kwargs = dict(
            encoder=config.encoder_config(),
            vocab=prepared.vocab,
            adapter=adapter,
            embedding_weights=embedding_weights,
        )
        try:
            if config.hierarchy == "flat":
                trainer = train_multitask if config.multitask else train_flat
                checkpoint = trainer(prepared.data, train_config, **trainer_kwargs)
                checkpoints = {"flat": checkpoint}
                save_checkpoint(checkpoint, run.checkpoint_path(seed, "flat"))
            else:
                trainer = train_hierarchical if config.hierarchy == "hierarchical" else train_n_binary
                checkpoints = trainer(
                    prepared.data,
                    prepared.tree,
                    train_config,
                    run_dir=run,
                    seed_for_files=seed,
                    **trainer_kwargs,
                )
        except Exception as exc:
            raise RuntimeError(f"training failed for run {config.run_dir} seed {seed}: {exc}") from exc

        for target, checkpoint in checkpoints.items():
            run.append_log(
                seed,
                [{"target": target, **record} for record in checkpoint.history],
            )

        dev_probs = _probability_matrix(config, prepared, checkpoints, train_config, "dev", adapter)
        thresholds = tune_thresholds(dev_probs, prepared.gold_matrix("dev"), prepared.topics)
        atomic_write_json(run.thresholds_path(seed), thresholds.to_json())
        atomic_write_json(run.seed_dir(seed) / "config.json", train_config.to_json())
        print(f"seed {seed}: trained {len(checkpoints)} model(s), thresholds tuned on dev")
    print(f"run complete: {config.run_dir} [{config.row_label()}]")
    return 0


def _check_family_mode(config: ExperimentConfig, prepared: PreparedDataset) -> None:
    if config.family == "pretrained" and prepared.mode != "pretrained-adapter":
        raise ConfigError("pretrained family needs a dataset prepared with --mode pretrained-adapter")
    if config.family != "pretrained" and prepared.mode != "classical":
        raise ConfigError("classical families need a dataset prepared with --mode classical")


def _make_adapter(config: ExperimentConfig):
    if config.family != "pretrained":
        return None
    return HuggingFaceAdapter(config.adapter_name)


def _probability_matrix(config, prepared, checkpoints, train_config, subset, adapter):
    examples = prepared.data.subsets()[subset]
    if config.hierarchy == "flat":
        return flat_probabilities(checkpoints["flat"], examples, train_config, adapter)
    return hierarchical_probabilities(checkpoints, prepared.topics, examples, train_config, adapter)


def cmd_evaluate(args) -> int:
    run = RunDirectory(args.run)
    if not run.config_path.exists():
        raise ConfigError(f"not a run directory (missing config.json): {args.run}")
    config = ExperimentConfig.from_json(
        json.loads(run.config_path.read_text(encoding="utf-8"))["experiment"]
    )
    prepared_dir = args.prepared or config.prepared_dir
    if not prepared_dir or not Path(prepared_dir).is_dir():
        raise ConfigError(f"prepared dataset not found: {prepared_dir}")
    prepared = PreparedDataset.load(prepared_dir)
    adapter = _make_adapter(config)

    report = _evaluate_run(run, config, prepared, args.split, adapter, enforce_closure=args.closure)

    if args.vs:
        other_run = RunDirectory(args.vs)
        if not other_run.config_path.exists():
            raise ConfigError(f"not a run directory (missing config.json): {args.vs}")
        other_config = ExperimentConfig.from_json(
            json.loads(other_run.config_path.read_text(encoding="utf-8"))["experiment"]
        )
        other = _evaluate_run(
            other_run, other_config, prepared, args.split, _make_adapter(other_config),
            enforce_closure=args.closure,
        )
        ours = [report.per_class[t].f1 for t in prepared.topics]
        theirs = [other.per_class[t].f1 for t in prepared.topics]
        t_stat, p_value, significant = paired_t_test(ours, theirs, alpha=args.alpha)
        report.significance = {
            str(args.vs): {"t": t_stat, "p": p_value, "significant": significant}
        }

    atomic_write_json(run.metrics_path, report.to_json())
    headline = report.headline()
    print(
        f"{args.split}: P={headline['precision']:.2f} R={headline['recall']:.2f} "
        f"micro-F1={headline['micro_f1']:.2f} macro-F1={headline['macro_f1']:.2f}"
        + (f" ± {report.std['macro_f1']:.2f}" if report.std else "")
    )
    if report.significance:
        for other_id, block in report.significance.items():
            verdict = "significant" if block["significant"] else "not significant"
            print(f"vs {other_id}: t={block['t']:.3f} p={block['p']:.4f} ({verdict})")
    print(f"metrics written to {run.metrics_path}")
    return 0


def _evaluate_run(run, config, prepared, subset, adapter, enforce_closure=False) -> MetricsReport:
    seeds = run.seeds()
    if not seeds:
        raise ConfigError(f"run has no trained seeds: {run.root}")
    gold = prepared.gold_matrix(subset)
    examples = prepared.data.subsets()[subset]
    reports = []
    for seed in seeds:
        paths = run.checkpoints(seed)
        if not paths:
            raise ConfigError(f"run seed {seed} has no checkpoints")
        loaded = {p: load_checkpoint(path) for p, path in paths.items()}
        checkpoints = {c.provenance["target"]: c for c in loaded.values()}
        train_config = config.train_config(seed)
        probs = _probability_matrix(config, prepared, checkpoints, train_config, subset, adapter)
        thresholds = ThresholdSet.load(run.thresholds_path(seed))
        predictions = apply_thresholds(
            probs,
            thresholds.thresholds,
            prepared.topics,
            enforce_closure=enforce_closure,
            tree=prepared.tree if enforce_closure else None,
        )
        reports.append(compute_metrics(predictions, gold, prepared.topics))
    return aggregate_runs(reports)


def cmd_stats(args) -> int:
    prepared_dir = Path(args.prepared)
    if not prepared_dir.is_dir():
        raise ConfigError(f"prepared dataset not found: {prepared_dir}")
    stats = json.loads((prepared_dir / "stats.json").read_text(encoding="utf-8"))
    prepared = PreparedDataset.load(prepared_dir)
    rows = sorted(
        stats.items(),
        key=lambda item: (prepared.tree.node(item[0]).depth, prepared.tree.node(item[0]).name),
    )
    print(f"{'topic':50} {'level':>5} {'train':>8} {'dev':>8} {'test':>8}")
    for topic, counts in rows:
        node = prepared.tree.node(topic)
        print(
            f"{node.name[:50]:50} {node.depth:>5} "
            f"{counts['train']:>8} {counts['dev']:>8} {counts['test']:>8}"
        )
    if args.out:
        table = {
            topic: {"level": prepared.tree.node(topic).depth, **counts}
            for topic, counts in rows
        }
        atomic_write_json(args.out, table)
    return 0


if __name__ == "__main__":
    sys.exit(main())
