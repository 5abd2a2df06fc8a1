"""Command line entry points.

One subcommand per pipeline stage (cluster, graph, map, generate,
evaluate) plus ``pipeline`` for the whole run. Every stage reads and
writes only the documented file formats, so stages can be rerun and
recombined freely. Exit codes: 0 success, 1 input error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__, clustering, mapping, pipeline
from .corpus import load_dataset, load_predictions, save_predictions
from .embeddings import Kind, load_table
from .errors import GenerationError, InputDataError, SensekitError
from .graph import build_graph, export_dot


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are input errors (exit 1), not runtime errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_flags(sub, *groups):
    sub.add_argument("--config", help="TOML-like config file; flags override it")
    if "inputs" in groups:
        sub.add_argument("--dataset", help="usage dataset (TSV or JSONL)")
        sub.add_argument("--word-embeddings", dest="word_embeddings", help="vocabulary table")
        sub.add_argument("--usage-embeddings", dest="usage_embeddings", help="usage table")
    if "gloss" in groups:
        sub.add_argument("--gloss-embeddings", dest="gloss_embeddings", help="gloss table")
    if "clustering" in groups:
        sub.add_argument("--t-sc", dest="t_sc", type=float, help="merge distance threshold (required)")
        sub.add_argument("--k", type=int, help="nearest neighbor count (default 5)")
        sub.add_argument("--centroid-update", dest="centroid_update", choices=["midpoint", "size_weighted"])
        sub.add_argument("--linkage", choices=["centroid", "average_usage"])
        sub.add_argument(
            "--exclude-lemma", dest="exclude_lemma", action=argparse.BooleanOptionalAction,
            help="drop the lemma itself from neighbor lookups (default on)",
        )
    if "mapping" in groups:
        sub.add_argument("--sim-threshold", dest="sim_threshold", type=float, help="gloss match threshold (default 0.5)")
        sub.add_argument("--scope", choices=["all_usages", "new_only"], help="usages entering clustering")
        sub.add_argument(
            "--multi-assign", dest="multi_assign", action=argparse.BooleanOptionalAction,
            help="assign every gloss above the threshold instead of the argmax",
        )
    if "defgen" in groups:
        sub.add_argument("--backend", choices=["stub", "http"])
        sub.add_argument("--model", help="model identifier sent to the endpoint")
        sub.add_argument("--endpoint", help="chat-completions URL")
        sub.add_argument("--temperature", type=float)
        sub.add_argument("--timeout", type=float)
        sub.add_argument("--max-retries", dest="max_retries", type=int)
        sub.add_argument("--max-in-flight", dest="max_in_flight", type=int)
        sub.add_argument("--api-key-env", dest="api_key_env", help="env var holding the API key")
    sub.add_argument("--language", help="dataset language (prompt/report tag)")
    sub.add_argument("--jobs", type=int, help="parallel lemma workers (default: all cores)")


def _config_from_args(args) -> pipeline.PipelineConfig:
    file_values = pipeline.load_config_file(args.config) if getattr(args, "config", None) else {}
    field_names = {f.name for f in dataclasses.fields(pipeline.PipelineConfig)}
    overrides = {
        name: getattr(args, name)
        for name in field_names
        if getattr(args, name, None) is not None
    }
    cfg = pipeline.build_config(file_values, overrides)
    print("effective configuration:", file=sys.stderr)
    for f in dataclasses.fields(cfg):
        print(f"  {f.name} = {getattr(cfg, f.name)!r}", file=sys.stderr)
    return cfg


def _out_dir(args, cfg) -> Path:
    out = Path(getattr(args, "out_dir", None) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_cluster(args) -> int:
    cfg = _config_from_args(args)
    cluster_sets = pipeline.run_clustering(cfg)
    out = _out_dir(args, cfg)
    clustering.save_cluster_sets(cluster_sets, out / "clusters.json")
    print(f"wrote {out / 'clusters.json'} ({len(cluster_sets)} lemmas)", file=sys.stderr)
    return 0


def _cmd_graph(args) -> int:
    cfg = _config_from_args(args)
    cluster_sets = clustering.load_cluster_sets(args.clusters)
    vocab = load_table(cfg.word_embeddings, kind=Kind.WORD)
    usage_table = load_table(cfg.usage_embeddings, kind=Kind.USAGE)
    out = _out_dir(args, cfg)
    taken: set[str] = set()
    for cs in sorted(cluster_sets, key=lambda c: c.lemma):
        usage_vecs = {}
        for uid in cs.usage_ids():
            if uid not in usage_table:
                raise InputDataError(f"lemma {cs.lemma!r}: usage embedding missing for {uid!r}")
            usage_vecs[uid] = usage_table.vector(uid)
        k = args.k if args.k is not None else cs.params.k
        graph = build_graph(cs, usage_vecs, vocab, k, exclude_lemma=cfg.exclude_lemma)
        path = out / f"{pipeline.safe_filename(cs.lemma, taken)}.dot"
        export_dot(graph, path)
        print(f"wrote {path}", file=sys.stderr)
    return 0


def _cmd_map(args) -> int:
    cfg = _config_from_args(args)
    cluster_sets = clustering.load_cluster_sets(args.clusters)
    targets = {t.lemma: t for t in load_dataset(cfg.dataset, language=cfg.language)}
    gloss_table = load_table(cfg.gloss_embeddings, kind=Kind.GLOSS) if cfg.gloss_embeddings else None
    mparams = cfg.mapping_params()
    preds = []
    reports = {}
    for cs in sorted(cluster_sets, key=lambda c: c.lemma):
        target = targets.get(cs.lemma)
        if target is None:
            raise InputDataError(f"lemma {cs.lemma!r} from clusters file is absent from the dataset")
        glosses = pipeline._gloss_subset(target, gloss_table)
        preds.extend(mapping.map_clusters(cs, glosses, mparams, target.periods()))
        reports[cs.lemma] = mapping.mapping_report(cs, glosses, mparams)
    out = _out_dir(args, cfg)
    save_predictions(preds, out / "predictions.tsv")
    (out / "audit.json").write_text(
        json.dumps({"lemmas": reports}, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out / 'predictions.tsv'} ({len(preds)} predictions)", file=sys.stderr)
    return 0


def _cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    preds = load_predictions(args.predictions)
    targets = load_dataset(cfg.dataset, language=cfg.language)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / "definitions.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    generated, failures = pipeline.run_subtask2(cfg, preds, targets, out)
    print(f"wrote {out} ({len(generated)} new definitions)", file=sys.stderr)
    if failures:
        for sense_id, message in sorted(failures.items()):
            print(f"FAILED {sense_id}: {message}", file=sys.stderr)
        return 2
    return 0


def _cmd_evaluate(args) -> int:
    report = pipeline.run_evaluate(
        args.predictions,
        args.gold,
        defs_path=args.definitions,
        token_vecs_path=args.token_vecs,
        language=args.language or "und",
        global_pool=args.global_pool,
    )
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    results = pipeline.run_subtask1(cfg, with_graphs=args.graphs or args.with_definitions)
    out = _out_dir(args, cfg)
    paths = pipeline.write_subtask1_outputs(results, out, write_graphs=args.graphs)
    print(f"wrote {paths['predictions']}", file=sys.stderr)
    if args.with_definitions:
        preds = [p for r in results for p in r.predictions]
        targets = load_dataset(cfg.dataset, language=cfg.language)
        defs_path = out / "definitions.jsonl"
        generated, failures = pipeline.run_subtask2(cfg, preds, targets, defs_path, results=results)
        print(f"wrote {defs_path} ({len(generated)} new definitions)", file=sys.stderr)
        if failures:
            for sense_id, message in sorted(failures.items()):
                print(f"FAILED {sense_id}: {message}", file=sys.stderr)
            return 2
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sensekit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sensekit {__version__}")
    subs = parser.add_subparsers(dest="command")

    sub = subs.add_parser("cluster", parents=[], help="cluster usage embeddings per lemma")
    _add_config_flags(sub, "inputs", "clustering", "mapping")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.set_defaults(func=_cmd_cluster)

    sub = subs.add_parser("graph", help="export interpretability graphs as DOT")
    _add_config_flags(sub, "inputs", "clustering")
    sub.add_argument("--clusters", required=True, help="clusters JSON from the cluster stage")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.set_defaults(func=_cmd_graph)

    sub = subs.add_parser("map", help="map clusters to dictionary senses")
    _add_config_flags(sub, "inputs", "gloss", "mapping")
    sub.add_argument("--clusters", required=True, help="clusters JSON from the cluster stage")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.set_defaults(func=_cmd_map)

    sub = subs.add_parser("generate", help="generate definitions for novel senses")
    _add_config_flags(sub, "inputs", "defgen")
    sub.add_argument("--predictions", required=True, help="prediction TSV from the map stage")
    sub.add_argument("--out", help="definitions JSONL path")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.set_defaults(func=_cmd_generate)

    sub = subs.add_parser("evaluate", help="score predictions (and definitions) against gold data")
    sub.add_argument("--predictions", required=True)
    sub.add_argument("--gold", required=True, help="gold dataset with labeled new-period usages")
    sub.add_argument("--definitions", help="definitions JSONL to score with BLEU")
    sub.add_argument("--token-vecs", dest="token_vecs", help="token vector JSONL for the embedding score")
    sub.add_argument("--language", help="language tag for the report")
    sub.add_argument("--global-pool", dest="global_pool", action="store_true",
                     help="pool all lemmas instead of per-lemma averaging")
    sub.add_argument("--out", help="also write the JSON report here")
    sub.set_defaults(func=_cmd_evaluate)

    sub = subs.add_parser("pipeline", help="run clustering + mapping (+ graphs, + definitions)")
    _add_config_flags(sub, "inputs", "gloss", "clustering", "mapping", "defgen")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--graphs", action="store_true", help="also export DOT graphs")
    sub.add_argument("--with-definitions", dest="with_definitions", action="store_true",
                     help="run definition generation after mapping")
    sub.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 2
    except SensekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
