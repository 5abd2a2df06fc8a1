"""End-to-end orchestration of the clustering / mapping / defgen stages.

Stages communicate only through the documented files (dataset, embedding
tables, clusters JSON, prediction TSV, definitions JSONL), so any stage
can be rerun from its inputs. Lemmas are independent; per-lemma work may
fan out over threads and the merged output is byte-identical to a serial
run because results are reassembled in lemma order.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

from . import clustering, defgen, mapping, metrics
from .corpus import (
    Period,
    SensePrediction,
    TargetWord,
    load_dataset,
    load_predictions,
    save_predictions,
)
from .embeddings import EmbeddingTable, Kind, load_table
from .errors import InputDataError, SensekitError
from .graph import SemanticGraph, build_graph, export_dot


@dataclass
class PipelineConfig:
    """Everything a full run needs; flags override config-file values.

    ``t_sc`` has no default on purpose: the merge threshold is tuned per
    dataset and must be given explicitly. The similarity threshold and
    neighbor count default to 0.5 and 5.
    """

    language: str = "und"
    dataset: str = ""
    word_embeddings: str = ""
    usage_embeddings: str = ""
    gloss_embeddings: str = ""
    output_dir: str = "out"
    # clustering
    t_sc: float | None = None
    k: int = 5
    centroid_update: str = "midpoint"
    linkage: str = "centroid"
    exclude_lemma: bool = True
    # mapping
    sim_threshold: float = 0.5
    scope: str = "all_usages"
    multi_assign: bool = False
    # definition generation
    backend: str = "stub"
    model: str = "stub-model"
    endpoint: str = ""
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 3
    max_in_flight: int = 4
    api_key_env: str = "SENSEKIT_API_KEY"
    # execution
    jobs: int = 0

    def cluster_params(self, lemma: str = "") -> clustering.ClusterParams:
        if self.t_sc is None:
            raise InputDataError("t_sc is required (merge threshold, tuned per dataset)")
        exclude = (lemma,) if self.exclude_lemma and lemma else ()
        return clustering.ClusterParams(
            t_sc=self.t_sc,
            k=self.k,
            centroid_update=clustering.CentroidUpdate(self.centroid_update),
            linkage=clustering.Linkage(self.linkage),
            exclude_words=exclude,
        )

    def mapping_params(self) -> mapping.MappingParams:
        return mapping.MappingParams(
            sim_threshold=self.sim_threshold,
            scope=mapping.Scope(self.scope),
            multi_assign=self.multi_assign,
        )

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


_BOOL_WORDS = {"true": True, "false": False}


def _parse_config_value(raw: str, path, line_no: int):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw.lower() in _BOOL_WORDS:
        return _BOOL_WORDS[raw.lower()]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if raw:
        return raw
    raise InputDataError(f"{path} line {line_no}: empty value")


def load_config_file(path) -> dict:
    """Minimal TOML-like reader: ``key = value`` lines, optional [sections].

    Section names only group keys visually; a key is looked up by its last
    segment. Values are quoted strings, integers, floats, true/false, or
    bare strings.
    """
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"config file not found: {path}")
    values: dict = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            continue
        if "=" not in stripped:
            raise InputDataError(f"{path} line {line_no}: expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip().split(".")[-1].replace("-", "_")
        if not key:
            raise InputDataError(f"{path} line {line_no}: empty key")
        values[key] = _parse_config_value(raw, path, line_no)
    return values


def build_config(file_values: Mapping | None = None, overrides: Mapping | None = None) -> PipelineConfig:
    """Defaults, then config file, then flag overrides."""
    known = {f.name for f in fields(PipelineConfig)}
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                raise InputDataError(f"unknown configuration key {key!r}")
            merged[key] = value
    return PipelineConfig(**merged)


@dataclass
class LemmaResult:
    lemma: str
    cluster_set: clustering.ClusterSet
    predictions: list[SensePrediction] = field(default_factory=list)
    report: dict | None = None
    graph: SemanticGraph | None = None
    novel_cluster_ids: dict[str, int] = field(default_factory=dict)


def _stage(lemma: str, stage: str, exc: Exception) -> SensekitError:
    message = f"lemma {lemma!r}, stage {stage}: {exc}"
    if isinstance(exc, (InputDataError, ValueError, KeyError, FileNotFoundError)):
        return InputDataError(message)
    return SensekitError(message)


def _usage_vectors(target: TargetWord, usage_table: EmbeddingTable, scope: mapping.Scope) -> dict:
    wanted = [
        u.usage_id
        for u in target.usages
        if scope is mapping.Scope.ALL_USAGES or u.period is Period.NEW
    ]
    missing = [uid for uid in wanted if uid not in usage_table]
    if missing:
        raise InputDataError(f"usage embeddings missing for {missing[:5]}")
    return {uid: usage_table.vector(uid) for uid in wanted}


def _gloss_subset(target: TargetWord, gloss_table: EmbeddingTable | None) -> EmbeddingTable | None:
    ids = sorted(target.gloss_ids())
    if not ids:
        return None
    if gloss_table is None:
        raise InputDataError(
            f"lemma {target.lemma!r} has {len(ids)} glosses but no gloss embeddings were given"
        )
    missing = [g for g in ids if g not in gloss_table]
    if missing:
        raise InputDataError(f"gloss embeddings missing for {missing[:5]}")
    return gloss_table.subset(ids, kind=Kind.GLOSS)


def process_lemma(
    target: TargetWord,
    vocab: EmbeddingTable,
    usage_table: EmbeddingTable,
    gloss_table: EmbeddingTable | None,
    cfg: PipelineConfig,
    with_graph: bool = False,
) -> LemmaResult | None:
    """Cluster, map and optionally graph one lemma. None if out of scope."""
    params = cfg.cluster_params(target.lemma)
    mparams = cfg.mapping_params()
    try:
        usage_vecs = _usage_vectors(target, usage_table, mparams.scope)
        if not usage_vecs:
            return None
        cs = clustering.cluster_usages(usage_vecs, vocab, params, lemma=target.lemma, exclude_lemma=False)
    except Exception as exc:  # noqa: BLE001 - re-raised with lemma context
        raise _stage(target.lemma, "cluster", exc)
    try:
        glosses = _gloss_subset(target, gloss_table)
        preds = mapping.map_clusters(cs, glosses, mparams, target.periods())
        report = mapping.mapping_report(cs, glosses, mparams)
    except Exception as exc:  # noqa: BLE001
        raise _stage(target.lemma, "map", exc)
    novel_cluster_ids = {
        cluster["assigned_sense_ids"][0]: cluster["cluster_id"]
        for cluster in report["clusters"]
        if cluster["is_novel"]
    }
    graph = None
    if with_graph:
        try:
            graph = build_graph(cs, usage_vecs, vocab, cfg.k, exclude_lemma=cfg.exclude_lemma)
        except Exception as exc:  # noqa: BLE001
            raise _stage(target.lemma, "graph", exc)
    return LemmaResult(
        lemma=target.lemma,
        cluster_set=cs,
        predictions=preds,
        report=report,
        graph=graph,
        novel_cluster_ids=novel_cluster_ids,
    )


def _run_per_lemma(targets: Sequence[TargetWord], jobs: int, worker) -> list:
    """Apply worker to every lemma, serial or threaded; lemma order preserved."""
    if jobs <= 1 or len(targets) <= 1:
        results = [worker(t) for t in targets]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(worker, t) for t in targets]
            results = [f.result() for f in futures]
    return [r for r in results if r is not None]


def _load_core_inputs(cfg: PipelineConfig):
    for name in ("dataset", "word_embeddings", "usage_embeddings"):
        if not getattr(cfg, name):
            raise InputDataError(f"{name} path is required")
    cfg.cluster_params()  # fail early if t_sc is missing
    targets = load_dataset(cfg.dataset, language=cfg.language)
    vocab = load_table(cfg.word_embeddings, kind=Kind.WORD)
    usage_table = load_table(cfg.usage_embeddings, kind=Kind.USAGE)
    return targets, vocab, usage_table


def run_clustering(cfg: PipelineConfig) -> list[clustering.ClusterSet]:
    """Clustering stage alone: one ClusterSet per in-scope lemma."""
    targets, vocab, usage_table = _load_core_inputs(cfg)
    scope = cfg.mapping_params().scope

    def worker(target: TargetWord):
        try:
            usage_vecs = _usage_vectors(target, usage_table, scope)
            if not usage_vecs:
                return None
            return clustering.cluster_usages(
                usage_vecs, vocab, cfg.cluster_params(target.lemma),
                lemma=target.lemma, exclude_lemma=False,
            )
        except Exception as exc:  # noqa: BLE001
            raise _stage(target.lemma, "cluster", exc)

    return _run_per_lemma(targets, cfg.effective_jobs(), worker)


def run_subtask1(cfg: PipelineConfig, with_graphs: bool = False) -> list[LemmaResult]:
    """Load inputs, cluster and map every lemma; nothing is written here."""
    targets, vocab, usage_table = _load_core_inputs(cfg)
    gloss_table = (
        load_table(cfg.gloss_embeddings, kind=Kind.GLOSS) if cfg.gloss_embeddings else None
    )

    def worker(target: TargetWord):
        return process_lemma(target, vocab, usage_table, gloss_table, cfg, with_graph=with_graphs)

    return _run_per_lemma(targets, cfg.effective_jobs(), worker)


_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9_.-]")


def safe_filename(lemma: str, taken: set[str]) -> str:
    base = _FILENAME_SAFE.sub("_", lemma) or "lemma"
    name = base
    counter = 1
    while name in taken:
        counter += 1
        name = f"{base}_{counter}"
    taken.add(name)
    return name


def write_subtask1_outputs(results: Sequence[LemmaResult], out_dir, write_graphs: bool = False) -> dict:
    """Write predictions TSV, audit JSON and optional DOT graphs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: r.lemma)

    pred_path = out_dir / "predictions.tsv"
    save_predictions([p for r in results for p in r.predictions], pred_path)

    audit_path = out_dir / "audit.json"
    audit = {"lemmas": {r.lemma: r.report for r in results}}
    audit_path.write_text(json.dumps(audit, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")

    clusters_path = out_dir / "clusters.json"
    clustering.save_cluster_sets([r.cluster_set for r in results], clusters_path)

    paths = {"predictions": pred_path, "audit": audit_path, "clusters": clusters_path}
    if write_graphs:
        graph_dir = out_dir / "graphs"
        graph_dir.mkdir(exist_ok=True)
        taken: set[str] = set()
        for result in results:
            if result.graph is not None:
                export_dot(result.graph, graph_dir / f"{safe_filename(result.lemma, taken)}.dot")
        paths["graphs"] = graph_dir
    return paths


def make_generation_requests(
    preds: Sequence[SensePrediction], targets: Sequence[TargetWord], cfg: PipelineConfig
) -> list[defgen.GenerationRequest]:
    usages_by_sense = defgen.collect_novel_usages(preds, targets)
    lemma_of = {p.predicted_sense_id: p.lemma for p in preds if p.is_novel}
    return [
        defgen.GenerationRequest(
            lemma=lemma_of[sense_id],
            usages=tuple(usages),
            novel_sense_id=sense_id,
            model=cfg.model,
            endpoint=cfg.endpoint,
            temperature=cfg.temperature,
            timeout=cfg.timeout,
            max_retries=cfg.max_retries,
        )
        for sense_id, usages in usages_by_sense.items()
    ]


def make_backend(cfg: PipelineConfig, results: Sequence[LemmaResult] | None = None):
    if cfg.backend == "stub":
        graphs: dict[str, tuple[SemanticGraph, int]] = {}
        for result in results or []:
            if result.graph is None:
                continue
            for sense_id, cluster_id in result.novel_cluster_ids.items():
                graphs[sense_id] = (result.graph, cluster_id)
        return defgen.StubBackend(graphs)
    if cfg.backend == "http":
        return defgen.HttpBackend(api_key_env=cfg.api_key_env)
    raise InputDataError(f"unknown backend {cfg.backend!r} (use 'stub' or 'http')")


def run_subtask2(
    cfg: PipelineConfig,
    preds: Sequence[SensePrediction],
    targets: Sequence[TargetWord],
    out_path,
    results: Sequence[LemmaResult] | None = None,
) -> tuple[list[defgen.GeneratedDefinition], dict[str, str]]:
    """Generate definitions for every novel cluster the detection stage found."""
    requests = make_generation_requests(preds, targets, cfg)
    tmpl = defgen.builtin_template(cfg.language)
    backend = make_backend(cfg, results)
    lemma_of = {r.novel_sense_id: r.lemma for r in requests}
    return defgen.run_batch(
        requests, tmpl, backend, out_path, lemma_of=lemma_of, max_in_flight=cfg.max_in_flight
    )


def _metric_or_none(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return None


def _aggregate(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)


def evaluate_pairs(pairs_by_lemma: Mapping[str, list[metrics.LabeledPair]], global_pool: bool = False) -> dict:
    """The four clustering metrics, averaged per lemma or pooled globally.

    Per-lemma averaging skips lemmas where a metric is undefined (for
    example ARI over new senses when a lemma has no gold-novel usages).
    """
    report: dict = {}
    if global_pool:
        pool = [p for pairs in pairs_by_lemma.values() for p in pairs]
        report["ari"] = _metric_or_none(metrics.ari, pool)
        report["ari_new"] = _metric_or_none(metrics.ari_restricted, pool, metrics.Restriction.NEW_SENSES)
        report["ari_old"] = _metric_or_none(metrics.ari_restricted, pool, metrics.Restriction.OLD_SENSES)
        report["macro_f1"] = _metric_or_none(metrics.macro_f1, pool)
    else:
        lemmas = sorted(pairs_by_lemma)
        report["ari"] = _aggregate([_metric_or_none(metrics.ari, pairs_by_lemma[l]) for l in lemmas])
        report["ari_new"] = _aggregate(
            [_metric_or_none(metrics.ari_restricted, pairs_by_lemma[l], metrics.Restriction.NEW_SENSES) for l in lemmas]
        )
        report["ari_old"] = _aggregate(
            [_metric_or_none(metrics.ari_restricted, pairs_by_lemma[l], metrics.Restriction.OLD_SENSES) for l in lemmas]
        )
        report["macro_f1"] = _aggregate([_metric_or_none(metrics.macro_f1, pairs_by_lemma[l]) for l in lemmas])
    report["n_pairs"] = sum(len(p) for p in pairs_by_lemma.values())
    report["n_lemmas"] = len(pairs_by_lemma)
    return {k: v for k, v in report.items() if v is not None}


def build_labeled_pairs(
    preds: Sequence[SensePrediction], targets: Sequence[TargetWord]
) -> dict[str, list[metrics.LabeledPair]]:
    """Join predictions with gold labels; raises on usage-id mismatches."""
    pred_by_id: dict[str, SensePrediction] = {}
    for pred in preds:
        if pred.usage_id in pred_by_id:
            raise InputDataError(
                f"duplicate prediction for usage {pred.usage_id!r}; "
                "evaluation expects one prediction per usage"
            )
        pred_by_id[pred.usage_id] = pred

    known_usage_ids = {u.usage_id for t in targets for u in t.usages}
    offenders = sorted(uid for uid in pred_by_id if uid not in known_usage_ids)

    pairs_by_lemma: dict[str, list[metrics.LabeledPair]] = {}
    for target in targets:
        inventory = target.gloss_ids()
        for usage in target.usages:
            if usage.period is not Period.NEW or not usage.gold_sense_id:
                continue
            pred = pred_by_id.get(usage.usage_id)
            if pred is None:
                offenders.append(usage.usage_id)
                continue
            pairs_by_lemma.setdefault(target.lemma, []).append(
                metrics.LabeledPair(
                    usage_id=usage.usage_id,
                    gold_sense_id=usage.gold_sense_id,
                    pred_sense_id=pred.predicted_sense_id,
                    gold_is_novel=usage.gold_sense_id not in inventory,
                )
            )
    if offenders:
        shown = ", ".join(sorted(offenders)[:10])
        raise InputDataError(
            f"{len(offenders)} usage-id mismatches between predictions and gold data: {shown}"
        )
    return pairs_by_lemma


def _reference_definitions(targets: Sequence[TargetWord]) -> dict[str, str]:
    refs: dict[str, str] = {}
    for target in targets:
        for gloss in target.novel_glosses:
            refs[gloss.gloss_id] = gloss.definition_text
    return refs


def pair_definitions(
    defs: Mapping[str, dict],
    preds: Sequence[SensePrediction],
    targets: Sequence[TargetWord],
) -> list[tuple[str, str, str]]:
    """(novel_sense_id, generated, reference) triples for definition scoring.

    A generated definition is paired with the definition of the gold novel
    sense that the majority of its cluster's usages carry; clusters whose
    usages have no gold novel sense are skipped.
    """
    gold_of: dict[str, str] = {}
    for target in targets:
        inventory = target.gloss_ids()
        for usage in target.usages:
            if usage.period is Period.NEW and usage.gold_sense_id and usage.gold_sense_id not in inventory:
                gold_of[usage.usage_id] = usage.gold_sense_id
    references = _reference_definitions(targets)

    members: dict[str, list[str]] = {}
    for pred in preds:
        if pred.is_novel:
            members.setdefault(pred.predicted_sense_id, []).append(pred.usage_id)

    triples = []
    for sense_id in sorted(defs):
        usage_ids = members.get(sense_id, [])
        gold_votes = sorted(gold_of[uid] for uid in usage_ids if uid in gold_of)
        if not gold_votes:
            continue
        counts: dict[str, int] = {}
        for g in gold_votes:
            counts[g] = counts.get(g, 0) + 1
        majority = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        reference = references.get(majority)
        if reference:
            triples.append((sense_id, defs[sense_id]["definition"], reference))
    return triples


def load_token_vectors(path) -> dict[str, list[list[float]]]:
    """JSONL of {"text", "tokens", "vecs"} -> text-keyed vector lists."""
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"token vector file not found: {path}")
    table: dict[str, list[list[float]]] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputDataError(f"{path} line {line_no}: invalid JSON ({exc})")
            if "text" not in obj or "vecs" not in obj:
                raise InputDataError(f"{path} line {line_no}: missing 'text'/'vecs'")
            table[obj["text"]] = obj["vecs"]
    return table


def run_evaluate(
    pred_path,
    gold_path,
    defs_path=None,
    token_vecs_path=None,
    language: str = "und",
    global_pool: bool = False,
) -> dict:
    """Full metric report; definition metrics appear only when defs are given."""
    preds = load_predictions(pred_path)
    targets = load_dataset(gold_path, language=language)
    pairs_by_lemma = build_labeled_pairs(preds, targets)
    if not pairs_by_lemma:
        raise InputDataError("gold data carries no labeled new-period usages to evaluate")
    report = evaluate_pairs(pairs_by_lemma, global_pool=global_pool)

    if defs_path is not None:
        defs = defgen.load_definitions(defs_path)
        triples = pair_definitions(defs, preds, targets)
        if triples:
            scores = [
                metrics.bleu(metrics.DefinitionPair(generated=g, reference=r))
                for _, g, r in triples
            ]
            report["bleu_mean"] = sum(scores) / len(scores)
            report["n_definition_pairs"] = len(triples)
        if token_vecs_path is not None and triples:
            token_vecs = load_token_vectors(token_vecs_path)
            f1s = []
            for _, generated, reference in triples:
                cand = token_vecs.get(generated)
                ref = token_vecs.get(reference)
                if cand and ref:
                    f1s.append(metrics.greedy_match_score(cand, ref)[2])
            if f1s:
                report["embed_f1_mean"] = sum(f1s) / len(f1s)

    result = {"per_language": {language: report}, "overall": report}
    return result
