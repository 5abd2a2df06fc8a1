"""Definition generation for novel-sense clusters.

One request is issued per novel cluster and asks for a collective
definition covering all of the cluster's usages. The HTTP backend talks
to any OpenAI-compatible chat-completions endpoint; the stub backend is
deterministic and offline, for tests and dry runs. Whatever the backend
returns is normalized the same way: cut at the first sentence terminator,
then capped at ``max_words`` whitespace tokens.
"""

from __future__ import annotations

import json
import os
import time
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import httpx

from .corpus import Period, SensePrediction, TargetWord
from .errors import GenerationError, InputDataError
from .graph import SemanticGraph
from .metrics import tokenize

SENTENCE_TERMINATORS = (".", "!", "?")

_PLACEHOLDERS = ("{target_word}", "{lang}", "{quotations}")

_TEMPLATE_LANGUAGES = ("en", "fi", "ru", "de")


@dataclass(frozen=True)
class PromptTemplate:
    """Instruction text with one slot each for headword, language and quotations."""

    language: str
    instruction_text: str
    max_words: int = 10

    def __post_init__(self):
        for placeholder in _PLACEHOLDERS:
            count = self.instruction_text.count(placeholder)
            if count != 1:
                raise InputDataError(
                    f"template for {self.language!r}: placeholder {placeholder} "
                    f"occurs {count} times, expected exactly once"
                )
        if self.max_words < 1:
            raise InputDataError(f"max_words must be >= 1, got {self.max_words}")


@dataclass(frozen=True)
class GenerationRequest:
    lemma: str
    usages: tuple[str, ...]
    novel_sense_id: str
    model: str
    endpoint: str = ""
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 3

    def __post_init__(self):
        if not self.usages:
            raise ValueError(f"{self.novel_sense_id}: a request needs at least one usage")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class GeneratedDefinition:
    novel_sense_id: str
    text: str
    raw_text: str
    model: str
    latency_ms: int


def load_template(path, language: str, max_words: int = 10) -> PromptTemplate:
    text = Path(path).read_text(encoding="utf-8")
    return PromptTemplate(language=language, instruction_text=text, max_words=max_words)


def builtin_template(language: str, max_words: int = 10) -> PromptTemplate:
    """Packaged per-language template; unknown languages fall back to English."""
    code = language.strip().lower()[:2]
    if code not in _TEMPLATE_LANGUAGES:
        warnings.warn(f"no prompt template for language {language!r}; using English")
        code = "en"
    text = resources.files("sensekit.prompts").joinpath(f"{code}.txt").read_text(encoding="utf-8")
    return PromptTemplate(language=code, instruction_text=text, max_words=max_words)


def render_prompt(tmpl: PromptTemplate, lemma: str, usages: Sequence[str]) -> str:
    """Fill the template; quotations become a numbered list in input order."""
    if not usages:
        raise ValueError("render_prompt needs at least one usage")
    quotations = "\n".join(f"{i}. {u}" for i, u in enumerate(usages, start=1))
    return (
        tmpl.instruction_text.replace("{target_word}", lemma)
        .replace("{lang}", tmpl.language)
        .replace("{quotations}", quotations)
    )


def truncate_definition(raw: str, max_words: int = 10) -> str:
    """Cut at the first sentence terminator (kept), then cap the word count."""
    text = raw.strip()
    for i, ch in enumerate(text):
        if ch in SENTENCE_TERMINATORS:
            text = text[: i + 1]
            break
    words = text.split()
    if len(words) > max_words:
        text = " ".join(words[:max_words])
    return text


def collect_novel_usages(
    preds: Iterable[SensePrediction], targets: Iterable[TargetWord]
) -> dict[str, list[str]]:
    """Texts of new-period usages predicted novel, grouped by novel sense id.

    Insensitive to prediction order: groups are keyed in sorted id order
    and texts sorted by usage id within each group.
    """
    usage_index: dict[str, tuple[str, Period]] = {}
    for target in targets:
        for usage in target.usages:
            usage_index[usage.usage_id] = (usage.text, usage.period)

    grouped: dict[str, list[tuple[str, str]]] = {}
    for pred in preds:
        if not pred.is_novel:
            continue
        if pred.usage_id not in usage_index:
            raise InputDataError(f"prediction references unknown usage_id {pred.usage_id!r}")
        text, period = usage_index[pred.usage_id]
        if period is not Period.NEW:
            continue
        grouped.setdefault(pred.predicted_sense_id, []).append((pred.usage_id, text))

    return {
        sense_id: [text for _, text in sorted(grouped[sense_id])]
        for sense_id in sorted(grouped)
    }


def stub_generate(
    lemma: str,
    usages: Sequence[str],
    graph: SemanticGraph | None = None,
    cluster_id: int | None = None,
) -> str:
    """Deterministic offline definition: the strongest neighbor words.

    With a graph the three most similar leaves (of the given cluster, or
    of the whole graph) are used; otherwise the three most frequent
    non-target tokens of the usages, frequency then lexicographic order.
    """
    words: list[str] = []
    if graph is not None:
        leaves = graph.leaves_of(cluster_id) if cluster_id is not None else graph.leaf_nodes
        ranked = sorted(leaves, key=lambda l: (-l.similarity, l.word))
        seen = set()
        for leaf in ranked:
            if leaf.word not in seen:
                seen.add(leaf.word)
                words.append(leaf.word)
            if len(words) == 3:
                break
    if not words:
        counts = Counter(t for u in usages for t in tokenize(u) if t != lemma.lower())
        words = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:3]]
    if not words:
        return f"sense of {lemma}."
    return f"sense of {lemma} near: {', '.join(words)}."


class StubBackend:
    """Offline backend; never touches the network."""

    def __init__(self, graphs: Mapping[str, tuple[SemanticGraph, int]] | None = None):
        # graphs maps novel_sense_id -> (semantic graph, cluster_id)
        self.graphs = dict(graphs or {})

    def complete(self, request: GenerationRequest, prompt: str) -> str:
        graph_entry = self.graphs.get(request.novel_sense_id)
        if graph_entry is None:
            return stub_generate(request.lemma, request.usages)
        graph, cluster_id = graph_entry
        return stub_generate(request.lemma, request.usages, graph=graph, cluster_id=cluster_id)


class HttpBackend:
    """OpenAI-compatible chat-completions client with retry and backoff.

    The API key is read from the environment (never from config files).
    Authentication failures abort immediately; 429/5xx responses and
    transport timeouts are retried with exponential backoff up to the
    request's max_retries.
    """

    def __init__(
        self,
        api_key_env: str = "SENSEKIT_API_KEY",
        client: httpx.Client | None = None,
        backoff_base: float = 0.5,
        sleep=time.sleep,
        max_tokens: int = 64,
    ):
        api_key = os.environ.get(api_key_env)
        if not api_key:
            raise GenerationError(
                f"missing API key: set the {api_key_env} environment variable"
            )
        self._headers = {
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
        }
        self._client = client if client is not None else httpx.Client()
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._max_tokens = max_tokens

    def complete(self, request: GenerationRequest, prompt: str) -> str:
        if not request.endpoint:
            raise GenerationError(
                "HTTP backend needs an endpoint URL", novel_sense_id=request.novel_sense_id
            )
        payload = {
            "model": request.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
            "max_tokens": self._max_tokens,
        }
        last_error = None
        for attempt in range(request.max_retries + 1):
            if attempt:
                self._sleep(self._backoff_base * 2 ** (attempt - 1))
            try:
                response = self._client.post(
                    request.endpoint, json=payload, headers=self._headers, timeout=request.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = f"timeout: {exc}"
                continue
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code in (401, 403):
                raise GenerationError(
                    f"authentication rejected (HTTP {response.status_code})",
                    novel_sense_id=request.novel_sense_id,
                )
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise GenerationError(
                    f"unexpected HTTP {response.status_code}: {response.text[:200]}",
                    novel_sense_id=request.novel_sense_id,
                )
            try:
                content = response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
                raise GenerationError(
                    f"malformed completion response: {exc}",
                    novel_sense_id=request.novel_sense_id,
                )
            return content
        raise GenerationError(
            f"gave up after {request.max_retries + 1} attempts ({last_error})",
            novel_sense_id=request.novel_sense_id,
        )


def generate(request: GenerationRequest, tmpl: PromptTemplate, backend) -> GeneratedDefinition:
    """Render the prompt, call the backend, normalize the returned text."""
    prompt = render_prompt(tmpl, request.lemma, request.usages)
    start = time.perf_counter()
    raw = backend.complete(request, prompt)
    latency_ms = int((time.perf_counter() - start) * 1000)
    if raw is None or not raw.strip():
        raise GenerationError("empty model response", novel_sense_id=request.novel_sense_id)
    return GeneratedDefinition(
        novel_sense_id=request.novel_sense_id,
        text=truncate_definition(raw, tmpl.max_words),
        raw_text=raw,
        model=request.model,
        latency_ms=latency_ms,
    )


def load_definitions(path) -> dict[str, dict]:
    """Read a definitions JSONL file keyed by novel_sense_id."""
    path = Path(path)
    records: dict[str, dict] = {}
    if not path.exists():
        return records
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputDataError(f"{path} line {line_no}: invalid JSON ({exc})")
            if "novel_sense_id" not in obj or "definition" not in obj:
                raise InputDataError(f"{path} line {line_no}: missing novel_sense_id/definition")
            records[obj["novel_sense_id"]] = obj
    return records


def run_batch(
    requests: Sequence[GenerationRequest],
    tmpl: PromptTemplate,
    backend,
    out_path,
    lemma_of: Mapping[str, str] | None = None,
    max_in_flight: int = 4,
) -> tuple[list[GeneratedDefinition], dict[str, str]]:
    """Generate definitions concurrently and write them as JSONL.

    Reruns are idempotent: sense ids already present in ``out_path`` are
    skipped, so a partially failed batch can simply be run again. The
    output file is rewritten sorted by novel_sense_id. Failures do not
    abort the batch; they are returned as novel_sense_id -> message.
    """
    existing = load_definitions(out_path)
    pending = [r for r in requests if r.novel_sense_id not in existing]

    failures: dict[str, str] = {}
    generated: list[GeneratedDefinition] = []
    if pending:
        with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
            futures = {
                pool.submit(generate, req, tmpl, backend): req for req in pending
            }
            for future, req in futures.items():
                try:
                    generated.append(future.result())
                except GenerationError as exc:
                    failures[req.novel_sense_id] = str(exc)

    lemma_of = dict(lemma_of or {})
    for req in requests:
        lemma_of.setdefault(req.novel_sense_id, req.lemma)
    for definition in generated:
        existing[definition.novel_sense_id] = {
            "novel_sense_id": definition.novel_sense_id,
            "lemma": lemma_of.get(definition.novel_sense_id, ""),
            "definition": definition.text,
            "model": definition.model,
            "raw_text": definition.raw_text,
        }

    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        for sense_id in sorted(existing):
            fh.write(json.dumps(existing[sense_id], ensure_ascii=False, sort_keys=True) + "\n")
    return generated, failures
