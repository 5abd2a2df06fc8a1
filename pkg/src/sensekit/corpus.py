"""Data model for target words, usages and sense inventories, plus disk I/O.

A dataset file (TSV or JSONL, see docs/formats.md) holds one usage per
row/line. Rows are grouped by headword into TargetWord records; the sense
inventory of a headword is collected from the gloss columns of its
old-period rows. Loaded structures are never mutated afterwards, so they
are safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import InputDataError

PREDICTION_COLUMNS = ("usage_id", "lemma", "predicted_sense_id", "is_novel")

_REQUIRED_COLUMNS = ("usage_id", "word", "text", "period")

_PERIOD_ALIASES = {
    "old": "OLD",
    "earlier": "OLD",
    "0": "OLD",
    "new": "NEW",
    "later": "NEW",
    "1": "NEW",
}


class Period(Enum):
    OLD = "OLD"
    NEW = "NEW"


class DatasetFormat(Enum):
    TSV = "tsv"
    JSONL = "jsonl"


def parse_period(raw: str, line_no: int) -> Period:
    canon = _PERIOD_ALIASES.get(raw.strip().lower())
    if canon is None:
        raise InputDataError(
            f"line {line_no}: unknown period {raw!r} "
            f"(accepted: {sorted(_PERIOD_ALIASES)})"
        )
    return Period[canon]


@dataclass(frozen=True)
class SenseGloss:
    """One dictionary sense entry of a headword."""

    gloss_id: str
    definition_text: str
    is_novel: bool = False


@dataclass(frozen=True)
class UsageRecord:
    """One corpus usage of a target word at a given time period."""

    usage_id: str
    text: str
    period: Period
    target_span: tuple[int, int] | None = None
    gold_sense_id: str | None = None


@dataclass
class TargetWord:
    """A headword with its sense inventory and corpus usages.

    ``sense_inventory`` holds the dictionary senses (old-period rows);
    ``novel_glosses`` holds reference definitions that evaluation data
    attaches to gold novel senses in new-period rows.
    """

    lemma: str
    language: str
    sense_inventory: list[SenseGloss] = field(default_factory=list)
    usages: list[UsageRecord] = field(default_factory=list)
    novel_glosses: list[SenseGloss] = field(default_factory=list)

    def gloss_ids(self) -> set[str]:
        return {g.gloss_id for g in self.sense_inventory}

    def periods(self) -> dict[str, Period]:
        return {u.usage_id: u.period for u in self.usages}


@dataclass(frozen=True)
class SensePrediction:
    """Predicted sense id for one usage; novel ids are not in the inventory."""

    usage_id: str
    lemma: str
    predicted_sense_id: str
    is_novel: bool
    similarity: float | None = None


@dataclass(frozen=True)
class _Row:
    line_no: int
    usage_id: str
    word: str
    text: str
    period: Period
    gloss_id: str | None
    definition: str | None
    span: tuple[int, int] | None
    language: str | None


def _parse_span(raw, line_no: int, text: str) -> tuple[int, int] | None:
    if raw is None or raw == "":
        return None
    if isinstance(raw, str):
        parts = raw.split(":")
        if len(parts) != 2:
            raise InputDataError(f"line {line_no}: span must be 'start:end', got {raw!r}")
        raw = parts
    try:
        start, end = int(raw[0]), int(raw[1])
    except (ValueError, TypeError, IndexError):
        raise InputDataError(f"line {line_no}: span must hold two integers, got {raw!r}")
    if not (0 <= start < end <= len(text)):
        raise InputDataError(
            f"line {line_no}: span {start}:{end} out of bounds for text of length {len(text)}"
        )
    return start, end


def _rows_from_tsv(path: Path) -> Iterable[_Row]:
    with path.open(encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
        if not header_line:
            raise InputDataError(f"{path}: missing header row")
        header = header_line.rstrip("\n").rstrip("\r").split("\t")
        missing = [c for c in _REQUIRED_COLUMNS if c not in header]
        if missing:
            raise InputDataError(f"{path}: header lacks required columns {missing}")
        index = {name: i for i, name in enumerate(header)}
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise InputDataError(
                    f"line {line_no}: expected {len(header)} columns, got {len(cells)}"
                )

            def cell(name):
                i = index.get(name)
                if i is None:
                    return None
                return cells[i] if cells[i] != "" else None

            yield _build_row(
                line_no,
                usage_id=cell("usage_id"),
                word=cell("word"),
                text=cell("text"),
                period=cell("period"),
                gloss_id=cell("gloss_id"),
                definition=cell("definition"),
                span=cell("span"),
                language=cell("language"),
            )


def _rows_from_jsonl(path: Path) -> Iterable[_Row]:
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputDataError(f"line {line_no}: invalid JSON ({exc})")
            if not isinstance(obj, dict):
                raise InputDataError(f"line {line_no}: expected a JSON object")
            yield _build_row(
                line_no,
                usage_id=obj.get("usage_id"),
                word=obj.get("word"),
                text=obj.get("text"),
                period=obj.get("period"),
                gloss_id=obj.get("gloss_id"),
                definition=obj.get("definition"),
                span=obj.get("span"),
                language=obj.get("language"),
            )


def _build_row(line_no, *, usage_id, word, text, period, gloss_id, definition, span, language) -> _Row:
    for name, value in (("usage_id", usage_id), ("word", word), ("text", text), ("period", period)):
        if value is None or (isinstance(value, str) and value == ""):
            raise InputDataError(f"line {line_no}: missing required field {name!r}")
        if not isinstance(value, str):
            raise InputDataError(f"line {line_no}: field {name!r} must be a string")
    return _Row(
        line_no=line_no,
        usage_id=usage_id,
        word=word,
        text=text,
        period=parse_period(period, line_no),
        gloss_id=gloss_id or None,
        definition=definition or None,
        span=_parse_span(span, line_no, text),
        language=language or None,
    )


def load_dataset(path, format: DatasetFormat | str | None = None, language: str = "und") -> list[TargetWord]:
    """Load a usage dataset and group it into lemma-sorted TargetWord records.

    ``format`` defaults to the file suffix (.tsv / .jsonl). The sense
    inventory of each headword is built from the distinct
    (gloss_id, definition) pairs of its old-period rows. Loading is
    order-insensitive: usages are sorted by usage_id, glosses by gloss_id.
    """
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"dataset file not found: {path}")
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if isinstance(format, str):
        try:
            format = DatasetFormat(format.lower())
        except ValueError:
            raise InputDataError(f"unknown dataset format {format!r} (use tsv or jsonl)")
    reader = _rows_from_tsv if format is DatasetFormat.TSV else _rows_from_jsonl

    rows_by_lemma: dict[str, list[_Row]] = {}
    seen_ids: dict[str, int] = {}
    for row in reader(path):
        if row.usage_id in seen_ids:
            raise InputDataError(
                f"line {row.line_no}: duplicate usage_id {row.usage_id!r} "
                f"(first seen at line {seen_ids[row.usage_id]})"
            )
        seen_ids[row.usage_id] = row.line_no
        rows_by_lemma.setdefault(row.word, []).append(row)

    # Gloss ids key the gloss embedding table, so the same id may not carry
    # two different definitions anywhere in the dataset.
    global_defs: dict[str, tuple[str, str]] = {}

    targets = []
    for lemma in sorted(rows_by_lemma):
        rows = rows_by_lemma[lemma]
        languages = {r.language for r in rows if r.language}
        if len(languages) > 1:
            raise InputDataError(f"lemma {lemma!r}: conflicting language tags {sorted(languages)}")
        lemma_language = languages.pop() if languages else language

        defs: dict[str, set[str]] = {}
        for row in rows:
            if row.period is Period.OLD and row.gloss_id:
                defs.setdefault(row.gloss_id, set())
                if row.definition:
                    defs[row.gloss_id].add(row.definition)

        inventory = []
        for gloss_id in sorted(defs):
            texts = sorted(defs[gloss_id])
            if len(texts) > 1:
                raise InputDataError(
                    f"lemma {lemma!r}: gloss {gloss_id!r} has conflicting definitions"
                )
            if not texts:
                raise InputDataError(
                    f"lemma {lemma!r}: gloss {gloss_id!r} never carries a definition"
                )
            definition = texts[0]
            prior = global_defs.get(gloss_id)
            if prior is not None and prior[1] != definition:
                raise InputDataError(
                    f"gloss id {gloss_id!r} reused under lemmas {prior[0]!r} and {lemma!r} "
                    f"with different definitions; gloss ids must be unique"
                )
            global_defs[gloss_id] = (lemma, definition)
            inventory.append(SenseGloss(gloss_id=gloss_id, definition_text=definition))

        # Evaluation data may attach definitions to gold novel senses on
        # new-period rows; keep them as references, outside the inventory.
        inventory_ids = {g.gloss_id for g in inventory}
        novel_defs: dict[str, set[str]] = {}
        for row in rows:
            if row.period is Period.NEW and row.gloss_id and row.gloss_id not in inventory_ids:
                if row.definition:
                    novel_defs.setdefault(row.gloss_id, set()).add(row.definition)
        novel_glosses = []
        for gloss_id in sorted(novel_defs):
            texts = sorted(novel_defs[gloss_id])
            if len(texts) > 1:
                raise InputDataError(
                    f"lemma {lemma!r}: novel sense {gloss_id!r} has conflicting definitions"
                )
            novel_glosses.append(
                SenseGloss(gloss_id=gloss_id, definition_text=texts[0], is_novel=True)
            )

        usages = [
            UsageRecord(
                usage_id=row.usage_id,
                text=row.text,
                period=row.period,
                target_span=row.span,
                gold_sense_id=row.gloss_id,
            )
            for row in sorted(rows, key=lambda r: r.usage_id)
        ]
        targets.append(
            TargetWord(
                lemma=lemma,
                language=lemma_language,
                sense_inventory=inventory,
                usages=usages,
                novel_glosses=novel_glosses,
            )
        )
    return targets


def save_predictions(preds: Iterable[SensePrediction], path) -> None:
    """Write predictions as TSV, one row per usage, sorted by usage_id."""
    rows = sorted(preds, key=lambda p: p.usage_id)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(PREDICTION_COLUMNS) + "\n")
        for p in rows:
            fh.write(
                f"{p.usage_id}\t{p.lemma}\t{p.predicted_sense_id}\t"
                f"{'true' if p.is_novel else 'false'}\n"
            )


def load_predictions(path) -> list[SensePrediction]:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"prediction file not found: {path}")
    preds = []
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != list(PREDICTION_COLUMNS):
            raise InputDataError(f"{path}: unexpected prediction header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != 4:
                raise InputDataError(f"line {line_no}: expected 4 columns, got {len(cells)}")
            usage_id, lemma, sense_id, novel = cells
            if novel not in ("true", "false"):
                raise InputDataError(f"line {line_no}: is_novel must be true/false, got {novel!r}")
            if not usage_id or not sense_id:
                raise InputDataError(f"line {line_no}: empty usage_id or predicted_sense_id")
            preds.append(
                SensePrediction(
                    usage_id=usage_id,
                    lemma=lemma,
                    predicted_sense_id=sense_id,
                    is_novel=novel == "true",
                )
            )
    return preds
