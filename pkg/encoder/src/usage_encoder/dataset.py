"""Minimal reader for the documented usage-dataset format (TSV / JSONL).

Only the fields this package needs: usage_id, word, text, period,
gloss_id, definition. Period normalization mirrors the documented
aliases. See the core package's docs/formats.md for the full contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

_OLD = {"old", "earlier", "0"}
_NEW = {"new", "later", "1"}


@dataclass(frozen=True)
class Row:
    usage_id: str
    word: str
    text: str
    is_old: bool
    gloss_id: str | None
    definition: str | None


def _period_is_old(raw: str, line_no: int) -> bool:
    value = raw.strip().lower()
    if value in _OLD:
        return True
    if value in _NEW:
        return False
    raise ValueError(f"line {line_no}: unknown period {raw!r}")


def read_dataset(path) -> list[Row]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if path.suffix.lower() == ".jsonl":
        return _read_jsonl(path)
    return _read_tsv(path)


def _read_tsv(path: Path) -> list[Row]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r").split("\t")
        index = {name: i for i, name in enumerate(header)}
        for required in ("usage_id", "word", "text", "period"):
            if required not in index:
                raise ValueError(f"{path}: header lacks column {required!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise ValueError(f"line {line_no}: expected {len(header)} columns")

            def cell(name):
                i = index.get(name)
                return cells[i] if i is not None and cells[i] != "" else None

            rows.append(
                Row(
                    usage_id=cell("usage_id"),
                    word=cell("word"),
                    text=cell("text"),
                    is_old=_period_is_old(cell("period"), line_no),
                    gloss_id=cell("gloss_id"),
                    definition=cell("definition"),
                )
            )
    return rows


def _read_jsonl(path: Path) -> list[Row]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            rows.append(
                Row(
                    usage_id=obj["usage_id"],
                    word=obj["word"],
                    text=obj["text"],
                    is_old=_period_is_old(obj["period"], line_no),
                    gloss_id=obj.get("gloss_id"),
                    definition=obj.get("definition"),
                )
            )
    return rows
