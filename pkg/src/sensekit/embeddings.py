"""Fixed-dimension embedding tables with exact nearest-neighbor lookup.

Tables store id -> vector for one of three id spaces: surface word forms
(WORD), usage ids (USAGE) or gloss ids (GLOSS). Two on-disk encodings are
supported and described in docs/formats.md: the EMB1 binary format and a
JSONL format with one ``{"id": ..., "vec": [...]}`` object per line.
Tables are immutable after load; every query is read-only.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputDataError

_MAGIC = b"EMB1"
_VERSION = 1


class Kind(Enum):
    WORD = "word"
    USAGE = "usage"
    GLOSS = "gloss"


@dataclass(frozen=True)
class NeighborList:
    """k nearest vocabulary words for one query, best first.

    Similarities are non-increasing; exact ties are broken by
    lexicographic word order.
    """

    query_id: str
    neighbors: tuple[tuple[str, float], ...]

    def words(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.neighbors)


class EmbeddingTable:
    """Immutable id -> vector store with a single fixed dimension."""

    def __init__(self, entries: Mapping[str, Sequence[float]], kind: Kind = Kind.WORD):
        if not entries:
            raise InputDataError("embedding table must hold at least one entry")
        self.kind = kind
        self._entries: dict[str, np.ndarray] = {}
        self.dim = -1
        for key in entries:
            vec = np.asarray(entries[key], dtype=np.float32)
            if vec.ndim != 1:
                raise InputDataError(f"entry {key!r}: vector must be one-dimensional")
            if self.dim < 0:
                self.dim = vec.shape[0]
                if self.dim == 0:
                    raise InputDataError(f"entry {key!r}: vector is empty")
            elif vec.shape[0] != self.dim:
                raise InputDataError(
                    f"entry {key!r}: dimension {vec.shape[0]} conflicts with table dimension {self.dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise InputDataError(f"entry {key!r}: vector holds non-finite values")
            vec.flags.writeable = False
            self._entries[key] = vec
        # Sorted-id matrix backing exact k-NN scans.
        self._ids = sorted(self._entries)
        self._matrix = np.stack([self._entries[i] for i in self._ids]).astype(np.float64)
        self._norms = np.linalg.norm(self._matrix, axis=1)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def ids(self) -> list[str]:
        return list(self._ids)

    def vector(self, key: str) -> np.ndarray:
        try:
            return self._entries[key]
        except KeyError:
            raise KeyError(f"no {self.kind.value} embedding for id {key!r}")

    def subset(self, keys: Iterable[str], kind: Kind | None = None) -> "EmbeddingTable":
        return EmbeddingTable({k: self._entries[k] for k in keys}, kind=kind or self.kind)


def load_table(path, kind: Kind = Kind.WORD) -> EmbeddingTable:
    """Load a table from an EMB1 binary or JSONL file (sniffed by magic)."""
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"embedding file not found: {path}")
    with path.open("rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return _load_binary(path, kind)
    return _load_jsonl(path, kind)


def _load_binary(path: Path, kind: Kind) -> EmbeddingTable:
    data = path.read_bytes()
    if data[:4] != _MAGIC:
        raise InputDataError(f"{path}: bad magic {data[:4]!r}, expected {_MAGIC!r}")
    if len(data) < 16:
        raise InputDataError(f"{path}: truncated header")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != _VERSION:
        raise InputDataError(f"{path}: unsupported version {version}, expected {_VERSION}")
    if dim == 0:
        raise InputDataError(f"{path}: dimension must be positive")
    offset = 16
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 2 > len(data):
            raise InputDataError(f"{path}: truncated entry header")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise InputDataError(f"{path}: truncated entry body")
        key = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        if key in entries:
            raise InputDataError(f"{path}: duplicate id {key!r}")
        entries[key] = vec
    if offset != len(data):
        raise InputDataError(f"{path}: {len(data) - offset} trailing bytes after {count} entries")
    return EmbeddingTable(entries, kind=kind)


def _load_jsonl(path: Path, kind: Kind) -> EmbeddingTable:
    entries: dict[str, list[float]] = {}

    def _reject(value):
        raise InputDataError(f"{path}: non-finite value {value!r}")

    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line, parse_constant=_reject)
            except json.JSONDecodeError as exc:
                raise InputDataError(f"{path} line {line_no}: invalid JSON ({exc})")
            if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
                raise InputDataError(f"{path} line {line_no}: expected keys 'id' and 'vec'")
            key, vec = obj["id"], obj["vec"]
            if not isinstance(key, str) or not isinstance(vec, list):
                raise InputDataError(f"{path} line {line_no}: 'id' must be a string, 'vec' a list")
            if key in entries:
                raise InputDataError(f"{path} line {line_no}: duplicate id {key!r}")
            entries[key] = vec
    return EmbeddingTable(entries, kind=kind)


def save_table(table: EmbeddingTable, path, format: str = "binary") -> None:
    """Write a table in sorted-id order; output is byte-deterministic."""
    path = Path(path)
    if format == "binary":
        with path.open("wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<III", _VERSION, table.dim, len(table)))
            for key in table.ids():
                encoded = key.encode("utf-8")
                if len(encoded) > 0xFFFF:
                    raise InputDataError(f"id too long to encode: {key[:40]!r}...")
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
                fh.write(table.vector(key).astype("<f4").tobytes())
    elif format == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for key in table.ids():
                vec = [float(x) for x in table.vector(key)]
                fh.write(json.dumps({"id": key, "vec": vec}) + "\n")
    else:
        raise ValueError(f"unknown table format {format!r} (use 'binary' or 'jsonl')")


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; 0.0 (with a warning) if either is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("cosine_similarity expects one-dimensional vectors")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    norm_a = math.sqrt(float(a @ a))
    norm_b = math.sqrt(float(b @ b))
    if norm_a == 0.0 or norm_b == 0.0:
        warnings.warn("cosine similarity of a zero vector treated as 0.0", RuntimeWarning)
        return 0.0
    return float(a @ b) / (norm_a * norm_b)


def knn(query, vocab: EmbeddingTable, k: int, exclude: Iterable[str] = (), query_id: str = "") -> NeighborList:
    """Exact top-k vocabulary words by cosine similarity to ``query``.

    The scan is exhaustive over the table, so the ranking is invariant
    under positive scaling of the query. Raises if fewer than k words
    remain after exclusion.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.shape[0] != vocab.dim:
        raise ValueError(f"query dimension {query.shape} incompatible with vocabulary dim {vocab.dim}")
    excluded = set(exclude)
    available = len(vocab) - sum(1 for w in excluded if w in vocab)
    if available < k:
        raise ValueError(f"k-NN needs {k} candidates but only {available} are available after exclusion")

    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        warnings.warn("k-NN query is a zero vector; all similarities are 0.0", RuntimeWarning)
        sims = np.zeros(len(vocab))
    else:
        denom = vocab._norms * qnorm
        sims = np.zeros(len(vocab))
        nonzero = denom > 0.0
        if not np.all(nonzero):
            warnings.warn("cosine similarity of a zero vector treated as 0.0", RuntimeWarning)
        sims[nonzero] = (vocab._matrix @ query)[nonzero] / denom[nonzero]

    ranked = sorted(
        ((w, float(s)) for w, s in zip(vocab.ids(), sims) if w not in excluded),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return NeighborList(query_id=query_id, neighbors=tuple(ranked[:k]))


def average(vectors: Sequence) -> np.ndarray:
    """Component-wise arithmetic mean of a non-empty list of equal-dim vectors."""
    if len(vectors) == 0:
        raise ValueError("average of an empty list of vectors is undefined")
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
    dim = arrays[0].shape
    for i, arr in enumerate(arrays):
        if arr.ndim != 1:
            raise ValueError(f"vector {i} is not one-dimensional")
        if arr.shape != dim:
            raise ValueError(f"vector {i} has dimension {arr.shape[0]}, expected {dim[0]}")
    return np.mean(np.stack(arrays), axis=0)
