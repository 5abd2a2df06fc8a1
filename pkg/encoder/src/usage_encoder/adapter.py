"""Produce word / usage / gloss embedding tables from a transformer encoder.

Pooling scheme, bottom to top:

- a word's vector in a text is the mean of its subword vectors (special
  tokens never contribute);
- a usage (or gloss definition) vector is the mean of its word vectors;
- a vocabulary word's vector is the mean of the word's vectors over all
  of its occurrences in the corpus usages.

Word forms are matched by exact surface string after NFC normalization;
no lemmatization or lowercasing. Pure-punctuation forms stay inside
usage means but are dropped from the vocabulary table. Runs with the
same config are byte-deterministic: inference is batched in a fixed
order with no sampling anywhere.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .dataset import read_dataset
from .emb1 import write_emb1


class Layer(Enum):
    LAST = "last"
    AVG_LAST4 = "avg_last4"


@dataclass
class EncoderConfig:
    model: str
    layer: Layer = Layer.LAST
    device: str = "cpu"
    batch_size: int = 16


def _is_punctuation(form: str) -> bool:
    return bool(form) and all(unicodedata.category(ch).startswith("P") for ch in form)


class UsageEncoder:
    """Wraps a Hugging Face encoder and pools hidden states into word vectors."""

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(cfg.model)
            self.model = AutoModel.from_pretrained(cfg.model)
        except Exception as exc:
            raise RuntimeError(f"failed to load encoder {cfg.model!r}: {exc}") from exc
        if not getattr(self.tokenizer, "is_fast", False):
            raise RuntimeError("a fast tokenizer is required (word alignment needs offsets)")
        self.model.to(cfg.device)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def encode_words(self, texts: Sequence[str]) -> list[list[tuple[str, np.ndarray]]]:
        """Per text: [(word form, word vector), ...] in reading order."""
        results: list[list[tuple[str, np.ndarray]]] = []
        for start in range(0, len(texts), self.cfg.batch_size):
            chunk = list(texts[start : start + self.cfg.batch_size])
            encoded = self.tokenizer(
                chunk,
                return_tensors="pt",
                padding=True,
                truncation=True,
            )
            inputs = {k: v.to(self.cfg.device) for k, v in encoded.items()}
            with torch.no_grad():
                output = self.model(**inputs, output_hidden_states=True)
            if self.cfg.layer is Layer.LAST:
                hidden = output.hidden_states[-1]
            else:
                hidden = torch.stack(output.hidden_states[-4:]).mean(dim=0)
            hidden = hidden.cpu().numpy().astype(np.float64)

            for i, text in enumerate(chunk):
                word_ids = encoded.word_ids(i)
                spans = encoded[i].offsets
                token_groups: dict[int, list[int]] = {}
                bounds: dict[int, list[int]] = {}
                for token_idx, word_id in enumerate(word_ids):
                    if word_id is None:
                        continue
                    token_groups.setdefault(word_id, []).append(token_idx)
                    s, e = spans[token_idx]
                    if word_id in bounds:
                        bounds[word_id][0] = min(bounds[word_id][0], s)
                        bounds[word_id][1] = max(bounds[word_id][1], e)
                    else:
                        bounds[word_id] = [s, e]
                words = []
                for word_id in sorted(token_groups):
                    vec = hidden[i, token_groups[word_id]].mean(axis=0)
                    s, e = bounds[word_id]
                    form = unicodedata.normalize("NFC", text[s:e])
                    words.append((form, vec))
                results.append(words)
        return results


def _mean(vectors: Iterable[np.ndarray]) -> np.ndarray:
    stacked = np.stack(list(vectors))
    return stacked.mean(axis=0)


def embed_dataset(dataset_path, cfg: EncoderConfig, out_dir) -> dict:
    """Write words.emb / usages.emb / glosses.emb plus a manifest.

    The gloss table is only written when the dataset defines glosses.
    Returns the manifest (also stored as manifest.json in out_dir).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_dataset(dataset_path)
    encoder = UsageEncoder(cfg)

    rows = sorted(rows, key=lambda r: r.usage_id)
    usage_words = encoder.encode_words([r.text for r in rows])

    usage_table: dict[str, np.ndarray] = {}
    vocab_sums: dict[str, np.ndarray] = {}
    vocab_counts: dict[str, int] = {}
    for row, words in zip(rows, usage_words):
        if not words:
            raise ValueError(f"usage {row.usage_id!r}: text yields no tokens")
        usage_table[row.usage_id] = _mean(vec for _, vec in words)
        for form, vec in words:
            if form in vocab_sums:
                vocab_sums[form] += vec
                vocab_counts[form] += 1
            else:
                vocab_sums[form] = vec.copy()
                vocab_counts[form] = 1
    vocab_table = {
        form: vocab_sums[form] / vocab_counts[form]
        for form in vocab_sums
        if not _is_punctuation(form)
    }

    gloss_texts: dict[str, str] = {}
    for row in rows:
        if row.is_old and row.gloss_id and row.definition:
            gloss_texts.setdefault(row.gloss_id, row.definition)
    gloss_table: dict[str, np.ndarray] = {}
    if gloss_texts:
        gloss_ids = sorted(gloss_texts)
        gloss_words = encoder.encode_words([gloss_texts[g] for g in gloss_ids])
        for gloss_id, words in zip(gloss_ids, gloss_words):
            if not words:
                raise ValueError(f"gloss {gloss_id!r}: definition yields no tokens")
            gloss_table[gloss_id] = _mean(vec for _, vec in words)

    paths = {"words": out_dir / "words.emb", "usages": out_dir / "usages.emb"}
    write_emb1(vocab_table, encoder.dim, paths["words"])
    write_emb1(usage_table, encoder.dim, paths["usages"])
    if gloss_table:
        paths["glosses"] = out_dir / "glosses.emb"
        write_emb1(gloss_table, encoder.dim, paths["glosses"])

    manifest = {
        "model": cfg.model,
        "layer": cfg.layer.value,
        "dim": encoder.dim,
        "counts": {
            "word": len(vocab_table),
            "usage": len(usage_table),
            "gloss": len(gloss_table),
        },
        "sha256": {
            name: hashlib.sha256(path.read_bytes()).hexdigest() for name, path in paths.items()
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def embed_tokens(texts: Sequence[str], cfg: EncoderConfig, out_path) -> int:
    """Dump per-text word vectors as JSONL {"text", "tokens", "vecs"}.

    The line count equals len(texts); token counts match encode_words.
    Feeds the embedding-based definition metric of the core package.
    """
    encoder = UsageEncoder(cfg)
    all_words = encoder.encode_words(list(texts))
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        for text, words in zip(texts, all_words):
            record = {
                "text": text,
                "tokens": [form for form, _ in words],
                "vecs": [[float(x) for x in vec] for _, vec in words],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return len(all_words)
