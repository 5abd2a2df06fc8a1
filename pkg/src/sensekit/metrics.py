"""Evaluation metrics: ARI (plus old/new restrictions), macro-F1, BLEU,
and a greedy embedding-match score for definition pairs.

The macro-F1 here follows the task convention: only usages whose gold
sense is an old dictionary sense are scored, so wrong novel-sense
predictions are invisible to it (ARI sees them). BLEU is sentence-level
with pinned choices, documented on :func:`bleu`, so scores are
comparable across runs.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .embeddings import cosine_similarity


@dataclass(frozen=True)
class LabeledPair:
    """Gold and predicted sense id for one usage."""

    usage_id: str
    gold_sense_id: str
    pred_sense_id: str
    gold_is_novel: bool

    def __post_init__(self):
        if not self.usage_id or not self.gold_sense_id or not self.pred_sense_id:
            raise ValueError("usage_id, gold_sense_id and pred_sense_id must be non-empty")


@dataclass(frozen=True)
class DefinitionPair:
    generated: str
    reference: str

    def __post_init__(self):
        if not self.reference:
            raise ValueError("reference definition must be non-empty")


class Restriction(Enum):
    NEW_SENSES = "new_senses"
    OLD_SENSES = "old_senses"


def _comb2(n: int) -> int:
    return n * (n - 1) // 2


def ari_from_labels(gold: Sequence, pred: Sequence) -> float:
    """Adjusted Rand Index via the contingency-table formula."""
    if len(gold) != len(pred):
        raise ValueError(f"label vectors differ in length: {len(gold)} vs {len(pred)}")
    if len(gold) < 2:
        raise ValueError("ARI needs at least 2 labeled items")
    contingency: Counter = Counter(zip(gold, pred))
    gold_sizes: Counter = Counter(gold)
    pred_sizes: Counter = Counter(pred)
    index = sum(_comb2(c) for c in contingency.values())
    sum_gold = sum(_comb2(c) for c in gold_sizes.values())
    sum_pred = sum(_comb2(c) for c in pred_sizes.values())
    total_pairs = _comb2(len(gold))
    expected = sum_gold * sum_pred / total_pairs
    max_index = (sum_gold + sum_pred) / 2
    if max_index == expected:
        # Both partitions trivial in the same way (e.g. one cluster vs one
        # cluster): identical partitions, so perfect agreement.
        return 1.0
    return (index - expected) / (max_index - expected)


def ari(pairs: Sequence[LabeledPair]) -> float:
    if len(pairs) < 2:
        raise ValueError(f"ARI needs at least 2 labeled pairs, got {len(pairs)}")
    return ari_from_labels([p.gold_sense_id for p in pairs], [p.pred_sense_id for p in pairs])


def ari_restricted(pairs: Sequence[LabeledPair], restrict: Restriction) -> float:
    """ARI over only gold-novel (NEW_SENSES) or only gold-old (OLD_SENSES) usages."""
    want_novel = restrict is Restriction.NEW_SENSES
    kept = [p for p in pairs if p.gold_is_novel == want_novel]
    if len(kept) < 2:
        raise ValueError(
            f"restriction {restrict.value} leaves {len(kept)} pairs, need at least 2"
        )
    return ari(kept)


def macro_f1(pairs: Sequence[LabeledPair]) -> float:
    """Mean per-class F1 over usages whose gold sense is an old dictionary sense.

    Predictions are compared as plain sense ids, so a usage predicted into
    any novel id counts as a miss for its old gold class.
    """
    pool = [p for p in pairs if not p.gold_is_novel]
    if not pool:
        raise ValueError("macro_f1 needs at least one usage with an old gold sense")
    classes = sorted({p.gold_sense_id for p in pool})
    scores = []
    for cls in classes:
        tp = sum(1 for p in pool if p.gold_sense_id == cls and p.pred_sense_id == cls)
        fp = sum(1 for p in pool if p.gold_sense_id != cls and p.pred_sense_id == cls)
        fn = sum(1 for p in pool if p.gold_sense_id == cls and p.pred_sense_id != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / len(scores)


def tokenize(text: str) -> list[str]:
    """Pinned BLEU tokenizer: lowercase, drop Unicode punctuation, split on whitespace."""
    lowered = text.lower()
    stripped = "".join(c for c in lowered if not unicodedata.category(c).startswith("P"))
    return stripped.split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pair: DefinitionPair, max_n: int = 4) -> float:
    """Sentence-level BLEU in [0, 1].

    Pinned choices: the :func:`tokenize` tokenizer; modified n-gram
    precisions for n = 1..max_n with add-one smoothing on n >= 2 (the
    unigram precision is unsmoothed, so zero unigram overlap scores 0);
    brevity penalty exp(1 - r/c) when the candidate is shorter than the
    reference. An empty candidate scores 0 by convention.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    ref = tokenize(pair.reference)
    if not ref:
        raise ValueError("reference tokenizes to nothing")
    cand = tokenize(pair.generated)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_ngrams = _ngrams(cand, n)
        ref_ngrams = _ngrams(ref, n)
        matches = sum(min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items())
        total = sum(cand_ngrams.values())
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_sum += math.log(precision)
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return brevity * math.exp(log_sum / max_n)


def greedy_match_score(cand_tokens: Sequence, ref_tokens: Sequence) -> tuple[float, float, float]:
    """Greedy embedding match between two token-vector lists.

    Precision is the mean over candidate tokens of the best cosine
    similarity to any reference token, recall the symmetric quantity,
    and f1 their harmonic mean. No idf weighting, no baseline rescaling.
    """
    if len(cand_tokens) == 0 or len(ref_tokens) == 0:
        raise ValueError("token embedding lists must be non-empty")
    precision = sum(
        max(cosine_similarity(c, r) for r in ref_tokens) for c in cand_tokens
    ) / len(cand_tokens)
    recall = sum(
        max(cosine_similarity(r, c) for c in cand_tokens) for r in ref_tokens
    ) / len(ref_tokens)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
