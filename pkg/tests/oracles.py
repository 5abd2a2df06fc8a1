"""Independent oracle implementations used to cross-check the package.

Everything here is deliberately written along a different route from the
code under test: exhaustive enumeration instead of the Hungarian
algorithm, pair counting instead of the contingency table, a separately
coded BLEU, and plain-loop scans for k-NN and averaging.
"""

from __future__ import annotations

import itertools
import math
import unicodedata


def brute_force_assignment(matrix) -> tuple[float, tuple[int, ...]]:
    """Minimum-cost perfect matching by trying every permutation."""
    n = len(matrix)
    best_total = None
    best_perm = None
    for perm in itertools.permutations(range(n)):
        total = sum(matrix[i][perm[i]] for i in range(n))
        if best_total is None or total < best_total:
            best_total = total
            best_perm = perm
    return best_total, best_perm


def pair_counting_ari(gold, pred) -> float:
    """Adjusted Rand Index by counting agreeing pairs directly."""
    n = len(gold)
    if n < 2:
        raise ValueError("need at least 2 items")
    same_gold = same_pred = same_both = 0
    for i in range(n):
        for j in range(i + 1, n):
            g = gold[i] == gold[j]
            p = pred[i] == pred[j]
            same_gold += g
            same_pred += p
            same_both += g and p
    total = n * (n - 1) // 2
    expected = same_gold * same_pred / total
    max_index = (same_gold + same_pred) / 2
    if max_index == expected:
        return 1.0
    return (same_both - expected) / (max_index - expected)


def _reference_tokens(text: str) -> list[str]:
    # Same pinned semantics, independently coded as a character loop.
    out = []
    current: list[str] = []
    for ch in text.lower():
        if unicodedata.category(ch).startswith("P"):
            continue
        if ch.isspace():
            if current:
                out.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        out.append("".join(current))
    return out


def reference_bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Second, independent sentence-BLEU with the same pinned choices."""
    cand = _reference_tokens(candidate)
    ref = _reference_tokens(reference)
    if not ref:
        raise ValueError("empty reference")
    if not cand:
        return 0.0
    product = 1.0
    for n in range(1, max_n + 1):
        cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
        ref_counts: dict = {}
        for gram in ref_grams:
            ref_counts[gram] = ref_counts.get(gram, 0) + 1
        cand_counts: dict = {}
        for gram in cand_grams:
            cand_counts[gram] = cand_counts.get(gram, 0) + 1
        clipped = sum(min(count, ref_counts.get(gram, 0)) for gram, count in cand_counts.items())
        total = len(cand_grams)
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        product *= precision ** (1.0 / max_n)
    if len(cand) < len(ref):
        product *= math.exp(1.0 - len(ref) / len(cand))
    return product


def brute_force_knn(query, entries: dict, k: int, exclude=()) -> list[tuple[str, float]]:
    """Full-scan top-k by cosine, coded with plain python loops."""
    scored = []
    for word, vec in entries.items():
        if word in exclude:
            continue
        dot = sum(float(a) * float(b) for a, b in zip(query, vec))
        norm_q = math.sqrt(sum(float(a) ** 2 for a in query))
        norm_v = math.sqrt(sum(float(b) ** 2 for b in vec))
        sim = 0.0 if norm_q == 0 or norm_v == 0 else dot / (norm_q * norm_v)
        scored.append((word, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def naive_mean(vectors) -> list[float]:
    """Left-to-right summation mean, no numpy."""
    dim = len(vectors[0])
    sums = [0.0] * dim
    for vec in vectors:
        for i in range(dim):
            sums[i] += float(vec[i])
    return [s / len(vectors) for s in sums]


def greedy_match_oracle(cand, ref) -> tuple[float, float, float]:
    """Exhaustive max-scan version of the greedy embedding match."""

    def cos(a, b):
        dot = sum(float(x) * float(y) for x, y in zip(a, b))
        na = math.sqrt(sum(float(x) ** 2 for x in a))
        nb = math.sqrt(sum(float(y) ** 2 for y in b))
        return 0.0 if na == 0 or nb == 0 else dot / (na * nb)

    precision = sum(max(cos(c, r) for r in ref) for c in cand) / len(cand)
    recall = sum(max(cos(r, c) for c in cand) for r in ref) / len(ref)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
