"""Bottom-up clustering of usage embeddings with a neighbor-match distance.

Every usage embedding starts as its own cluster. The globally closest
pair of clusters is merged, and merging repeats until no pair is closer
than the threshold ``t_sc``. Closeness is not measured on the centroids
directly: each centroid is represented by its k nearest vocabulary words,
and the distance between two clusters is the minimum-cost bipartite
matching between the two neighbor sets (mean matched cosine distance,
range [0, 2]). Pulling vocabulary neighbors into the comparison is what
makes low-frequency clusters behave: a cluster of one or two usages is
judged by the company its centroid keeps, not by its few members alone.

The module exposes the functional surface (``cluster_usages``,
``cluster_distance``) plus ``NeighborMatchClustering``, a scikit-learn
style estimator wrapping the same engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .assignment import bipartite_match_cost
from .embeddings import EmbeddingTable, knn


class CentroidUpdate(Enum):
    MIDPOINT = "midpoint"
    SIZE_WEIGHTED = "size_weighted"


class Linkage(Enum):
    # CENTROID matches neighbor sets of the two cluster centroids;
    # AVERAGE_USAGE averages the neighbor-match distance over all
    # usage pairs drawn from the two clusters.
    CENTROID = "centroid"
    AVERAGE_USAGE = "average_usage"


@dataclass(frozen=True)
class ClusterParams:
    """Knobs of the merge loop.

    ``t_sc`` is the maximum distance at which two clusters still merge
    and has no default: it is tuned per dataset. ``k`` defaults to 5
    nearest neighbors. The merged centroid is the plain midpoint of the
    two parents unless ``centroid_update`` says size-weighted.
    """

    t_sc: float
    k: int = 5
    centroid_update: CentroidUpdate = CentroidUpdate.MIDPOINT
    linkage: Linkage = Linkage.CENTROID
    exclude_words: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.t_sc >= 0.0:
            raise ValueError(f"t_sc must be >= 0, got {self.t_sc}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass
class Cluster:
    cluster_id: int
    usage_ids: list[str]
    centroid: np.ndarray

    def min_usage_id(self) -> str:
        return min(self.usage_ids)


@dataclass
class ClusterSet:
    """A partition of one lemma's usage ids, with per-cluster centroids."""

    lemma: str
    clusters: list[Cluster]
    params: ClusterParams

    def labels(self) -> dict[str, int]:
        return {uid: c.cluster_id for c in self.clusters for uid in c.usage_ids}

    def usage_ids(self) -> list[str]:
        return sorted(uid for c in self.clusters for uid in c.usage_ids)


def _clamped_cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    # 1 - cosine, clamped so rounding can never push it below 0 or above 2.
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 1.0
    sim = float(a @ b) / denom
    return 1.0 - max(-1.0, min(1.0, sim))


class _DistanceEngine:
    """Neighbor-match distances with caches keyed by centroid bytes.

    Distances are recomputed after every merge because a merged centroid
    has a new neighbor set; the caches only skip recomputation for
    centroids that did not change.
    """

    def __init__(self, vocab: EmbeddingTable, params: ClusterParams):
        self.vocab = vocab
        self.params = params
        self.exclude = frozenset(params.exclude_words)
        self._knn_cache: dict[bytes, tuple[str, ...]] = {}
        self._pair_cache: dict[tuple[bytes, bytes], float] = {}

    def neighbor_words(self, vec: np.ndarray) -> tuple[str, ...]:
        key = vec.tobytes()
        words = self._knn_cache.get(key)
        if words is None:
            words = knn(vec, self.vocab, self.params.k, exclude=self.exclude).words()
            self._knn_cache[key] = words
        return words

    def vector_distance(self, a: np.ndarray, b: np.ndarray) -> float:
        key = (a.tobytes(), b.tobytes())
        dist = self._pair_cache.get(key)
        if dist is None:
            words_a = self.neighbor_words(a)
            words_b = self.neighbor_words(b)
            vecs_a = [np.asarray(self.vocab.vector(w), dtype=np.float64) for w in words_a]
            vecs_b = [np.asarray(self.vocab.vector(w), dtype=np.float64) for w in words_b]
            k = self.params.k
            cost = np.empty((k, k))
            for i in range(k):
                for j in range(k):
                    cost[i, j] = _clamped_cosine_distance(vecs_a[i], vecs_b[j])
            total, _ = bipartite_match_cost(cost)
            dist = total / k
            self._pair_cache[key] = dist
        return dist

    def cluster_distance(self, a: "_WorkCluster", b: "_WorkCluster") -> float:
        if self.params.linkage is Linkage.CENTROID:
            return self.vector_distance(a.centroid, b.centroid)
        pair_dists = [
            self.vector_distance(va, vb) for va in a.member_vecs for vb in b.member_vecs
        ]
        return float(np.mean(pair_dists))


@dataclass
class _WorkCluster:
    min_id: str
    usage_ids: list[str]
    centroid: np.ndarray
    size: int
    member_vecs: list[np.ndarray] = field(default_factory=list)


def cluster_distance(a: Cluster, b: Cluster, vocab: EmbeddingTable, params: ClusterParams) -> float:
    """Neighbor-match distance between two cluster centroids."""
    engine = _DistanceEngine(vocab, params)
    return engine.vector_distance(
        np.asarray(a.centroid, dtype=np.float64), np.asarray(b.centroid, dtype=np.float64)
    )


def cluster_usages(
    usage_vecs: Mapping[str, Sequence[float]],
    vocab: EmbeddingTable,
    params: ClusterParams,
    lemma: str = "",
    exclude_lemma: bool = True,
) -> ClusterSet:
    """Partition one lemma's usage embeddings by iterative closest-pair merging.

    Deterministic regardless of mapping iteration order: usages are
    canonically sorted by usage_id, and ties on the minimal distance pick
    the pair with the lexicographically smallest (min usage_id) pair. The
    lemma's own vocabulary entry is excluded from neighbor lookups unless
    ``exclude_lemma`` is off. Cluster ids are assigned 0..m-1 in order of
    each cluster's smallest usage id.
    """
    if not usage_vecs:
        raise ValueError("cluster_usages needs at least one usage embedding")
    if exclude_lemma and lemma and lemma not in params.exclude_words:
        params = replace(params, exclude_words=params.exclude_words + (lemma,))
    engine = _DistanceEngine(vocab, params)

    work: list[_WorkCluster] = []
    for uid in sorted(usage_vecs):
        vec = np.asarray(usage_vecs[uid], dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != vocab.dim:
            raise ValueError(
                f"usage {uid!r}: vector shape {vec.shape} incompatible with vocabulary dim {vocab.dim}"
            )
        work.append(_WorkCluster(min_id=uid, usage_ids=[uid], centroid=vec, size=1, member_vecs=[vec]))

    # work stays sorted by min_id: a merged cluster inherits the smaller
    # min_id and replaces the earlier of its two parents.
    while len(work) > 1:
        best_key = None
        best_pair = None
        for ia in range(len(work)):
            for ib in range(ia + 1, len(work)):
                a, b = work[ia], work[ib]
                dist = engine.cluster_distance(a, b)
                key = (dist, a.min_id, b.min_id)
                if best_key is None or key < best_key:
                    best_key = key
                    best_pair = (ia, ib)
        if best_key[0] >= params.t_sc:
            break
        ia, ib = best_pair
        a, b = work[ia], work[ib]
        if params.centroid_update is CentroidUpdate.MIDPOINT:
            centroid = (a.centroid + b.centroid) / 2.0
        else:
            centroid = (a.centroid * a.size + b.centroid * b.size) / (a.size + b.size)
        work[ia] = _WorkCluster(
            min_id=a.min_id,
            usage_ids=sorted(a.usage_ids + b.usage_ids),
            centroid=centroid,
            size=a.size + b.size,
            member_vecs=a.member_vecs + b.member_vecs,
        )
        del work[ib]

    clusters = [
        Cluster(cluster_id=i, usage_ids=list(w.usage_ids), centroid=w.centroid)
        for i, w in enumerate(work)
    ]
    return ClusterSet(lemma=lemma, clusters=clusters, params=params)


class NeighborMatchClustering(ClusterMixin, BaseEstimator):
    """Scikit-learn flavored front end for :func:`cluster_usages`.

    Parameters mirror ClusterParams; ``vocab`` is the word-embedding
    table backing neighbor lookups. ``fit`` accepts an (n_samples, dim)
    array and stores ``labels_``, ``centroids_`` and ``n_clusters_``.
    """

    def __init__(
        self,
        t_sc: float = 0.5,
        k: int = 5,
        vocab: EmbeddingTable | None = None,
        centroid_update: str = "midpoint",
        linkage: str = "centroid",
        exclude_words: tuple[str, ...] = (),
    ):
        self.t_sc = t_sc
        self.k = k
        self.vocab = vocab
        self.centroid_update = centroid_update
        self.linkage = linkage
        self.exclude_words = exclude_words

    def _params(self) -> ClusterParams:
        return ClusterParams(
            t_sc=self.t_sc,
            k=self.k,
            centroid_update=CentroidUpdate(self.centroid_update),
            linkage=Linkage(self.linkage),
            exclude_words=tuple(self.exclude_words),
        )

    def fit(self, X, y=None, usage_ids: Sequence[str] | None = None):
        if self.vocab is None:
            raise ValueError("NeighborMatchClustering requires a vocabulary table (vocab=...)")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError(f"X must be a non-empty 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X holds non-finite values")
        if usage_ids is None:
            width = len(str(X.shape[0] - 1))
            usage_ids = [str(i).zfill(width) for i in range(X.shape[0])]
        elif len(usage_ids) != X.shape[0]:
            raise ValueError(f"{len(usage_ids)} usage_ids for {X.shape[0]} rows")
        elif len(set(usage_ids)) != len(usage_ids):
            raise ValueError("usage_ids must be unique")

        result = cluster_usages(
            {uid: X[i] for i, uid in enumerate(usage_ids)},
            self.vocab,
            self._params(),
            exclude_lemma=False,
        )
        label_of = result.labels()
        self.cluster_set_ = result
        self.labels_ = np.array([label_of[uid] for uid in usage_ids], dtype=int)
        self.centroids_ = np.stack([c.centroid for c in result.clusters])
        self.n_clusters_ = len(result.clusters)
        return self


def cluster_set_to_dict(cs: ClusterSet) -> dict:
    return {
        "lemma": cs.lemma,
        "params": {
            "t_sc": cs.params.t_sc,
            "k": cs.params.k,
            "centroid_update": cs.params.centroid_update.value,
            "linkage": cs.params.linkage.value,
            "exclude_words": list(cs.params.exclude_words),
        },
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "usage_ids": list(c.usage_ids),
                "centroid": [float(x) for x in c.centroid],
            }
            for c in cs.clusters
        ],
    }


def cluster_set_from_dict(obj: dict) -> ClusterSet:
    params = ClusterParams(
        t_sc=obj["params"]["t_sc"],
        k=obj["params"]["k"],
        centroid_update=CentroidUpdate(obj["params"]["centroid_update"]),
        linkage=Linkage(obj["params"]["linkage"]),
        exclude_words=tuple(obj["params"]["exclude_words"]),
    )
    clusters = [
        Cluster(
            cluster_id=c["cluster_id"],
            usage_ids=list(c["usage_ids"]),
            centroid=np.asarray(c["centroid"], dtype=np.float64),
        )
        for c in obj["clusters"]
    ]
    return ClusterSet(lemma=obj["lemma"], clusters=clusters, params=params)


def save_cluster_sets(cluster_sets: Sequence[ClusterSet], path) -> None:
    payload = {"cluster_sets": [cluster_set_to_dict(cs) for cs in sorted(cluster_sets, key=lambda c: c.lemma)]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_cluster_sets(path) -> list[ClusterSet]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [cluster_set_from_dict(obj) for obj in payload["cluster_sets"]]
