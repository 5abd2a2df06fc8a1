"""Three-layer interpretability graph for a clustered target word.

Layer 1 is the lemma root (average embedding over all of its usages),
layer 2 the cluster centroids, layer 3 the k nearest vocabulary words of
each centroid, annotated with the usage ids of the cluster they explain.
The only export format is Graphviz DOT.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterSet
from .embeddings import EmbeddingTable, average, knn


@dataclass(frozen=True)
class CentroidNode:
    cluster_id: int
    vector: np.ndarray
    usage_ids: tuple[str, ...]


@dataclass(frozen=True)
class LeafNode:
    cluster_id: int
    word: str
    similarity: float
    usage_ids: tuple[str, ...]


@dataclass(frozen=True)
class SemanticGraph:
    lemma: str
    root_vec: np.ndarray
    centroid_nodes: tuple[CentroidNode, ...]
    leaf_nodes: tuple[LeafNode, ...]

    def node_count(self) -> int:
        return 1 + len(self.centroid_nodes) + len(self.leaf_nodes)

    def edge_count(self) -> int:
        return len(self.centroid_nodes) + len(self.leaf_nodes)

    def leaves_of(self, cluster_id: int) -> tuple[LeafNode, ...]:
        return tuple(l for l in self.leaf_nodes if l.cluster_id == cluster_id)


def build_graph(
    cs: ClusterSet,
    usage_vecs: Mapping[str, Sequence[float]],
    vocab: EmbeddingTable,
    k: int,
    exclude_lemma: bool = True,
) -> SemanticGraph:
    """Assemble the root/centroid/neighbor graph for one cluster set."""
    all_ids = cs.usage_ids()
    missing = [uid for uid in all_ids if uid not in usage_vecs]
    if missing:
        raise ValueError(f"usage vectors missing for {missing[:5]} (and {max(0, len(missing) - 5)} more)")
    root_vec = average([usage_vecs[uid] for uid in all_ids])

    exclude = {cs.lemma} if exclude_lemma and cs.lemma else set()
    centroid_nodes = []
    leaf_nodes = []
    for cluster in sorted(cs.clusters, key=lambda c: c.cluster_id):
        usage_ids = tuple(sorted(cluster.usage_ids))
        centroid_nodes.append(
            CentroidNode(cluster_id=cluster.cluster_id, vector=np.asarray(cluster.centroid), usage_ids=usage_ids)
        )
        neighbors = knn(cluster.centroid, vocab, k, exclude=exclude, query_id=f"c{cluster.cluster_id}")
        for word, sim in neighbors.neighbors:
            leaf_nodes.append(
                LeafNode(cluster_id=cluster.cluster_id, word=word, similarity=sim, usage_ids=usage_ids)
            )
    return SemanticGraph(
        lemma=cs.lemma,
        root_vec=root_vec,
        centroid_nodes=tuple(centroid_nodes),
        leaf_nodes=tuple(leaf_nodes),
    )


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: SemanticGraph, path) -> None:
    """Write the graph as Graphviz DOT; byte-identical for identical graphs.

    Node ids follow the documented scheme: ``root``, ``c<cluster_id>``,
    ``w<cluster_id>_<idx>`` where idx is the neighbor rank.
    """
    lines = ["digraph semantic_graph {", "  rankdir=TB;"]
    lines.append(f"  root [label={_quote(graph.lemma)}, shape=doubleoctagon];")
    for node in graph.centroid_nodes:
        cid = node.cluster_id
        label = f"cluster {cid} ({len(node.usage_ids)} usages)"
        lines.append(f"  subgraph cluster_{cid} {{")
        lines.append(f"    label={_quote(f'sense cluster {cid}')};")
        lines.append(f"    c{cid} [label={_quote(label)}, shape=ellipse];")
        for idx, leaf in enumerate(graph.leaves_of(cid)):
            leaf_label = f"{leaf.word} ({','.join(leaf.usage_ids)})"
            lines.append(
                f"    w{cid}_{idx} [label={_quote(leaf_label)}, shape=box, sim={_quote(format(leaf.similarity, '.6f'))}];"
            )
        lines.append("  }")
    for node in graph.centroid_nodes:
        lines.append(f"  root -> c{node.cluster_id};")
        for idx in range(len(graph.leaves_of(node.cluster_id))):
            lines.append(f"  c{node.cluster_id} -> w{node.cluster_id}_{idx};")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
