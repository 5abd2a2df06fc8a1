"""Align usage clusters with dictionary glosses; unmatched clusters are novel.

A cluster's collective meaning is its centroid (the average usage
embedding). The centroid is compared with every gloss vector of the
lemma; if the best cosine similarity clears the threshold, every usage
in the cluster is assigned that gloss, otherwise the whole cluster gets
a fresh novel sense id ``<lemma>_novel_<n>``. Predictions are emitted
for new-period usages only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .clustering import ClusterSet
from .corpus import Period, SensePrediction
from .embeddings import EmbeddingTable, cosine_similarity
from .errors import InputDataError


class Scope(Enum):
    # Which usages enter clustering; emission is always new-period only.
    ALL_USAGES = "all_usages"
    NEW_ONLY = "new_only"


@dataclass(frozen=True)
class MappingParams:
    sim_threshold: float = 0.5
    scope: Scope = Scope.ALL_USAGES
    multi_assign: bool = False

    def __post_init__(self):
        if not -1.0 <= self.sim_threshold <= 1.0:
            raise ValueError(f"sim_threshold must lie in [-1, 1], got {self.sim_threshold}")


@dataclass(frozen=True)
class ClusterAssignment:
    """Audit record: how one cluster was matched against the inventory."""

    cluster_id: int
    usage_ids: tuple[str, ...]
    similarities: tuple[tuple[str, float], ...]
    assigned_ids: tuple[str, ...]
    is_novel: bool
    similarity: float | None


def assign_clusters(
    cs: ClusterSet, glosses: EmbeddingTable | None, params: MappingParams
) -> list[ClusterAssignment]:
    """Match every cluster against the gloss inventory (no period filtering)."""
    gloss_ids = sorted(glosses.ids()) if glosses is not None and len(glosses) else []
    assignments = []
    novel_count = 0
    for cluster in sorted(cs.clusters, key=lambda c: c.cluster_id):
        sims = [(gid, cosine_similarity(cluster.centroid, glosses.vector(gid))) for gid in gloss_ids]
        # argmax with ties broken toward the smaller gloss id
        ranked = sorted(sims, key=lambda pair: (-pair[1], pair[0]))
        matched = [pair for pair in ranked if pair[1] >= params.sim_threshold]
        if matched:
            if params.multi_assign:
                assigned = tuple(sorted(gid for gid, _ in matched))
            else:
                assigned = (ranked[0][0],)
            best_sim = ranked[0][1]
            is_novel = False
        else:
            novel_count += 1
            assigned = (f"{cs.lemma}_novel_{novel_count}",)
            best_sim = ranked[0][1] if ranked else None
            is_novel = True
        assignments.append(
            ClusterAssignment(
                cluster_id=cluster.cluster_id,
                usage_ids=tuple(sorted(cluster.usage_ids)),
                similarities=tuple(sims),
                assigned_ids=assigned,
                is_novel=is_novel,
                similarity=best_sim,
            )
        )
    return assignments


def map_clusters(
    cs: ClusterSet,
    glosses: EmbeddingTable | None,
    params: MappingParams,
    periods: Mapping[str, Period],
) -> list[SensePrediction]:
    """Predictions for the new-period usages of one clustered lemma.

    ``periods`` maps every usage id of the cluster set to its period;
    a lemma without new-period usages yields an empty list.
    """
    missing = [uid for uid in cs.usage_ids() if uid not in periods]
    if missing:
        raise InputDataError(
            f"lemma {cs.lemma!r}: no period known for usages {missing[:5]}"
        )
    preds = []
    for assignment in assign_clusters(cs, glosses, params):
        for uid in assignment.usage_ids:
            if periods[uid] is not Period.NEW:
                continue
            for sense_id in assignment.assigned_ids:
                preds.append(
                    SensePrediction(
                        usage_id=uid,
                        lemma=cs.lemma,
                        predicted_sense_id=sense_id,
                        is_novel=assignment.is_novel,
                        similarity=assignment.similarity,
                    )
                )
    preds.sort(key=lambda p: (p.usage_id, p.predicted_sense_id))
    return preds


def mapping_report(cs: ClusterSet, glosses: EmbeddingTable | None, params: MappingParams) -> dict:
    """JSON-ready audit of the cluster-to-gloss similarity matrix."""
    assignments = assign_clusters(cs, glosses, params)
    return {
        "lemma": cs.lemma,
        "sim_threshold": params.sim_threshold,
        "multi_assign": params.multi_assign,
        "gloss_ids": sorted(glosses.ids()) if glosses is not None and len(glosses) else [],
        "clusters": [
            {
                "cluster_id": a.cluster_id,
                "usage_ids": list(a.usage_ids),
                "similarities": {gid: sim for gid, sim in a.similarities},
                "assigned_sense_ids": list(a.assigned_ids),
                "is_novel": a.is_novel,
                "best_similarity": a.similarity,
            }
            for a in assignments
        ],
    }
