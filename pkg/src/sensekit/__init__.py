"""Toolkit for detecting dictionary-uncovered word senses in diachronic
corpora and drafting definitions for them.

The pipeline: cluster a target word's usage embeddings with a
neighbor-match agglomerative algorithm, align the clusters with the
word's dictionary glosses by centroid similarity, flag unmatched
clusters as novel senses, and optionally generate dictionary-style
definitions for the novel clusters via a chat-completions endpoint.
"""

__version__ = "0.1.0"

from .assignment import bipartite_match_cost
from .clustering import (
    Cluster,
    ClusterParams,
    ClusterSet,
    NeighborMatchClustering,
    cluster_distance,
    cluster_usages,
)
from .corpus import (
    Period,
    SenseGloss,
    SensePrediction,
    TargetWord,
    UsageRecord,
    load_dataset,
    load_predictions,
    save_predictions,
)
from .defgen import (
    GeneratedDefinition,
    GenerationRequest,
    PromptTemplate,
    collect_novel_usages,
    generate,
    render_prompt,
    stub_generate,
    truncate_definition,
)
from .embeddings import EmbeddingTable, Kind, NeighborList, average, cosine_similarity, knn, load_table, save_table
from .errors import GenerationError, InputDataError, SensekitError
from .graph import SemanticGraph, build_graph, export_dot
from .mapping import MappingParams, Scope, map_clusters
from .metrics import (
    DefinitionPair,
    LabeledPair,
    Restriction,
    ari,
    ari_restricted,
    bleu,
    greedy_match_score,
    macro_f1,
)
from .pipeline import PipelineConfig, run_evaluate, run_subtask1, run_subtask2

__all__ = [
    "__version__",
    "bipartite_match_cost",
    "Cluster",
    "ClusterParams",
    "ClusterSet",
    "NeighborMatchClustering",
    "cluster_distance",
    "cluster_usages",
    "Period",
    "SenseGloss",
    "SensePrediction",
    "TargetWord",
    "UsageRecord",
    "load_dataset",
    "load_predictions",
    "save_predictions",
    "GeneratedDefinition",
    "GenerationRequest",
    "PromptTemplate",
    "collect_novel_usages",
    "generate",
    "render_prompt",
    "stub_generate",
    "truncate_definition",
    "EmbeddingTable",
    "Kind",
    "NeighborList",
    "average",
    "cosine_similarity",
    "knn",
    "load_table",
    "save_table",
    "GenerationError",
    "InputDataError",
    "SensekitError",
    "SemanticGraph",
    "build_graph",
    "export_dot",
    "MappingParams",
    "Scope",
    "map_clusters",
    "DefinitionPair",
    "LabeledPair",
    "Restriction",
    "ari",
    "ari_restricted",
    "bleu",
    "greedy_match_score",
    "macro_f1",
    "PipelineConfig",
    "run_evaluate",
    "run_subtask1",
    "run_subtask2",
]
