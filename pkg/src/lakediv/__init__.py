"""Diverse unionable tuple search over data-lake tables.

Given a query table and candidate unionable lake tables, align their columns
holistically, outer-union them into one tuple pool, embed the tuples, and
select k tuples that are diverse with respect to the query tuples and each
other. Ships the clustering-based selector, classic diversification baselines,
diversity metrics, and a reproducible experiment harness.
"""

from .alignment import (
    AlignmentCluster,
    AlignmentMap,
    BuiltinColumnProvider,
    ColumnVector,
    ImportedColumnProvider,
    UnionedTuple,
    UnionedTupleSet,
    align_columns,
    alignment_prf,
    constrained_agglomerative,
    embed_column,
    outer_union,
    select_cluster_count,
    silhouette,
    tfidf_select_tokens,
)
from .distances import cosine_distance, pairwise_distances
from .diversify import (
    DiverseResult,
    DiversifyParams,
    brute_force_best,
    clt,
    cluster_medoids,
    diversify_dust,
    gmc,
    gne,
    prune_tuples,
    random_select,
    rank_candidates,
)
from .embedding import (
    BuiltinTupleProvider,
    EmbeddingMatrix,
    ImportedTupleProvider,
    classify_unionable,
    cosine_embedding_loss,
    embed_tuples,
    pair_accuracy,
    read_embeddings_jsonl,
    write_embeddings_jsonl,
)
from .metrics import (
    DiversityScore,
    average_diversity,
    diversity_score,
    min_diversity,
    novel_values,
    winner_tally,
)
from .serialization import SerializedTuple, parse_serialized, serialize_tuple
from .tables import (
    ColumnRef,
    Table,
    TupleRef,
    drop_null_columns,
    load_manifest,
    load_table,
    validate_query,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
