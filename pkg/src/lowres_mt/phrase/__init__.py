"""Phrase-based translation machinery.

Word alignment (EM lexical model + grow-diag-final), phrase-pair extraction,
phrase-table construction with the four standard features, significance
pruning, pivot triangulation, embedding-based table induction, and a
monotone stack decoder.
"""

from .align import Alignment, align_pair, directed_alignment, grow_diag_final
from .decoder import DecoderWeights, decode_monotone, merge_tables
from .extract import extract_phrase_pairs
from .induce import (
    EmbeddingSpace,
    InductionConfig,
    collect_phrases,
    induce_phrase_table,
    map_embeddings,
    train_embeddings,
    word2phrase,
)
from .lexical import NULL, LexicalTable, ibm1_loglikelihood, train_ibm1
from .prune import CooccurrenceStats, cooccurrence_stats, fisher_neglog_p, significance_prune
from .table import (
    PhraseTable,
    PhraseTableEntry,
    build_phrase_table,
    load_phrase_table,
    save_phrase_table,
)
from .triangulate import TriangulationConfig, triangulate

__all__ = [
    "NULL",
    "Alignment",
    "CooccurrenceStats",
    "DecoderWeights",
    "EmbeddingSpace",
    "InductionConfig",
    "LexicalTable",
    "PhraseTable",
    "PhraseTableEntry",
    "TriangulationConfig",
    "align_pair",
    "build_phrase_table",
    "collect_phrases",
    "cooccurrence_stats",
    "decode_monotone",
    "merge_tables",
    "directed_alignment",
    "extract_phrase_pairs",
    "fisher_neglog_p",
    "grow_diag_final",
    "ibm1_loglikelihood",
    "induce_phrase_table",
    "load_phrase_table",
    "map_embeddings",
    "save_phrase_table",
    "significance_prune",
    "train_embeddings",
    "train_ibm1",
    "triangulate",
    "word2phrase",
]
