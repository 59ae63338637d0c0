"""Cross-entropy difference data selection and OOV-based pair filtering.

Selection scores each candidate sentence by H_in - H_gen, the difference of
its cross-entropies under an in-domain and a general-domain language model.
Lower means more in-domain, so selection sorts ascending and keeps the first
T survivors. Sentences with tokens unknown to the in-domain model are
discarded before scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import MonolingualCorpus, ParallelCorpus, Sentence
from .errors import ConfigError
from .lm import NGramModel, cross_entropy, has_oov


@dataclass(frozen=True)
class SelectionConfig:
    t: int
    in_domain_lm: NGramModel
    general_lm: NGramModel

    def __post_init__(self):
        if self.t < 1:
            raise ConfigError(f"selection size must be >= 1, got {self.t}")


@dataclass(frozen=True)
class ScoredSentence:
    sentence: Sentence
    score: float


def moore_lewis_select(cfg: SelectionConfig, mono: MonolingualCorpus) -> list[ScoredSentence]:
    """Select up to cfg.t sentences, most in-domain first.

    Ties keep original corpus order (the sort is stable). May return fewer
    than cfg.t entries when the OOV filter removes too much of the pool.
    """
    scored = [
        ScoredSentence(s, cross_entropy(cfg.in_domain_lm, s) - cross_entropy(cfg.general_lm, s))
        for s in mono.sentences
        if not has_oov(cfg.in_domain_lm, s)
    ]
    scored.sort(key=lambda e: e.score)
    return scored[: cfg.t]


def filter_oov_pairs(corpus: ParallelCorpus, src_vocab, tgt_vocab) -> ParallelCorpus:
    """Keep pairs whose source AND target sides each contain an OOV token.

    Used to pick out-of-domain pairs that add new vocabulary on both sides;
    pairs fully covered by the in-domain vocabularies carry no new symbols.
    """
    src_vocab = frozenset(src_vocab)
    tgt_vocab = frozenset(tgt_vocab)
    kept = [
        (s, t)
        for s, t in corpus.pairs
        if any(tok not in src_vocab for tok in s) and any(tok not in tgt_vocab for tok in t)
    ]
    return ParallelCorpus(corpus.src_lang, corpus.tgt_lang, tuple(kept))
