"""Phrase-table induction from monolingual data via bilingual embeddings.

The chain: word2phrase merges frequent collocations into single tokens;
skip-gram embeddings are trained per language; the source space is mapped
into the target space with a seed dictionary (orthogonal Procrustes); phrase
vectors are averages of mapped word vectors; translation probabilities are
sharpened-softmax cosine similarities; lexical features come from whatever
small parallel corpus is available.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from ..corpus import MonolingualCorpus
from ..errors import ConfigError, DataError
from .lexical import NULL, LexicalTable
from .table import PhraseTable, PhraseTableEntry

PHRASE_JOINER = "_"

# Internal skip-gram settings; the public knobs live in InductionConfig.
_WINDOW = 5
_EPOCHS = 5
_NEGATIVES = 5
_LEARNING_RATE = 0.05
_NOISE_POWER = 0.75
_NOISE_TABLE_SIZE = 100_000


@dataclass(frozen=True)
class InductionConfig:
    beta: float = 30.0
    dim: int = 200
    n_best: int = 300
    max_vocab_words: int = 300_000
    max_phrases: int = 300_000
    mono_sample: int = 10_000_000

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if self.n_best < 1:
            raise ConfigError(f"n_best must be >= 1, got {self.n_best}")


@dataclass(frozen=True)
class EmbeddingSpace:
    """Word vectors, optionally with an orthogonal map into a shared space."""

    dim: int
    vectors: dict
    mapping: np.ndarray | None = None

    def __post_init__(self):
        for symbol, v in self.vectors.items():
            if v.shape != (self.dim,):
                raise DataError(f"vector for {symbol!r} has shape {v.shape}, want ({self.dim},)")

    def vector(self, symbol):
        """The symbol's vector in the shared space (mapped when a map is set)."""
        v = self.vectors.get(symbol)
        if v is None:
            return None
        return v if self.mapping is None else self.mapping @ v


def word2phrase(
    mono: MonolingualCorpus,
    delta: float = 5.0,
    threshold: float = 100.0,
    passes: int = 1,
) -> MonolingualCorpus:
    """Merge collocations: (a,b) joins into a_b when its score beats threshold.

    score(a,b) = (count(ab) - delta) * N / (count(a) * count(b)), N the token
    count. Merging is greedy left to right within a sentence; repeated passes
    allow phrases longer than two words.
    """
    if passes < 1:
        raise ConfigError(f"passes must be >= 1, got {passes}")
    if delta < 0:
        raise ConfigError(f"delta must be >= 0, got {delta}")
    sentences = mono.sentences
    for _ in range(passes):
        unigrams = Counter()
        bigrams = Counter()
        for s in sentences:
            unigrams.update(s)
            bigrams.update(zip(s, s[1:]))
        n = sum(unigrams.values())
        merged = []
        for s in sentences:
            out = []
            i = 0
            while i < len(s):
                if i + 1 < len(s):
                    a, b = s[i], s[i + 1]
                    score = (bigrams[(a, b)] - delta) * n / (unigrams[a] * unigrams[b])
                    if score > threshold:
                        out.append(a + PHRASE_JOINER + b)
                        i += 2
                        continue
                out.append(s[i])
                i += 1
            merged.append(tuple(out))
        sentences = tuple(merged)
    return MonolingualCorpus(mono.lang, sentences, mono.domain_label)


def _build_vocab(sentences, max_vocab_words):
    freq = Counter()
    for s in sentences:
        freq.update(s)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:max_vocab_words]
    return {w: i for i, (w, _) in enumerate(ranked)}, np.array([c for _, c in ranked], dtype=np.float64)


def train_embeddings(mono: MonolingualCorpus, cfg: InductionConfig, seed: int = 0) -> EmbeddingSpace:
    """Skip-gram with negative sampling, deterministic under the seed."""
    if len(mono) == 0:
        raise DataError("cannot train embeddings on an empty corpus")
    rng = np.random.default_rng(seed)
    sentences = mono.sentences
    if len(sentences) > cfg.mono_sample:
        keep = rng.choice(len(sentences), size=cfg.mono_sample, replace=False)
        sentences = tuple(sentences[i] for i in sorted(keep))

    vocab, freqs = _build_vocab(sentences, cfg.max_vocab_words)
    noise = freqs ** _NOISE_POWER
    noise /= noise.sum()
    noise_table = rng.choice(len(vocab), size=_NOISE_TABLE_SIZE, p=noise)

    dim = cfg.dim
    vec_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    vec_out = np.zeros((len(vocab), dim))

    encoded = [np.array([vocab[w] for w in s if w in vocab], dtype=np.int64) for s in sentences]
    cursor = 0
    for _ in range(_EPOCHS):
        for ids in encoded:
            if len(ids) < 2:
                continue
            spans = rng.integers(1, _WINDOW + 1, size=len(ids))
            for pos, center in enumerate(ids):
                span = spans[pos]
                lo = max(0, pos - span)
                hi = min(len(ids), pos + span + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    context = ids[ctx_pos]
                    targets = [center]
                    for _ in range(_NEGATIVES):
                        targets.append(int(noise_table[cursor % _NOISE_TABLE_SIZE]))
                        cursor += 1
                    v = vec_in[context]
                    grad_v = np.zeros(dim)
                    for rank, target in enumerate(targets):
                        label = 1.0 if rank == 0 else 0.0
                        u = vec_out[target]
                        g = (label - 1.0 / (1.0 + math.exp(-float(u @ v)))) * _LEARNING_RATE
                        grad_v += g * u
                        vec_out[target] = u + g * v
                    vec_in[context] = v + grad_v
    vectors = {w: vec_in[i].copy() for w, i in vocab.items()}
    return EmbeddingSpace(dim, vectors)


def map_embeddings(src: EmbeddingSpace, tgt: EmbeddingSpace, seed_dict) -> EmbeddingSpace:
    """Fit the orthogonal map W minimizing sum ||W s_i - t_i||^2.

    Solved by singular value decomposition of the cross-covariance of the
    seed pairs. Returns the source space with the mapping attached.
    """
    pairs = [(s, t) for s, t in seed_dict if s in src.vectors and t in tgt.vectors]
    if len(pairs) < src.dim:
        raise DataError(f"need at least {src.dim} usable seed pairs, have {len(pairs)}")
    x = np.stack([src.vectors[s] for s, _ in pairs])
    y = np.stack([tgt.vectors[t] for _, t in pairs])
    u, _, vt = np.linalg.svd(x.T @ y)
    w = vt.T @ u.T
    return replace(src, mapping=w)


def collect_phrases(mono: MonolingualCorpus, cfg: InductionConfig) -> list:
    """Most frequent tokens of a (word2phrase-merged) corpus, as word tuples."""
    freq = Counter()
    for s in mono.sentences:
        freq.update(s)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.max_phrases]
    return [tuple(token.split(PHRASE_JOINER)) for token, _ in ranked]


def _phrase_matrix(phrases, space):
    """Mean word vector per phrase; phrases with unembedded words are skipped."""
    kept = []
    rows = []
    for phrase in phrases:
        vectors = [space.vector(w) for w in phrase]
        if any(v is None for v in vectors):
            continue
        kept.append(phrase)
        rows.append(np.mean(vectors, axis=0))
    return kept, (np.stack(rows) if rows else np.zeros((0, space.dim)))


def _no_alignment_lexical(gen, cond, prob, floor=1e-12):
    """Lexical weight without an internal alignment: every generated word
    averages over all conditioning words plus NULL."""
    weight = 1.0
    for f in gen:
        mass = prob.get(NULL, {}).get(f, 0.0) + sum(prob.get(e, {}).get(f, 0.0) for e in cond)
        weight *= max(mass / (len(cond) + 1), floor)
    return weight


def induce_phrase_table(
    src_phrases,
    tgt_phrases,
    spaces,
    lex: LexicalTable,
    cfg: InductionConfig,
    langs=("", ""),
) -> PhraseTable:
    """Score all source-target phrase combinations by embedding similarity.

    p(t|s) is a softmax with sharpness beta over the cosine similarities of s
    to every candidate target (so retained probabilities sum to at most 1);
    p(s|t) swaps the roles. The top n_best targets per source are kept.
    """
    src_space, tgt_space = spaces
    src_kept, src_mat = _phrase_matrix(src_phrases, src_space)
    tgt_kept, tgt_mat = _phrase_matrix(tgt_phrases, tgt_space)
    if not src_kept or not tgt_kept:
        raise DataError("no embeddable phrases on one side")

    src_norm = src_mat / np.linalg.norm(src_mat, axis=1, keepdims=True)
    tgt_norm = tgt_mat / np.linalg.norm(tgt_mat, axis=1, keepdims=True)
    cosines = src_norm @ tgt_norm.T

    scaled = cfg.beta * cosines
    fwd = np.exp(scaled - scaled.max(axis=1, keepdims=True))
    fwd /= fwd.sum(axis=1, keepdims=True)
    bwd = np.exp(scaled - scaled.max(axis=0, keepdims=True))
    bwd /= bwd.sum(axis=0, keepdims=True)

    entries = []
    for i, s in enumerate(src_kept):
        order = sorted(range(len(tgt_kept)), key=lambda j: (-fwd[i, j], tgt_kept[j]))
        for j in order[: cfg.n_best]:
            # a sharp beta can underflow distant candidates to exactly zero;
            # such entries are dead weight for a log-domain decoder
            if fwd[i, j] <= 0.0 or bwd[i, j] <= 0.0:
                continue
            t = tgt_kept[j]
            entries.append(
                PhraseTableEntry(
                    s,
                    t,
                    phi_fwd=float(fwd[i, j]),
                    lex_fwd=_no_alignment_lexical(t, s, lex.tgt_given_src),
                    phi_bwd=float(bwd[i, j]),
                    lex_bwd=_no_alignment_lexical(s, t, lex.src_given_tgt),
                )
            )
    return PhraseTable(langs[0], langs[1], tuple(entries))
