"""Statistical significance pruning of phrase tables.

Each entry gets a Fisher exact test on its sentence-level 2x2 contingency
table: out of N sentence pairs, count(s) contain the source phrase, count(t)
the target phrase, count(s,t) both. The p-value is the hypergeometric right
tail P[X >= count(s,t)], evaluated in log space. The default threshold keeps
an entry only if it is strictly more significant than a phrase pair occurring
once on each side and once jointly, whose p-value is exactly 1/N.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..errors import DataError
from .table import PhraseTable


@dataclass(frozen=True)
class CooccurrenceStats:
    src_counts: dict
    tgt_counts: dict
    joint_counts: dict
    n: int


def _phrases_up_to(sentence, max_len):
    found = set()
    for i in range(len(sentence)):
        for j in range(i, min(i + max_len, len(sentence))):
            found.add(tuple(sentence[i : j + 1]))
    return found


def cooccurrence_stats(corpus, max_phrase_len: int = 7) -> CooccurrenceStats:
    """Sentence-level occurrence counts for all phrases up to max_phrase_len."""
    src_counts = Counter()
    tgt_counts = Counter()
    joint_counts = Counter()
    for src, tgt in corpus.pairs:
        s_phrases = _phrases_up_to(src, max_phrase_len)
        t_phrases = _phrases_up_to(tgt, max_phrase_len)
        src_counts.update(s_phrases)
        tgt_counts.update(t_phrases)
        joint_counts.update((s, t) for s in s_phrases for t in t_phrases)
    return CooccurrenceStats(dict(src_counts), dict(tgt_counts), dict(joint_counts), len(corpus.pairs))


def _log_comb(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_neglog_p(n: int, count_src: int, count_tgt: int, joint: int) -> float:
    """-ln P[X >= joint] for X hypergeometric(N=n, K=count_src, draws=count_tgt)."""
    if joint > min(count_src, count_tgt) or min(count_src, count_tgt, joint) < 0:
        raise DataError(f"impossible contingency counts ({count_src}, {count_tgt}, {joint}) in N={n}")
    hi = min(count_src, count_tgt)
    log_terms = [
        _log_comb(count_src, k) + _log_comb(n - count_src, count_tgt - k) - _log_comb(n, count_tgt)
        for k in range(joint, hi + 1)
        if count_tgt - k <= n - count_src
    ]
    if not log_terms:
        raise DataError(f"impossible contingency counts ({count_src}, {count_tgt}, {joint}) in N={n}")
    peak = max(log_terms)
    log_tail = peak + math.log(sum(math.exp(x - peak) for x in log_terms))
    # The tail is a probability; clip the tiny positive drift lgamma can leave.
    return -min(log_tail, 0.0)


def significance_prune(
    table: PhraseTable,
    stats: CooccurrenceStats,
    mode: str = "alpha_plus_epsilon",
    threshold: float | None = None,
) -> PhraseTable:
    """Drop entries not strictly more significant than the threshold.

    mode="alpha_plus_epsilon" uses -ln(1/N), the p-value of a 1-1-1 entry, so
    such entries are always pruned. An explicit threshold overrides the mode.
    """
    if mode != "alpha_plus_epsilon":
        raise DataError(f"unknown pruning mode {mode!r}")
    if threshold is None:
        threshold = math.log(stats.n)
    kept = []
    for e in table.entries:
        cs = stats.src_counts.get(e.s)
        ct = stats.tgt_counts.get(e.t)
        cj = stats.joint_counts.get((e.s, e.t))
        if cs is None or ct is None or cj is None:
            raise DataError(f"no cooccurrence statistics for {e.s}/{e.t}")
        if fisher_neglog_p(stats.n, cs, ct, cj) > threshold:
            kept.append(e)
    return PhraseTable(table.src_lang, table.tgt_lang, tuple(kept))
