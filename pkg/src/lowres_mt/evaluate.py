"""Corpus-level BLEU and paired bootstrap significance testing.

BLEU is the classical corpus-level, single-reference form: clipped n-gram
precisions up to 4, geometric mean, multiplicative brevity penalty, no
smoothing. Any zero precision gives score 0.

The paired bootstrap resamples sentence indices with replacement and asks
how often the nominally worse system wins. Ties count against significance:
each tied resample contributes half, so two identical systems land at 0.5
exactly instead of looking significant. Every resample draws its indices
from a seed derived from (seed, resample index), so the result does not
depend on evaluation order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Sentence
from .errors import ConfigError, DataError

MAX_NGRAM = 4


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, float, float, float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int


@dataclass(frozen=True)
class SignificanceReport:
    delta_bleu: float
    p_value: float
    samples: int
    seed: int


def _check_pairs(hyps, refs):
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise DataError("nothing to score")
    for i, (h, r) in enumerate(zip(hyps, refs)):
        if not h or not r:
            raise DataError(f"empty sentence at line {i + 1}")


def _sentence_stats(hyp: Sentence, ref: Sentence):
    """Clipped match and total counts per n, plus both lengths."""
    matches = []
    totals = []
    for n in range(1, MAX_NGRAM + 1):
        hyp_grams = Counter(tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1))
        ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
        matches.append(sum(min(c, ref_grams[g]) for g, c in hyp_grams.items()))
        totals.append(max(len(hyp) - n + 1, 0))
    return matches, totals, len(hyp), len(ref)


def _score_from_sums(matches, totals, hyp_len, ref_len) -> BleuScore:
    precisions = tuple(
        (m / t if t > 0 else 0.0) for m, t in zip(matches, totals)
    )
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    if all(p > 0.0 for p in precisions):
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / MAX_NGRAM)
    else:
        score = 0.0
    return BleuScore(score, precisions, bp, hyp_len, ref_len)


def bleu(hyps: list[Sentence], refs: list[Sentence]) -> BleuScore:
    """Corpus-level BLEU of hypotheses against single references."""
    _check_pairs(hyps, refs)
    matches = [0] * MAX_NGRAM
    totals = [0] * MAX_NGRAM
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        m, t, hl, rl = _sentence_stats(hyp, ref)
        for n in range(MAX_NGRAM):
            matches[n] += m[n]
            totals[n] += t[n]
        hyp_len += hl
        ref_len += rl
    return _score_from_sums(matches, totals, hyp_len, ref_len)


def _stat_arrays(hyps, refs):
    rows = [_sentence_stats(h, r) for h, r in zip(hyps, refs)]
    m = np.array([r[0] for r in rows], dtype=np.int64)
    t = np.array([r[1] for r in rows], dtype=np.int64)
    hl = np.array([r[2] for r in rows], dtype=np.int64)
    rl = np.array([r[3] for r in rows], dtype=np.int64)
    return m, t, hl, rl


def _resample_score(stats, idx) -> float:
    m, t, hl, rl = stats
    return _score_from_sums(
        m[idx].sum(axis=0), t[idx].sum(axis=0), int(hl[idx].sum()), int(rl[idx].sum())
    ).score


def paired_bootstrap(
    hypA: list[Sentence],
    hypB: list[Sentence],
    refs: list[Sentence],
    B: int = 1000,
    seed: int = 0,
) -> SignificanceReport:
    """Estimate how reliably the full-set BLEU winner beats the loser."""
    if B < 1:
        raise ConfigError(f"resample count must be >= 1, got {B}")
    _check_pairs(hypA, refs)
    _check_pairs(hypB, refs)

    delta = bleu(hypA, refs).score - bleu(hypB, refs).score
    stats_a = _stat_arrays(hypA, refs)
    stats_b = _stat_arrays(hypB, refs)
    n = len(refs)

    # Orientation: count resamples where the full-set loser wins. A tied
    # full set has no winner; orientation is then arbitrary and the
    # half-weighted ties keep the estimate near 0.5 either way.
    winner_sign = 1.0 if delta >= 0.0 else -1.0
    against = 0.0
    for i in range(B):
        idx = np.random.default_rng([seed, i]).integers(0, n, size=n)
        d = _resample_score(stats_a, idx) - _resample_score(stats_b, idx)
        if d == 0.0:
            against += 0.5
        elif (1.0 if d > 0.0 else -1.0) != winner_sign:
            against += 1.0
    return SignificanceReport(delta, against / B, B, seed)
