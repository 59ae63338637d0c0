"""Lexical translation probabilities via expectation-maximization.

A simple word-for-word model with a null source word, trained in both
directions over the same parallel corpus. Good enough to drive alignment
symmetrization and the lexical weighting features at desk scale.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from ..corpus import ParallelCorpus
from ..errors import DataError

NULL = "<null>"


@dataclass(frozen=True)
class LexicalTable:
    """Word translation probabilities for both directions.

    tgt_given_src[e][f] = t(f|e) with e a source word or NULL;
    src_given_tgt[e][f] = t(f|e) with e a target word or NULL.
    Each inner map sums to 1 over f.
    """

    tgt_given_src: dict
    src_given_tgt: dict


def _train_direction(pairs, iterations):
    """EM for t(f|e): pairs are (conditioning sentence, generated sentence)."""
    prob = {}
    cooc = defaultdict(set)
    for e_sent, f_sent in pairs:
        for e in tuple(e_sent) + (NULL,):
            cooc[e].update(f_sent)
    for e, fs in cooc.items():
        uniform = 1.0 / len(fs)
        prob[e] = {f: uniform for f in sorted(fs)}

    for _ in range(iterations):
        count = defaultdict(lambda: defaultdict(float))
        for e_sent, f_sent in pairs:
            sources = tuple(e_sent) + (NULL,)
            for f in f_sent:
                denom = sum(prob[e][f] for e in sources)
                for e in sources:
                    count[e][f] += prob[e][f] / denom
        for e, row in count.items():
            total = sum(row.values())
            prob[e] = {f: c / total for f, c in sorted(row.items())}
    return prob


def train_ibm1(corpus: ParallelCorpus, iterations: int) -> LexicalTable:
    """Train both lexical directions; iterations=0 gives uniform tables."""
    if iterations < 0:
        raise DataError(f"iteration count must be >= 0, got {iterations}")
    if len(corpus) == 0:
        raise DataError("cannot train a lexical model on an empty corpus")
    fwd = _train_direction([(s, t) for s, t in corpus.pairs], iterations)
    bwd = _train_direction([(t, s) for s, t in corpus.pairs], iterations)
    return LexicalTable(fwd, bwd)


def ibm1_loglikelihood(prob: dict, pairs) -> float:
    """Log-likelihood of generated sentences under a directed lexical model.

    Uses the standard uniform-alignment decomposition: each generated word f
    contributes log( (1/(l+1)) Σ_e t(f|e) ) with e ranging over the
    conditioning sentence plus NULL.
    """
    total = 0.0
    for e_sent, f_sent in pairs:
        sources = tuple(e_sent) + (NULL,)
        for f in f_sent:
            mass = sum(prob.get(e, {}).get(f, 0.0) for e in sources)
            if mass <= 0.0:
                raise DataError(f"word {f!r} has no translation mass")
            total += math.log(mass / len(sources))
    return total
