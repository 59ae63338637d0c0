"""Monotone phrase-based stack decoding.

Hypotheses cover the source left to right in contiguous phrase chunks; no
reordering. One stack per number of covered source tokens; hypotheses within
a stack recombine on their language-model state, keeping the better score.
Deterministic throughout: every tie breaks toward the lexicographically
smaller output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..corpus import BOS, EOS, UNK, Sentence
from ..errors import ConfigError
from ..lm import NGramModel
from .table import PhraseTable, PhraseTableEntry


@dataclass(frozen=True)
class DecoderWeights:
    phi_fwd: float = 1.0
    lex_fwd: float = 1.0
    phi_bwd: float = 1.0
    lex_bwd: float = 1.0
    lm: float = 1.0
    length: float = 1.0

    def finite(self):
        return all(
            math.isfinite(v)
            for v in (self.phi_fwd, self.lex_fwd, self.phi_bwd, self.lex_bwd, self.lm, self.length)
        )


def merge_tables(tables) -> dict:
    """Combine entries from several tables; on duplicate (s, t) the highest
    phi_fwd wins, earlier tables winning exact ties."""
    best = {}
    for table in tables:
        for e in table.entries:
            key = (e.s, e.t)
            if key not in best or e.phi_fwd > best[key].phi_fwd:
                best[key] = e
    by_source = {}
    for e in best.values():
        by_source.setdefault(e.s, []).append(e)
    for s in by_source:
        by_source[s].sort(key=PhraseTableEntry.sort_key)
    return by_source


def _phrase_increment(entry, weights, lm, state):
    """Score delta for appending one phrase, and the resulting LM state."""
    inc = (
        weights.phi_fwd * math.log(entry.phi_fwd)
        + weights.lex_fwd * math.log(entry.lex_fwd)
        + weights.phi_bwd * math.log(entry.phi_bwd)
        + weights.lex_bwd * math.log(entry.lex_bwd)
        + weights.length * len(entry.t)
    )
    for token in entry.t:
        inc += weights.lm * lm.logprob(token, state)
        mapped = token if token in lm.vocab else UNK
        state = (state + (mapped,))[max(0, len(state) + 1 - (lm.order - 1)) :]
    return inc, state


def decode_monotone(
    tables,
    lm: NGramModel,
    weights: DecoderWeights,
    src: Sentence,
    beam: int = 100,
) -> Sentence:
    """Best monotone segmentation translation of src under the given models.

    Source tokens without any single-token table entry pass through verbatim
    (scored as an entry with all features 1). The language model also scores
    the end-of-sentence event.
    """
    if beam < 1:
        raise ConfigError(f"beam must be >= 1, got {beam}")
    if not weights.finite():
        raise ConfigError("decoder weights must be finite")
    by_source = merge_tables(tables)
    covered = {t for t in by_source if len(t) == 1}
    for token in src:
        if (token,) not in covered:
            by_source[(token,)] = [PhraseTableEntry((token,), (token,), 1.0, 1.0, 1.0, 1.0)]
            covered.add((token,))

    start_state = (BOS,) * (lm.order - 1)
    # stacks[n]: lm state -> (score, output) for hypotheses covering n tokens
    stacks = [dict() for _ in range(len(src) + 1)]
    stacks[0][start_state] = (0.0, ())
    for pos in range(len(src)):
        if not stacks[pos]:
            continue
        ranked = sorted(stacks[pos].items(), key=lambda kv: (-kv[1][0], kv[1][1]))
        limit = len(ranked) if beam >= len(ranked) else int(beam)
        for state, (score, output) in ranked[:limit]:
            for length in range(1, len(src) - pos + 1):
                for entry in by_source.get(tuple(src[pos : pos + length]), ()):
                    inc, new_state = _phrase_increment(entry, weights, lm, state)
                    candidate = (score + inc, output + entry.t)
                    stack = stacks[pos + length]
                    held = stack.get(new_state)
                    if held is None or candidate[0] > held[0] or (
                        candidate[0] == held[0] and candidate[1] < held[1]
                    ):
                        stack[new_state] = candidate

    finals = [
        (score + weights.lm * lm.logprob(EOS, state), output)
        for state, (score, output) in stacks[len(src)].items()
    ]
    finals.sort(key=lambda f: (-f[0], f[1]))
    return finals[0][1]
