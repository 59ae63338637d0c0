"""Pivot triangulation of two phrase tables sharing an intermediate language."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from ..errors import ConfigError
from .table import PhraseTable, PhraseTableEntry


@dataclass(frozen=True)
class TriangulationConfig:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")


def triangulate(pt_se: PhraseTable, pt_et: PhraseTable, cfg: TriangulationConfig) -> PhraseTable:
    """Join source-pivot and pivot-target tables over shared pivot phrases.

    Every feature of a joined (s, t) entry is the sum over pivots e of the
    corresponding feature products, accumulated in lexicographic pivot order
    so results are bit-reproducible. The phi sums are probabilities by
    construction; the lexical sums may exceed 1 because lexical weights are
    not normalized over pivots, so they are clamped to 1. Per source phrase
    only the k best targets by phi_fwd survive, ties going to the
    lexicographically smaller target phrase.
    """
    if pt_se.tgt_lang and pt_et.src_lang and pt_se.tgt_lang != pt_et.src_lang:
        raise ConfigError(
            f"pivot mismatch: first table targets {pt_se.tgt_lang!r}, "
            f"second table reads {pt_et.src_lang!r}"
        )
    second_by_pivot = pt_et.by_source()
    contributions = defaultdict(list)
    for first in pt_se.entries:
        for second in second_by_pivot.get(first.t, ()):
            contributions[(first.s, second.t)].append(
                (
                    first.t,
                    second.phi_fwd * first.phi_fwd,
                    second.lex_fwd * first.lex_fwd,
                    first.phi_bwd * second.phi_bwd,
                    first.lex_bwd * second.lex_bwd,
                )
            )

    by_source = defaultdict(list)
    for (s, t), terms in contributions.items():
        phi_fwd = lex_fwd = phi_bwd = lex_bwd = 0.0
        for _, pf, lf, pb, lb in sorted(terms):
            phi_fwd += pf
            lex_fwd += lf
            phi_bwd += pb
            lex_bwd += lb
        by_source[s].append(
            PhraseTableEntry(s, t, phi_fwd, min(lex_fwd, 1.0), phi_bwd, min(lex_bwd, 1.0))
        )

    entries = []
    for s, candidates in by_source.items():
        candidates.sort(key=lambda e: (-e.phi_fwd, e.t))
        entries.extend(candidates[: cfg.k])
    return PhraseTable(pt_se.src_lang, pt_et.tgt_lang, tuple(entries))
