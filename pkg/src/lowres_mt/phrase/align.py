"""Directed best-link alignment and grow-diag-final symmetrization."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DataError
from .lexical import NULL, LexicalTable

# Diagonal neighbors last, per the published heuristic's neighbor list.
_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class Alignment:
    links: frozenset

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset(self.links))


def directed_alignment(prob: dict, cond, gen) -> frozenset:
    """Best conditioning word per generated word under t(f|e).

    Returns links as (conditioning index, generated index). A word aligns to
    the highest-probability conditioning word, the earliest on ties; if NULL
    scores at least as high as every word, the word stays unaligned.
    """
    links = set()
    for j, f in enumerate(gen):
        null_score = prob.get(NULL, {}).get(f, 0.0)
        best_i, best = -1, null_score
        for i, e in enumerate(cond):
            score = prob.get(e, {}).get(f, 0.0)
            if score > best:
                best_i, best = i, score
        if best_i >= 0:
            links.add((best_i, j))
    return frozenset(links)


def grow_diag_final(a_fwd: frozenset, a_bwd: frozenset, src_len: int, tgt_len: int) -> Alignment:
    """Symmetrize two directed alignments (links are (src, tgt) in both).

    Starts from the intersection, grows into the union through neighboring
    points that cover an unaligned row or column, then adds remaining
    directed links under the same coverage condition (fwd first).
    """
    union = a_fwd | a_bwd
    aligned = set(a_fwd & a_bwd)
    rows = {i for i, _ in aligned}
    cols = {j for _, j in aligned}

    grew = True
    while grew:
        grew = False
        for i in range(src_len):
            for j in range(tgt_len):
                if (i, j) not in aligned:
                    continue
                for di, dj in _NEIGHBORS:
                    p = (i + di, j + dj)
                    if p in union and p not in aligned and (p[0] not in rows or p[1] not in cols):
                        aligned.add(p)
                        rows.add(p[0])
                        cols.add(p[1])
                        grew = True

    for directed in (a_fwd, a_bwd):
        for p in sorted(directed):
            if p not in aligned and (p[0] not in rows or p[1] not in cols):
                aligned.add(p)
                rows.add(p[0])
                cols.add(p[1])
    return Alignment(frozenset(aligned))


def align_pair(table_fwd, table_bwd, pair) -> Alignment:
    """Align one sentence pair: two directed passes, then grow-diag-final.

    Accepts either a full LexicalTable (the matching direction is taken) or
    a bare directed probability map per argument.
    """
    src, tgt = pair
    if not src or not tgt:
        raise DataError("cannot align an empty sentence")
    fwd_prob = table_fwd.tgt_given_src if isinstance(table_fwd, LexicalTable) else table_fwd
    bwd_prob = table_bwd.src_given_tgt if isinstance(table_bwd, LexicalTable) else table_bwd
    a_fwd = directed_alignment(fwd_prob, src, tgt)
    a_bwd = frozenset((i, j) for j, i in directed_alignment(bwd_prob, tgt, src))
    return grow_diag_final(a_fwd, a_bwd, len(src), len(tgt))
