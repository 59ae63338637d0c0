"""Phrase-pair extraction from a word-aligned sentence pair."""

from __future__ import annotations

from ..errors import ConfigError
from .align import Alignment


def extract_phrase_pairs(pair, alignment: Alignment, max_phrase_len: int = 7) -> set:
    """All alignment-consistent span pairs, as ((i1,i2),(j1,j2)) inclusive.

    A span pair is consistent when it contains at least one link and no link
    crosses its border. Unaligned target words at the projection's edges
    yield additional candidates attaching them on either side.
    """
    if max_phrase_len < 1:
        raise ConfigError(f"max_phrase_len must be >= 1, got {max_phrase_len}")
    src, tgt = pair
    links = sorted(alignment.links)
    aligned_targets = {j for _, j in links}
    result = set()
    for i1 in range(len(src)):
        for i2 in range(i1, min(i1 + max_phrase_len, len(src))):
            projected = [j for i, j in links if i1 <= i <= i2]
            if not projected:
                continue
            j1, j2 = min(projected), max(projected)
            if any(j1 <= j <= j2 and not i1 <= i <= i2 for i, j in links):
                continue
            lo = j1
            while True:
                hi = j2
                while True:
                    if hi - lo + 1 <= max_phrase_len:
                        result.add(((i1, i2), (lo, hi)))
                    hi += 1
                    if hi >= len(tgt) or hi in aligned_targets:
                        break
                lo -= 1
                if lo < 0 or lo in aligned_targets:
                    break
    return result
