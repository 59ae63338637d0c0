"""Phrase tables: construction from aligned corpora, features, file format."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError
from .align import Alignment
from .extract import extract_phrase_pairs
from .lexical import NULL, LexicalTable

SEPARATOR = " ||| "


@dataclass(frozen=True)
class PhraseTableEntry:
    s: tuple
    t: tuple
    phi_fwd: float
    lex_fwd: float
    phi_bwd: float
    lex_bwd: float

    def __post_init__(self):
        if not self.s or not self.t:
            raise DataError("phrase table entry with an empty phrase")
        for name in ("phi_fwd", "lex_fwd", "phi_bwd", "lex_bwd"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise DataError(f"{name}={value} outside (0, 1] for {self.s}/{self.t}")

    def sort_key(self):
        return (self.s, -self.phi_fwd, self.t)


@dataclass(frozen=True)
class PhraseTable:
    """Scored phrase pairs, kept in canonical (src, -phi_fwd, tgt) order.

    Language codes may be empty for tables whose languages are not known
    (e.g. freshly loaded files); pivot checks are skipped for blank codes.
    """

    src_lang: str
    tgt_lang: str
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=PhraseTableEntry.sort_key)))

    def __len__(self):
        return len(self.entries)

    def by_source(self) -> dict:
        grouped = defaultdict(list)
        for e in self.entries:
            grouped[e.s].append(e)
        return {s: tuple(es) for s, es in grouped.items()}


def _internal_links(links, i1, i2, j1, j2):
    return frozenset((i - i1, j - j1) for i, j in links if i1 <= i <= i2 and j1 <= j <= j2)


def _lexical_weight(gen, cond, links_gen_to_cond, prob):
    """Koehn lexical weight: per generated word, average over its aligned
    conditioning words (NULL if unaligned), multiplied across the phrase."""
    weight = 1.0
    for j, f in enumerate(gen):
        aligned = [i for jj, i in links_gen_to_cond if jj == j]
        if aligned:
            weight *= sum(prob.get(cond[i], {}).get(f, 0.0) for i in aligned) / len(aligned)
        else:
            weight *= prob.get(NULL, {}).get(f, 0.0)
    return weight


def build_phrase_table(corpus, alignments, lex: LexicalTable, max_phrase_len: int = 7) -> PhraseTable:
    """Extract phrases from every aligned pair and score them.

    phi features are joint counts over marginal counts; lexical features take
    the maximum over the internal word alignments observed for each pair.
    """
    if len(alignments) != len(corpus.pairs):
        raise DataError(
            f"{len(corpus.pairs)} sentence pairs but {len(alignments)} alignments"
        )
    joint = Counter()
    best_lex_fwd = {}
    best_lex_bwd = {}
    for (src, tgt), alignment in zip(corpus.pairs, alignments):
        for (i1, i2), (j1, j2) in extract_phrase_pairs((src, tgt), alignment, max_phrase_len):
            s = tuple(src[i1 : i2 + 1])
            t = tuple(tgt[j1 : j2 + 1])
            internal = _internal_links(alignment.links, i1, i2, j1, j2)
            joint[(s, t)] += 1
            fwd = _lexical_weight(t, s, frozenset((j, i) for i, j in internal), lex.tgt_given_src)
            bwd = _lexical_weight(s, t, internal, lex.src_given_tgt)
            key = (s, t)
            best_lex_fwd[key] = max(best_lex_fwd.get(key, 0.0), fwd)
            best_lex_bwd[key] = max(best_lex_bwd.get(key, 0.0), bwd)

    src_marginal = Counter()
    tgt_marginal = Counter()
    for (s, t), c in joint.items():
        src_marginal[s] += c
        tgt_marginal[t] += c
    entries = tuple(
        PhraseTableEntry(
            s,
            t,
            phi_fwd=c / src_marginal[s],
            lex_fwd=best_lex_fwd[(s, t)],
            phi_bwd=c / tgt_marginal[t],
            lex_bwd=best_lex_bwd[(s, t)],
        )
        for (s, t), c in joint.items()
    )
    return PhraseTable(corpus.src_lang, corpus.tgt_lang, entries)


def save_phrase_table(table: PhraseTable, path) -> None:
    """`src ||| tgt ||| phi_fwd lex_fwd phi_bwd lex_bwd`, 6 significant digits."""
    with open(path, "w", encoding="utf-8") as f:
        for e in table.entries:
            features = f"{e.phi_fwd:.6g} {e.lex_fwd:.6g} {e.phi_bwd:.6g} {e.lex_bwd:.6g}"
            f.write(f"{' '.join(e.s)}{SEPARATOR}{' '.join(e.t)}{SEPARATOR}{features}\n")


def load_phrase_table(path, src_lang: str = "", tgt_lang: str = "") -> PhraseTable:
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split(SEPARATOR)
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected three ||| fields")
        features = parts[2].split(" ")
        if len(features) != 4:
            raise DataError(f"{path}:{lineno}: expected four feature values")
        entries.append(
            PhraseTableEntry(
                tuple(parts[0].split(" ")),
                tuple(parts[1].split(" ")),
                phi_fwd=float(features[0]),
                lex_fwd=float(features[1]),
                phi_bwd=float(features[2]),
                lex_bwd=float(features[3]),
            )
        )
    return PhraseTable(src_lang, tgt_lang, tuple(entries))
