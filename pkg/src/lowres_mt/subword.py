"""Byte-pair subword segmentation with a continuation-marker convention.

A word is split into pieces; every piece except the last carries the
continuation marker as a suffix, so "lower" segmented as (low, er) renders
as "low@@ er" and decoding is a deterministic inverse. Reserved symbols
(language tags, <unk>, <s>, </s>, <pad>) pass through unsplit.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import BOS, EOS, PAD, UNK, Sentence, is_tag
from .errors import ConfigError, DataError

DEFAULT_MARKER = "@@"

_RESERVED = frozenset({PAD, UNK, BOS, EOS})


def _is_reserved(token: str) -> bool:
    return token in _RESERVED or is_tag(token)


@dataclass(frozen=True)
class SubwordModel:
    merges: tuple[tuple[str, str], ...]
    vocab: frozenset[str]
    marker: str = DEFAULT_MARKER
    # Base alphabet of the model. Characters outside it map to the unknown
    # symbol during application.
    alphabet: frozenset[str] = field(default_factory=frozenset)

    def ranks(self) -> dict[tuple[str, str], int]:
        return {pair: i for i, pair in enumerate(self.merges)}


def _iter_sentences(corpora):
    for item in corpora:
        sentences = getattr(item, "sentences", item)
        for s in sentences:
            yield s


def learn_subword(corpora, target_vocab: int, marker: str = DEFAULT_MARKER) -> SubwordModel:
    """Learn greedy most-frequent-pair merges until the symbol vocabulary
    reaches `target_vocab` or no pair occurs at least twice.

    `corpora` is a list of MonolingualCorpus objects or plain sentence
    sequences (e.g. one side of a parallel corpus). Ties between equally
    frequent pairs break lexicographically for determinism.
    """
    word_freq: Counter[str] = Counter()
    for s in _iter_sentences(corpora):
        for tok in s:
            if not _is_reserved(tok):
                word_freq[tok] += 1
    if not word_freq:
        raise DataError("cannot learn a subword model from an empty corpus")

    alphabet = sorted({c for w in word_freq for c in w})
    if target_vocab <= len(alphabet):
        raise ConfigError(
            f"target_vocab {target_vocab} must exceed the distinct character count {len(alphabet)}"
        )

    words = {w: tuple(w) for w in word_freq}
    vocab = set(alphabet)
    merges: list[tuple[str, str]] = []
    while len(vocab) < target_vocab:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for w, pieces in words.items():
            f = word_freq[w]
            for a, b in zip(pieces, pieces[1:]):
                pair_freq[(a, b)] += f
        if not pair_freq:
            break
        best = min(pair_freq, key=lambda p: (-pair_freq[p], p))
        if pair_freq[best] < 2:
            break
        merges.append(best)
        vocab.add(best[0] + best[1])
        words = {w: _merge_pieces(pieces, best) for w, pieces in words.items()}

    return SubwordModel(tuple(merges), frozenset(vocab), marker, frozenset(alphabet))


def _merge_pieces(pieces: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    """Merge every occurrence of `pair` in `pieces`, left to right."""
    out = []
    i = 0
    while i < len(pieces):
        if i + 1 < len(pieces) and (pieces[i], pieces[i + 1]) == pair:
            out.append(pieces[i] + pieces[i + 1])
            i += 2
        else:
            out.append(pieces[i])
            i += 1
    return tuple(out)


def _encode_word(word: str, ranks, alphabet, cache) -> tuple[str, ...]:
    hit = cache.get(word)
    if hit is not None:
        return hit
    pieces = tuple(c if c in alphabet else UNK for c in word)
    while len(pieces) > 1:
        best = None
        for a, b in zip(pieces, pieces[1:]):
            r = ranks.get((a, b))
            if r is not None and (best is None or r < best[0]):
                best = (r, (a, b))
        if best is None:
            break
        pieces = _merge_pieces(pieces, best[1])
    cache[word] = pieces
    return pieces


def apply_subword(model: SubwordModel, s: Sentence) -> Sentence:
    """Segment a sentence into subword pieces carrying continuation markers."""
    ranks = model.ranks()
    cache: dict[str, tuple[str, ...]] = {}
    out = []
    for tok in s:
        if _is_reserved(tok):
            out.append(tok)
            continue
        pieces = _encode_word(tok, ranks, model.alphabet, cache)
        for p in pieces[:-1]:
            out.append(p + model.marker)
        out.append(pieces[-1])
    return tuple(out)


def decode_subword(model: SubwordModel, s: Sentence) -> Sentence:
    """Invert apply_subword by gluing marker-suffixed pieces to their successors."""
    out = []
    buf = ""
    for tok in s:
        if tok.endswith(model.marker) and len(tok) > len(model.marker):
            buf += tok[: -len(model.marker)]
        else:
            out.append(buf + tok)
            buf = ""
    if buf:
        # Trailing continuation piece with nothing to attach to; keep it as a word.
        out.append(buf)
    if not out:
        raise DataError("cannot decode an empty sentence")
    return tuple(out)


def save_subword(model: SubwordModel, path) -> None:
    """Write the model: line 1 is the marker, then one merge per line as `left right`.

    The serialized form carries the merge list only. After loading, the model's
    alphabet is reconstructed from the characters of the merge symbols, so base
    characters that never took part in any merge are treated as unseen.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(model.marker + "\n")
        for a, b in model.merges:
            f.write(f"{a} {b}\n")


def load_subword(path) -> SubwordModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty subword model file")
    marker = lines[0]
    if not marker:
        raise DataError(f"{path}: missing continuation marker on line 1")
    merges = []
    for i, line in enumerate(lines[1:], 2):
        parts = line.split(" ")
        if len(parts) != 2:
            raise DataError(f"{path}:{i}: expected `left right`, got {line!r}")
        merges.append((parts[0], parts[1]))
    alphabet = {c for a, b in merges for c in a + b}
    vocab = set(alphabet) | {a + b for a, b in merges}
    return SubwordModel(tuple(merges), frozenset(vocab), marker, frozenset(alphabet))
