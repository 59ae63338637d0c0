"""Shared model vocabulary with reserved symbols and language tags.

The vocabulary is built once (from the in-domain parallel data plus the
experiment's language tags) and reused by every training stage, so all
stages stay shape-compatible by construction.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

from ..corpus import BOS, EOS, PAD, UNK, Sentence, make_tag
from ..errors import ConfigError, DataError

RESERVED = (PAD, UNK, BOS, EOS)
PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


@dataclass(frozen=True)
class Vocabulary:
    """Immutable symbol table; id 0..3 are pad/unk/bos/eos, tags follow."""

    symbols: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if tuple(self.symbols[:4]) != RESERVED:
            raise DataError("vocabulary must start with the four reserved symbols")
        index = {}
        for i, sym in enumerate(self.symbols):
            if sym in index:
                raise DataError(f"duplicate vocabulary symbol {sym!r}")
            index[sym] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.symbols)

    def id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def symbol(self, idx: int) -> str:
        return self.symbols[idx]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def encode(self, s: Sentence) -> list[int]:
        return [self.id(t) for t in s]

    def decode(self, ids) -> Sentence:
        return tuple(self.symbols[i] for i in ids)

    def hash(self) -> str:
        digest = hashlib.sha256("\n".join(self.symbols).encode("utf-8"))
        return digest.hexdigest()[:16]


def build_vocab(sentences, languages, max_size: int | None = None) -> Vocabulary:
    """Count tokens over `sentences` and assemble the model vocabulary.

    Layout: reserved symbols, then `<2xx>` tags for `languages` in sorted
    order, then tokens by descending frequency (ties alphabetically). A
    `max_size` cap applies to the total symbol count and must leave room
    for the reserved symbols and tags.
    """
    tags = tuple(make_tag(lang) for lang in sorted(set(languages)))
    head = RESERVED + tags
    freq = Counter()
    for s in sentences:
        freq.update(s)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    body = [tok for tok, _ in ranked if tok not in set(head)]
    if max_size is not None:
        if max_size < len(head) + 1:
            raise ConfigError(
                f"max_size={max_size} cannot hold {len(head)} reserved symbols and tags"
            )
        body = body[: max_size - len(head)]
    return Vocabulary(head + tuple(body))


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for sym in vocab.symbols:
            f.write(sym + "\n")


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as f:
        symbols = tuple(line.rstrip("\n") for line in f)
    if not symbols:
        raise DataError(f"{path}: empty vocabulary file")
    return Vocabulary(symbols)
