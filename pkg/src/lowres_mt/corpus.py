"""Corpora, cleaning, language tags, and multilingual training mixtures.

Sentences are tuples of tokens. All file formats are UTF-8 with LF line
endings, one sentence per line, tokens separated by single spaces.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

Sentence = tuple[str, ...]

# Reserved symbols. These are atomic everywhere: never split by the subword
# model, always members of model vocabularies.
PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"

_TAG_RE = re.compile(r"^<2([a-z0-9_]+)>$")
_LANG_RE = re.compile(r"^[a-z0-9_]+$")


def make_tag(lang: str) -> str:
    """Return the target-language tag token for `lang`, e.g. "<2ja>"."""
    if not _LANG_RE.match(lang):
        raise ConfigError(f"invalid language code: {lang!r}")
    return f"<2{lang}>"


def is_tag(token: str) -> bool:
    return _TAG_RE.match(token) is not None


def tag_language(token: str) -> str | None:
    """Language code of a tag token, or None if the token is not a tag."""
    m = _TAG_RE.match(token)
    return m.group(1) if m else None


def as_sentence(tokens) -> Sentence:
    """Validate and freeze a token sequence."""
    toks = tuple(tokens)
    if not toks:
        raise DataError("empty sentence")
    for t in toks:
        if not t or any(c.isspace() for c in t):
            raise DataError(f"bad token {t!r}: tokens must be non-empty and whitespace-free")
    return toks


def parse_line(line: str) -> Sentence:
    return as_sentence(line.split())


def format_sentence(s: Sentence) -> str:
    return " ".join(s)


def tokenize(text: str) -> Sentence:
    """Fallback whitespace+punctuation splitter for toy data.

    Inputs are normally assumed pre-tokenized; this splits off punctuation
    runs as their own tokens so raw toy text can be ingested directly.
    """
    toks = re.findall(r"[\w]+|[^\w\s]", text, re.UNICODE)
    if not toks:
        raise DataError(f"no tokens in line: {text!r}")
    return tuple(toks)


def tag_source(s: Sentence, target_lang: str, languages=None) -> Sentence:
    """Prepend the `<2xx>` tag for `target_lang` to `s`.

    When `languages` is given, `target_lang` must be a member of it.
    """
    if languages is not None and target_lang not in languages:
        raise ConfigError(f"unknown language code: {target_lang!r}")
    return (make_tag(target_lang),) + tuple(s)


def strip_tag(s: Sentence) -> tuple[str, Sentence]:
    """Split a tagged sentence into (language code, untagged sentence)."""
    if not s:
        raise DataError("empty sentence")
    lang = tag_language(s[0])
    if lang is None:
        raise DataError(f"sentence does not start with a language tag: {s[0]!r}")
    return lang, tuple(s[1:])


def direction_label(src_lang: str, tgt_lang: str) -> str:
    return f"{src_lang}-{tgt_lang}"


def parse_direction(label: str) -> tuple[str, str]:
    parts = label.split("-")
    if len(parts) != 2 or not all(_LANG_RE.match(p) for p in parts):
        raise ConfigError(f"bad direction label: {label!r}")
    return parts[0], parts[1]


@dataclass(frozen=True)
class ParallelCorpus:
    src_lang: str
    tgt_lang: str
    pairs: tuple[tuple[Sentence, Sentence], ...]

    def __post_init__(self):
        if self.src_lang == self.tgt_lang:
            raise ConfigError(f"parallel corpus needs distinct languages, got {self.src_lang!r} twice")
        for src, tgt in self.pairs:
            if not src or not tgt:
                raise DataError("parallel corpus contains an empty side")

    def __len__(self) -> int:
        return len(self.pairs)

    def swapped(self) -> "ParallelCorpus":
        return ParallelCorpus(self.tgt_lang, self.src_lang, tuple((t, s) for s, t in self.pairs))

    def side(self, which: str) -> tuple[Sentence, ...]:
        if which not in ("src", "tgt"):
            raise ConfigError(f"side must be 'src' or 'tgt', got {which!r}")
        idx = 0 if which == "src" else 1
        return tuple(p[idx] for p in self.pairs)


@dataclass(frozen=True)
class MonolingualCorpus:
    lang: str
    sentences: tuple[Sentence, ...]
    domain_label: str = ""

    def __post_init__(self):
        for s in self.sentences:
            if not s:
                raise DataError("monolingual corpus contains an empty sentence")

    def __len__(self) -> int:
        return len(self.sentences)


def read_sentences(path) -> tuple[Sentence, ...]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not valid UTF-8 ({e})") from e
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    out = []
    for i, line in enumerate(lines, 1):
        toks = line.split()
        if not toks:
            raise DataError(f"{path}:{i}: empty sentence")
        out.append(tuple(toks))
    return tuple(out)


def write_sentences(path, sentences) -> None:
    Path(path).write_text("".join(format_sentence(s) + "\n" for s in sentences), encoding="utf-8")


def ingest_parallel(src_path, tgt_path, langs: tuple[str, str]) -> ParallelCorpus:
    """Read an aligned pair of one-sentence-per-line files."""
    src = read_sentences(src_path)
    tgt = read_sentences(tgt_path)
    if len(src) != len(tgt):
        raise DataError(
            f"line-count mismatch: {src_path} has {len(src)} lines, {tgt_path} has {len(tgt)}"
        )
    return ParallelCorpus(langs[0], langs[1], tuple(zip(src, tgt)))


def read_monolingual(path, lang: str, domain_label: str = "") -> MonolingualCorpus:
    return MonolingualCorpus(lang, read_sentences(path), domain_label)


def write_parallel(corpus: ParallelCorpus, src_path, tgt_path) -> None:
    write_sentences(src_path, corpus.side("src"))
    write_sentences(tgt_path, corpus.side("tgt"))


def clean(corpus: ParallelCorpus, max_tokens: int = 100) -> ParallelCorpus:
    """Drop exact-duplicate pairs (keeping first occurrences) and over-long pairs."""
    if max_tokens < 1:
        raise ConfigError(f"max_tokens must be >= 1, got {max_tokens}")
    seen = set()
    kept = []
    for pair in corpus.pairs:
        src, tgt = pair
        if len(src) > max_tokens or len(tgt) > max_tokens:
            continue
        if pair in seen:
            continue
        seen.add(pair)
        kept.append(pair)
    return ParallelCorpus(corpus.src_lang, corpus.tgt_lang, tuple(kept))


@dataclass(frozen=True)
class TrainingMixture:
    """Tagged multidirectional training set.

    Each example is (tagged source, target, direction label). Source
    sentences begin with exactly one `<2xx>` tag naming the target language.
    """

    examples: tuple[tuple[Sentence, Sentence, str], ...]
    direction_counts: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)


def _oriented_pairs(direction: str, corpus: ParallelCorpus):
    """Orient a corpus to the requested direction, swapping sides if needed."""
    src, tgt = parse_direction(direction)
    if (src, tgt) == (corpus.src_lang, corpus.tgt_lang):
        return corpus.pairs
    if (src, tgt) == (corpus.tgt_lang, corpus.src_lang):
        return tuple((t, s) for s, t in corpus.pairs)
    raise ConfigError(
        f"direction {direction!r} does not match corpus languages "
        f"{corpus.src_lang}-{corpus.tgt_lang}"
    )


def make_mixture(directed, strategy: str = "match_largest", seed: int = 0) -> TrainingMixture:
    """Build a tagged training mixture from (direction, ParallelCorpus) entries.

    Under `match_largest`, each direction is replicated floor(max/size) whole
    times plus a seeded random remainder sample without replacement, so every
    direction contributes as many examples as the largest one. Under `none`
    each direction contributes its pairs once. The combined examples are
    shuffled deterministically by `seed`.
    """
    if strategy not in ("match_largest", "none"):
        raise ConfigError(f"unknown mixture strategy: {strategy!r}")
    directed = list(directed)
    if not directed:
        raise DataError("make_mixture needs at least one corpus")
    languages = set()
    for direction, _ in directed:
        languages.update(parse_direction(direction))

    oriented = [(d, _oriented_pairs(d, c)) for d, c in directed]
    if strategy == "match_largest" and any(len(p) == 0 for _, p in oriented):
        raise DataError("match_largest over-sampling requires every corpus to be non-empty")

    rng = random.Random(seed)
    largest = max(len(p) for _, p in oriented)
    examples = []
    counts = {}
    for direction, pairs in oriented:
        _, tgt_lang = parse_direction(direction)
        if strategy == "match_largest":
            reps, rem = divmod(largest, len(pairs))
            idx = list(range(len(pairs))) * reps + sorted(rng.sample(range(len(pairs)), rem))
        else:
            idx = range(len(pairs))
        n = 0
        for i in idx:
            src, tgt = pairs[i]
            examples.append((tag_source(src, tgt_lang, languages), tgt, direction))
            n += 1
        counts[direction] = counts.get(direction, 0) + n
    rng.shuffle(examples)
    return TrainingMixture(tuple(examples), counts)


def write_mixture(mixture: TrainingMixture, path) -> None:
    """Write a mixture as TSV: direction, tagged source, target."""
    with open(path, "w", encoding="utf-8") as f:
        for src, tgt, direction in mixture.examples:
            f.write(f"{direction}\t{format_sentence(src)}\t{format_sentence(tgt)}\n")


def read_mixture(path) -> TrainingMixture:
    path = Path(path)
    examples = []
    counts = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not valid UTF-8 ({e})") from e
    for i, line in enumerate(lines, 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}:{i}: expected 3 tab-separated fields, got {len(parts)}")
        direction, src, tgt = parts
        src_s = parse_line(src)
        if not is_tag(src_s[0]):
            raise DataError(f"{path}:{i}: source does not start with a language tag")
        examples.append((src_s, parse_line(tgt), direction))
        counts[direction] = counts.get(direction, 0) + 1
    return TrainingMixture(tuple(examples), counts)
