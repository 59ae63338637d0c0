"""Uniform sentence translators over different decoding engines.

A translator carries its language pair and maps a batch of sentences to a
batch of translations, letting pivot flows compose a phrase decoder with a
neural decoder (or either with itself) without caring which is which.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from ..corpus import UNK, MonolingualCorpus, ParallelCorpus, Sentence, make_tag
from ..errors import ConfigError
from ..nmt import DecodeConfig, NeuralModel, beam_decode
from ..phrase import DecoderWeights, decode_monotone


class Translator(Protocol):
    src_lang: str
    tgt_lang: str

    def translate(self, sentences) -> list[Sentence]: ...


@dataclass(frozen=True)
class IdentityTranslator:
    """Passes text through unchanged; useful as a pivot-flow stub."""

    src_lang: str
    tgt_lang: str

    def translate(self, sentences) -> list[Sentence]:
        return [tuple(s) for s in sentences]


@dataclass(frozen=True)
class PhraseTranslator:
    """Monotone phrase-based decoding over one or more phrase tables."""

    tables: tuple
    lm: object
    weights: DecoderWeights
    src_lang: str
    tgt_lang: str
    beam: int = 100

    def translate(self, sentences) -> list[Sentence]:
        return [
            decode_monotone(self.tables, self.lm, self.weights, s, self.beam)
            for s in sentences
        ]


@dataclass(frozen=True)
class NeuralTranslator:
    """Tags each source for its target language and beam-decodes it.

    An empty decode is replaced by a single unknown token so downstream
    corpora never contain empty sentences.
    """

    model: NeuralModel
    src_lang: str
    tgt_lang: str
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def __post_init__(self):
        if make_tag(self.tgt_lang) not in self.model.vocab:
            raise ConfigError(
                f"model vocabulary has no {make_tag(self.tgt_lang)!r} tag; "
                f"it cannot translate into {self.tgt_lang!r}"
            )

    def translate(self, sentences) -> list[Sentence]:
        out = []
        for s in sentences:
            hyp = beam_decode(
                self.model.config,
                self.model.parameters,
                self.model.vocab,
                (make_tag(self.tgt_lang),) + tuple(s),
                self.decode,
            )
            out.append(hyp if hyp else (UNK,))
        return out


def pivot_cascade(first: Translator, second: Translator, corpus: MonolingualCorpus) -> MonolingualCorpus:
    """Two-step decoding: source through the pivot language to the target."""
    if first.tgt_lang != second.src_lang:
        raise ConfigError(
            f"cascade mismatch: first stage emits {first.tgt_lang!r}, "
            f"second reads {second.src_lang!r}"
        )
    if corpus.lang != first.src_lang:
        raise ConfigError(
            f"cascade input is {corpus.lang!r} but the first stage reads {first.src_lang!r}"
        )
    mid = [s if s else (UNK,) for s in first.translate(corpus.sentences)]
    out = [s if s else (UNK,) for s in second.translate(mid)]
    return MonolingualCorpus(second.tgt_lang, tuple(out), corpus.domain_label)


def pivot_synthesize(bitext: ParallelCorpus, translator: Translator) -> ParallelCorpus:
    """Translate a bitext's pivot side, pairing results with the untouched
    original side to synthesize a new parallel corpus.

    `bitext` holds (target, pivot) pairs; the translator maps pivot-language
    text to the source language. The output holds (synthetic source,
    original target) pairs with the target side preserved verbatim.
    """
    if translator.src_lang != bitext.tgt_lang:
        raise ConfigError(
            f"synthesis mismatch: bitext pivot side is {bitext.tgt_lang!r}, "
            f"translator reads {translator.src_lang!r}"
        )
    synthetic = [s if s else (UNK,) for s in translator.translate(bitext.side("tgt"))]
    pairs = tuple(zip(synthetic, bitext.side("src")))
    return ParallelCorpus(translator.tgt_lang, bitext.src_lang, pairs)
