"""Monotone stack decoding against exhaustive enumeration."""

import math

import numpy as np
import pytest

from lowres_mt.corpus import MonolingualCorpus
from lowres_mt.errors import ConfigError
from lowres_mt.lm import train_ngram
from lowres_mt.phrase import (
    DecoderWeights,
    PhraseTable,
    PhraseTableEntry,
    decode_monotone,
    merge_tables,
)

from oracles import decode_exhaustive


def entry(s, t, pf, lf=0.5, pb=0.5, lb=0.5):
    return PhraseTableEntry(tuple(s.split()), tuple(t.split()), pf, lf, pb, lb)


def toy_lm(sentences, order=2):
    return train_ngram(MonolingualCorpus("yy", tuple(tuple(s.split()) for s in sentences)), order)


class TestMergeTables:
    def test_highest_phi_fwd_wins_across_tables(self):
        first = PhraseTable("xx", "yy", (entry("a", "x", 0.3),))
        second = PhraseTable("xx", "yy", (entry("a", "x", 0.8),))
        merged = merge_tables([first, second])
        assert merged[("a",)][0].phi_fwd == 0.8

    def test_exact_tie_keeps_earlier_table(self):
        first = PhraseTable("xx", "yy", (entry("a", "x", 0.5, lf=0.9),))
        second = PhraseTable("xx", "yy", (entry("a", "x", 0.5, lf=0.1),))
        merged = merge_tables([first, second])
        assert merged[("a",)][0].lex_fwd == 0.9

    def test_groups_by_source_in_canonical_order(self):
        table = PhraseTable(
            "xx", "yy", (entry("a", "x", 0.2), entry("a", "y", 0.7), entry("b", "z", 0.5))
        )
        merged = merge_tables([table])
        assert set(merged) == {("a",), ("b",)}
        assert [e.t for e in merged[("a",)]] == [("y",), ("x",)]


class TestDecodeBasics:
    def test_single_entry_covers_whole_source(self):
        lm = toy_lm(["x y"])
        table = PhraseTable("xx", "yy", (entry("a b", "x y", 0.9),))
        out = decode_monotone([table], lm, DecoderWeights(), ("a", "b"))
        assert out == ("x", "y")

    def test_oov_tokens_copy_through_verbatim(self):
        lm = toy_lm(["x"])
        table = PhraseTable("xx", "yy", (entry("a", "x", 0.9),))
        out = decode_monotone([table], lm, DecoderWeights(), ("a", "mystery", "a"))
        assert out == ("x", "mystery", "x")

    def test_no_passthrough_when_single_token_entry_exists(self):
        lm = toy_lm(["x"])
        # all-ones pseudo features would beat this entry, so the output
        # proves the pseudo entry was never created
        table = PhraseTable("xx", "yy", (entry("a", "x", 0.5),))
        out = decode_monotone([table], lm, DecoderWeights(), ("a",))
        assert out == ("x",)

    def test_empty_source_decodes_to_empty(self):
        lm = toy_lm(["x"])
        table = PhraseTable("xx", "yy", (entry("a", "x", 0.9),))
        assert decode_monotone([table], lm, DecoderWeights(), ()) == ()

    def test_deterministic(self):
        lm = toy_lm(["x y", "y z"])
        table = PhraseTable(
            "xx", "yy", (entry("a", "x", 0.5), entry("a", "y", 0.5), entry("b", "z", 0.5))
        )
        runs = {decode_monotone([table], lm, DecoderWeights(), ("a", "b")) for _ in range(5)}
        assert len(runs) == 1

    def test_score_ties_break_to_smaller_output(self):
        # m and n are both unseen by the LM, map to the same UNK state, and
        # carry identical features; recombination must keep the smaller string
        lm = toy_lm(["q"])
        table = PhraseTable("xx", "yy", (entry("a", "n", 0.5), entry("a", "m", 0.5)))
        assert decode_monotone([table], lm, DecoderWeights(), ("a",)) == ("m",)


class TestBeam:
    def garden_path(self):
        # after one covered token, x (phi 0.9) outranks y (phi 0.6), but only
        # y continues into the bigram (y, z) the LM was trained on
        lm = toy_lm(["y z"] * 10 + ["x"] * 10)
        table = PhraseTable(
            "xx", "yy", (entry("a", "x", 0.9), entry("a", "y", 0.6), entry("b", "z", 0.9))
        )
        return lm, table

    def test_greedy_beam_takes_the_garden_path(self):
        lm, table = self.garden_path()
        assert decode_monotone([table], lm, DecoderWeights(), ("a", "b"), beam=1) == ("x", "z")

    def test_wider_beam_recovers_the_optimum(self):
        lm, table = self.garden_path()
        out = decode_monotone([table], lm, DecoderWeights(), ("a", "b"), beam=10)
        assert out == ("y", "z")
        assert out == decode_exhaustive([table], lm, DecoderWeights(), ("a", "b"))

    def test_beam_must_be_positive(self):
        lm, table = self.garden_path()
        with pytest.raises(ConfigError):
            decode_monotone([table], lm, DecoderWeights(), ("a",), beam=0)

    def test_weights_must_be_finite(self):
        lm, table = self.garden_path()
        with pytest.raises(ConfigError):
            decode_monotone([table], lm, DecoderWeights(lm=math.inf), ("a",))
        with pytest.raises(ConfigError):
            decode_monotone([table], lm, DecoderWeights(phi_fwd=math.nan), ("a",))


def random_instance(rng):
    src_vocab = ["a", "b", "c", "d"]
    tgt_vocab = ["v", "w", "x", "y", "z"]
    corpus = [
        " ".join(rng.choice(tgt_vocab, size=rng.integers(1, 5)))
        for _ in range(int(rng.integers(3, 8)))
    ]
    lm = toy_lm(corpus, order=int(rng.integers(2, 4)))

    src = tuple(rng.choice(src_vocab, size=rng.integers(1, 4)))
    entries = []
    seen = set()
    for _ in range(int(rng.integers(2, 10))):
        i = int(rng.integers(0, len(src)))
        j = int(rng.integers(i + 1, len(src) + 1))
        s = src[i:j]
        t = tuple(rng.choice(tgt_vocab, size=rng.integers(1, 3)))
        if (s, t) in seen:
            continue
        seen.add((s, t))
        entries.append(
            PhraseTableEntry(
                s,
                t,
                *(float(rng.uniform(0.05, 1.0)) for _ in range(4)),
            )
        )
    tables = [PhraseTable("xx", "yy", tuple(entries))] if entries else []
    weights = DecoderWeights(
        *(float(rng.uniform(0.25, 2.0)) for _ in range(6)),
    )
    return tables, lm, weights, src


class TestAgainstExhaustive:
    def test_unpruned_beam_matches_enumeration(self):
        rng = np.random.default_rng(42)
        for trial in range(60):
            tables, lm, weights, src = random_instance(rng)
            got = decode_monotone(tables, lm, weights, src, beam=math.inf)
            want = decode_exhaustive(tables, lm, weights, src)
            assert got == want, f"trial {trial}: {got} != {want} for src {src}"

    def test_merged_tables_match_enumeration(self):
        rng = np.random.default_rng(43)
        for trial in range(20):
            tables_a, lm, weights, src = random_instance(rng)
            tables_b, _, _, _ = random_instance(rng)
            tables = tables_a + tables_b
            got = decode_monotone(tables, lm, weights, src, beam=math.inf)
            want = decode_exhaustive(tables, lm, weights, src)
            assert got == want, f"trial {trial}: {got} != {want} for src {src}"
