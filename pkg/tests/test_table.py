import math
import random

import pytest

from lowres_mt.corpus import ParallelCorpus
from lowres_mt.errors import DataError
from lowres_mt.phrase import (
    Alignment,
    CooccurrenceStats,
    PhraseTable,
    PhraseTableEntry,
    build_phrase_table,
    cooccurrence_stats,
    fisher_neglog_p,
    load_phrase_table,
    save_phrase_table,
    significance_prune,
    train_ibm1,
)

from oracles import hypergeometric_tail_exact


def entry(s, t, pf=0.5, lf=0.5, pb=0.5, lb=0.5):
    return PhraseTableEntry(tuple(s.split()), tuple(t.split()), pf, lf, pb, lb)


def monotone_corpus(pairs):
    return ParallelCorpus("sw", "tw", tuple(pairs)), [
        Alignment(frozenset((i, i) for i in range(min(len(s), len(t)))))
        for s, t in pairs
    ]


class TestBuild:
    def test_single_pair_single_extraction_gives_unit_features(self):
        corpus, alignments = monotone_corpus([((("a",)) , ("x",))])
        lex = train_ibm1(corpus, 3)
        table = build_phrase_table(corpus, alignments, lex, 1)
        assert len(table) == 1
        e = table.entries[0]
        assert (e.s, e.t) == (("a",), ("x",))
        assert (e.phi_fwd, e.phi_bwd) == (1.0, 1.0)
        assert e.lex_fwd == pytest.approx(lex.tgt_given_src["a"]["x"])

    def test_forward_probability_counts(self):
        pairs = [(("s",), ("t1",)), (("s",), ("t1",)), (("s",), ("t2",))]
        corpus, alignments = monotone_corpus(pairs)
        lex = train_ibm1(corpus, 2)
        table = build_phrase_table(corpus, alignments, lex, 1)
        by_target = {e.t: e for e in table.entries if e.s == ("s",)}
        assert by_target[("t1",)].phi_fwd == pytest.approx(2 / 3)
        assert by_target[("t2",)].phi_fwd == pytest.approx(1 / 3)
        assert by_target[("t1",)].phi_bwd == 1.0

    def test_lexical_weight_matches_hand_formula(self):
        corpus, alignments = monotone_corpus([(("a", "b"), ("x", "y"))])
        lex = train_ibm1(corpus, 4)
        table = build_phrase_table(corpus, alignments, lex, 2)
        two_word = next(e for e in table.entries if e.s == ("a", "b"))
        # Monotone 1-1 internal alignment: product of the aligned word probs.
        want_fwd = lex.tgt_given_src["a"]["x"] * lex.tgt_given_src["b"]["y"]
        want_bwd = lex.src_given_tgt["x"]["a"] * lex.src_given_tgt["y"]["b"]
        assert two_word.lex_fwd == pytest.approx(want_fwd)
        assert two_word.lex_bwd == pytest.approx(want_bwd)

    def test_unaligned_word_uses_null(self):
        corpus = ParallelCorpus("sw", "tw", ((("a",), ("x", "y")),))
        alignments = [Alignment(frozenset({(0, 0)}))]
        lex = train_ibm1(corpus, 4)
        table = build_phrase_table(corpus, alignments, lex, 2)
        full = next(e for e in table.entries if e.t == ("x", "y"))
        from lowres_mt.phrase import NULL

        want = lex.tgt_given_src["a"]["x"] * lex.tgt_given_src[NULL]["y"]
        assert full.lex_fwd == pytest.approx(want)

    def test_alignment_count_mismatch_rejected(self):
        corpus, alignments = monotone_corpus([(("a",), ("x",))])
        with pytest.raises(DataError):
            build_phrase_table(corpus, alignments * 2, train_ibm1(corpus, 1))

    def test_entries_deduplicated(self):
        pairs = [(("a", "b"), ("x", "y"))] * 3
        corpus, alignments = monotone_corpus(pairs)
        table = build_phrase_table(corpus, alignments, train_ibm1(corpus, 2), 2)
        keys = [(e.s, e.t) for e in table.entries]
        assert len(keys) == len(set(keys))


class TestTableType:
    def test_entries_sorted_canonically(self):
        table = PhraseTable("sw", "tw", (
            entry("b", "y"),
            entry("a", "z", pf=0.2),
            entry("a", "y", pf=0.8),
            entry("a", "x", pf=0.8),
        ))
        keys = [(e.s, e.t) for e in table.entries]
        assert keys == [(("a",), ("x",)), (("a",), ("y",)), (("a",), ("z",)), (("b",), ("y",))]

    def test_feature_range_validated(self):
        with pytest.raises(DataError):
            entry("a", "x", pf=0.0)
        with pytest.raises(DataError):
            entry("a", "x", lf=1.5)

    def test_empty_phrase_rejected(self):
        with pytest.raises(DataError):
            PhraseTableEntry((), ("x",), 0.5, 0.5, 0.5, 0.5)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        corpus, alignments = monotone_corpus(
            [(("a", "b"), ("x", "y")), (("a",), ("x",)), (("b", "c"), ("y", "z"))]
        )
        table = build_phrase_table(corpus, alignments, train_ibm1(corpus, 3))
        path = tmp_path / "table.txt"
        save_phrase_table(table, path)
        loaded = load_phrase_table(path, "sw", "tw")
        assert [(e.s, e.t) for e in loaded.entries] == [(e.s, e.t) for e in table.entries]
        for got, want in zip(loaded.entries, table.entries):
            assert got.phi_fwd == pytest.approx(want.phi_fwd, rel=1e-5)
            assert got.lex_bwd == pytest.approx(want.lex_bwd, rel=1e-5)

    def test_line_layout(self, tmp_path):
        table = PhraseTable("", "", (entry("a b", "x", pf=0.25, lf=1 / 3, pb=1.0, lb=0.125),))
        path = tmp_path / "t.txt"
        save_phrase_table(table, path)
        assert path.read_text(encoding="utf-8") == "a b ||| x ||| 0.25 0.333333 1 0.125\n"

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a ||| x\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_phrase_table(path)


class TestFisher:
    def test_matches_exact_hypergeometric(self):
        for n, cs, ct, joint in [
            (10_000, 5, 5, 5),
            (1000, 10, 12, 3),
            (1000, 1, 1, 1),
            (500, 40, 60, 20),
            (100, 50, 50, 25),
        ]:
            got = math.exp(-fisher_neglog_p(n, cs, ct, joint))
            want = hypergeometric_tail_exact(n, cs, ct, joint)
            assert got == pytest.approx(want, abs=1e-9), (n, cs, ct, joint)

    def test_one_one_one_p_value_is_inverse_n(self):
        for n in (10, 100, 1000):
            assert fisher_neglog_p(n, 1, 1, 1) == pytest.approx(math.log(n), abs=1e-9)

    def test_monotone_in_joint_count(self):
        previous = -1.0
        for joint in range(1, 11):
            neglogp = fisher_neglog_p(400, 10, 10, joint)
            assert neglogp > previous
            previous = neglogp

    def test_impossible_counts_rejected(self):
        with pytest.raises(DataError):
            fisher_neglog_p(100, 3, 3, 4)


class TestPrune:
    def build_stats(self):
        rng = random.Random(12)
        pairs = []
        # "good" source/target cooccur consistently; "noise" pairs are random.
        for _ in range(60):
            pairs.append((("good", f"f{rng.randrange(6)}"), ("buono", f"g{rng.randrange(6)}")))
        for i in range(6):
            pairs.append(((f"f{i}",), (f"g{(i + 1) % 6}",)))
        corpus = ParallelCorpus("sw", "tw", tuple(pairs))
        return corpus

    def test_one_one_one_entry_pruned(self):
        corpus = self.build_stats()
        stats = cooccurrence_stats(corpus, 1)
        table = PhraseTable("sw", "tw", (entry("f0", "g1"), entry("good", "buono")))
        pruned = significance_prune(table, stats)
        kept = {(e.s, e.t) for e in pruned.entries}
        assert (("good",), ("buono",)) in kept
        assert (("f0",), ("g1",)) not in kept

    def test_output_is_subset(self):
        corpus = self.build_stats()
        stats = cooccurrence_stats(corpus, 1)
        table = PhraseTable("sw", "tw", (entry("good", "buono"), entry("f1", "g2")))
        pruned = significance_prune(table, stats)
        assert set(pruned.entries) <= set(table.entries)

    def test_weaker_threshold_keeps_superset(self):
        corpus = self.build_stats()
        stats = cooccurrence_stats(corpus, 1)
        table = PhraseTable("sw", "tw", (entry("good", "buono"), entry("f1", "g2")))
        strict = significance_prune(table, stats)
        loose = significance_prune(table, stats, threshold=0.01)
        assert set(strict.entries) <= set(loose.entries)

    def test_missing_stats_rejected(self):
        stats = CooccurrenceStats({}, {}, {}, 10)
        table = PhraseTable("sw", "tw", (entry("a", "x"),))
        with pytest.raises(DataError):
            significance_prune(table, stats)

    def test_sentence_level_counting(self):
        corpus = ParallelCorpus("sw", "tw", ((("a", "a"), ("x",)), (("a",), ("y",))))
        stats = cooccurrence_stats(corpus, 1)
        # Sentence-level: "a" counts once per pair even when repeated inside.
        assert stats.src_counts[("a",)] == 2
        assert stats.joint_counts[(("a",), ("x",))] == 1
        assert stats.n == 2
