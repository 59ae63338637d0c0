"""Content-addressed artifact store: ids, idempotence, lineage."""

import json

import numpy as np
import pytest

from lowres_mt.corpus import MonolingualCorpus, ParallelCorpus
from lowres_mt.errors import ConfigError, DataError
from lowres_mt.nmt import ModelConfig, NeuralModel, build_vocab, init_model
from lowres_mt.pipeline import (
    ArtifactStore,
    artifact_id,
    canonical_json,
    derive_seed,
    load_model_artifact,
    store_model,
    store_monolingual,
    store_parallel,
)


def small_model(seed=0):
    vocab = build_vocab([("w0", "w1"), ("w2",)], ["xx", "yy"])
    cfg = ModelConfig(vocab_size=len(vocab), embed_dim=3, hidden_dim=4)
    return NeuralModel(cfg, vocab, init_model(cfg, seed))


class TestIds:
    def test_canonical_json_is_key_order_free(self):
        assert canonical_json({"b": 1, "a": [2, 3]}) == canonical_json({"a": [2, 3], "b": 1})

    def test_rejects_non_json_config(self):
        with pytest.raises(ConfigError):
            canonical_json({"x": object()})

    def test_id_depends_on_every_component(self):
        base = artifact_id("corpus", {"n": 1}, ["p1"], {"f": "aa"})
        assert artifact_id("report", {"n": 1}, ["p1"], {"f": "aa"}) != base
        assert artifact_id("corpus", {"n": 2}, ["p1"], {"f": "aa"}) != base
        assert artifact_id("corpus", {"n": 1}, ["p2"], {"f": "aa"}) != base
        assert artifact_id("corpus", {"n": 1}, ["p1"], {"f": "ab"}) != base
        assert artifact_id("corpus", {"n": 1}, ["p1"], {"f": "aa"}) == base

    def test_derive_seed_is_stable_and_label_sensitive(self):
        assert derive_seed(7, "train", "s0") == derive_seed(7, "train", "s0")
        assert derive_seed(7, "train", "s0") != derive_seed(7, "train", "s1")
        assert derive_seed(7, "train", "s0") != derive_seed(8, "train", "s0")


class TestPut:
    def test_round_trip(self, tmp_path):
        store = ArtifactStore(tmp_path)
        art = store.put("report", {"name": "r"}, [], {"report.tsv": b"a\t1\n"})
        assert store.exists(art)
        assert (store.path(art) / "report.tsv").read_bytes() == b"a\t1\n"
        manifest = store.manifest(art)
        assert manifest["kind"] == "report"
        assert manifest["config"] == {"name": "r"}
        assert manifest["parents"] == []
        assert manifest["id"] == art

    def test_identical_put_is_idempotent(self, tmp_path):
        store = ArtifactStore(tmp_path)
        first = store.put("report", {"n": 1}, [], {"f.tsv": b"x"})
        second = store.put("report", {"n": 1}, [], {"f.tsv": b"x"})
        assert first == second
        assert store.ids() == [first]

    def test_different_payload_different_id(self, tmp_path):
        store = ArtifactStore(tmp_path)
        a = store.put("report", {"n": 1}, [], {"f.tsv": b"x"})
        b = store.put("report", {"n": 1}, [], {"f.tsv": b"y"})
        assert a != b
        assert len(store.ids()) == 2

    def test_unknown_parent_rejected(self, tmp_path):
        store = ArtifactStore(tmp_path)
        with pytest.raises(ConfigError, match="parent"):
            store.put("report", {}, ["feedfacefeedface"], {"f.tsv": b"x"})

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="kind"):
            ArtifactStore(tmp_path).put("weights", {}, [], {"f": b"x"})

    def test_empty_payload_rejected(self, tmp_path):
        with pytest.raises(DataError):
            ArtifactStore(tmp_path).put("report", {}, [], {})

    def test_escaping_file_names_rejected(self, tmp_path):
        store = ArtifactStore(tmp_path)
        for name in ("../evil", "/abs", "manifest.json"):
            with pytest.raises(ConfigError, match="name"):
                store.put("report", {}, [], {name: b"x"})

    def test_manifest_missing_artifact(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown artifact"):
            ArtifactStore(tmp_path).manifest("0" * 16)


class TestLineage:
    def test_parents_come_first(self, tmp_path):
        store = ArtifactStore(tmp_path)
        a = store.put("corpus", {"n": "a"}, [], {"t.txt": b"1"})
        b = store.put("corpus", {"n": "b"}, [a], {"t.txt": b"2"})
        c = store.put("model", {"n": "c"}, [a, b], {"m.bin": b"3"})
        chain = [m["id"] for m in store.lineage(c)]
        assert chain.index(a) < chain.index(b) < chain.index(c)
        assert set(chain) == {a, b, c}

    def test_shared_ancestor_listed_once(self, tmp_path):
        store = ArtifactStore(tmp_path)
        root = store.put("corpus", {"n": "r"}, [], {"t.txt": b"1"})
        left = store.put("model", {"n": "l"}, [root], {"m": b"2"})
        right = store.put("model", {"n": "rr"}, [root], {"m": b"3"})
        top = store.put("report", {"n": "t"}, [left, right], {"r.tsv": b"4"})
        chain = [m["id"] for m in store.lineage(top)]
        assert chain.count(root) == 1
        assert len(chain) == 4


class TestTypedPayloads:
    def test_model_store_and_load(self, tmp_path):
        store = ArtifactStore(tmp_path)
        model = small_model()
        art = store_model(store, {"stage": "s0"}, [], model, step=42, dev_bleu=1.5)
        loaded, ckpt = load_model_artifact(store, art)
        assert ckpt.step == 42
        assert ckpt.dev_bleu == 1.5
        for name, tensor in model.parameters.tensors.items():
            assert np.array_equal(loaded.parameters.tensors[name], tensor)

    def test_identical_models_share_an_id(self, tmp_path):
        store = ArtifactStore(tmp_path)
        a = store_model(store, {"stage": "s0"}, [], small_model(), 0, 0.0)
        b = store_model(store, {"stage": "s0"}, [], small_model(), 0, 0.0)
        assert a == b

    def test_load_rejects_wrong_kind(self, tmp_path):
        store = ArtifactStore(tmp_path)
        art = store.put("report", {}, [], {"r.tsv": b"x"})
        with pytest.raises(ConfigError, match="not a model"):
            load_model_artifact(store, art)

    def test_corpus_payloads(self, tmp_path):
        store = ArtifactStore(tmp_path)
        par = ParallelCorpus("xx", "yy", ((("a", "b"), ("c",)),))
        art = store_parallel(store, {"corpus": "p"}, [], par)
        assert (store.path(art) / "src.txt").read_text() == "a b\n"
        assert (store.path(art) / "tgt.txt").read_text() == "c\n"
        mono = MonolingualCorpus("xx", (("a",), ("b", "c")))
        art2 = store_monolingual(store, {"corpus": "m"}, [], mono)
        assert (store.path(art2) / "text.txt").read_text() == "a\nb c\n"
