"""Training loop behavior: convergence, stopping, determinism, transfer."""

import numpy as np
import pytest

from lowres_mt.corpus import ParallelCorpus, TrainingMixture, make_mixture, tag_source
from lowres_mt.errors import ConfigError, DataError, TrainingError
from lowres_mt.nmt import (
    Checkpoint,
    ModelConfig,
    NeuralModel,
    TrainSchedule,
    average_checkpoints,
    batch_loss,
    build_vocab,
    fine_tune,
    init_model,
    train,
)

TOKENS = [f"w{i}" for i in range(6)]


def sample_sentences(rng, n, max_len=4):
    return [tuple(rng.choice(TOKENS, size=rng.integers(2, max_len + 1))) for _ in range(n)]


def as_corpus(srcs, transform=lambda s: s):
    return ParallelCorpus("aa", "bb", tuple((s, transform(s)) for s in srcs))


def fresh_model(mixtures, dims=16, seed=5):
    sides = []
    for mix in mixtures:
        for src, tgt, _ in mix.examples:
            sides.append(src)
            sides.append(tgt)
    vocab = build_vocab(sides, ["aa", "bb"])
    cfg = ModelConfig(vocab_size=len(vocab), embed_dim=dims, hidden_dim=dims)
    return NeuralModel(cfg, vocab, init_model(cfg, seed=seed))


def encoded(model, mix):
    return [
        (model.vocab.encode(s), model.vocab.encode(t)) for s, t, _ in mix.examples
    ]


@pytest.fixture(scope="module")
def copy_task():
    rng = np.random.default_rng(0)
    mix = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 60)))], strategy="none", seed=1)
    dev = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 10)))], strategy="none", seed=1)
    model = fresh_model([mix, dev])
    sched = TrainSchedule(
        eval_every=200, patience=50, batch_size=8, learning_rate=2.0,
        max_updates=600, seed=7,
    )
    checkpoints = train(model, mix, dev, sched)
    return model, mix, dev, sched, checkpoints


class TestTraining:
    def test_copy_task_loss_halves(self, copy_task):
        model, mix, dev, sched, checkpoints = copy_task
        batch = encoded(model, mix)
        initial = batch_loss(model.config, model.parameters, batch)
        final = batch_loss(model.config, checkpoints[-1].parameters, batch)
        assert final < 0.5 * initial

    def test_checkpoint_steps_strictly_increase(self, copy_task):
        _, _, _, sched, checkpoints = copy_task
        steps = [c.step for c in checkpoints]
        assert steps == sorted(set(steps))
        assert steps[-1] <= sched.max_updates

    def test_caller_parameters_untouched(self, copy_task):
        model, _, _, _, _ = copy_task
        pristine = init_model(model.config, seed=5)
        for name, t in model.parameters.tensors.items():
            assert np.array_equal(t, pristine.tensors[name])

    def test_checkpoints_carry_vocab_hash(self, copy_task):
        model, _, _, _, checkpoints = copy_task
        assert all(c.vocab_hash == model.vocab.hash() for c in checkpoints)

    def test_identical_runs_are_byte_identical(self):
        rng = np.random.default_rng(3)
        mix = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 20)))], strategy="none", seed=1)
        dev = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 5)))], strategy="none", seed=1)
        model = fresh_model([mix, dev], dims=8)
        sched = TrainSchedule(eval_every=10, patience=50, batch_size=4,
                              learning_rate=0.5, max_updates=30, seed=11)
        a = train(model, mix, dev, sched)
        b = train(model, mix, dev, sched)
        assert [c.step for c in a] == [c.step for c in b]
        assert [c.dev_bleu for c in a] == [c.dev_bleu for c in b]
        for ca, cb in zip(a, b):
            for name in ca.parameters.tensors:
                assert np.array_equal(ca.parameters.tensors[name], cb.parameters.tensors[name])

    def test_immediate_plateau_stops_after_exactly_patience_evals(self):
        rng = np.random.default_rng(4)
        mix = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 12)))], strategy="none", seed=1)
        dev = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 4)))], strategy="none", seed=1)
        model = fresh_model([mix, dev], dims=8)
        # a vanishing learning rate freezes dev BLEU, so the first evaluation
        # sets the best and every later one fails to beat it
        sched = TrainSchedule(eval_every=5, patience=3, batch_size=4,
                              learning_rate=1e-9, max_updates=10_000, seed=2)
        checkpoints = train(model, mix, dev, sched)
        assert [c.step for c in checkpoints] == [5, 10, 15, 20]
        assert len({c.dev_bleu for c in checkpoints}) == 1

    def test_final_partial_segment_is_checkpointed(self):
        rng = np.random.default_rng(5)
        mix = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 8)))], strategy="none", seed=1)
        dev = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 3)))], strategy="none", seed=1)
        model = fresh_model([mix, dev], dims=8)
        sched = TrainSchedule(eval_every=10, patience=5, batch_size=4,
                              learning_rate=0.1, max_updates=14, seed=2)
        checkpoints = train(model, mix, dev, sched)
        assert [c.step for c in checkpoints] == [10, 14]

    def test_numeric_blowup_aborts_with_diagnostic(self):
        rng = np.random.default_rng(6)
        mix = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 12)))], strategy="none", seed=1)
        dev = make_mixture([("aa-bb", as_corpus(sample_sentences(rng, 3)))], strategy="none", seed=1)
        model = fresh_model([mix, dev], dims=8)
        # gates saturate, so a large learning rate alone cannot overflow;
        # overflow-scale weights make the very first forward pass non-finite
        for t in model.parameters.tensors.values():
            t *= 1e308
        sched = TrainSchedule(eval_every=100, patience=5, batch_size=4,
                              learning_rate=0.1, max_updates=200, seed=2)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingError, match="update 1"):
                train(model, mix, dev, sched)

    def test_empty_mixture_or_dev_rejected(self, copy_task):
        model, mix, dev, sched, _ = copy_task
        empty = TrainingMixture((), {})
        with pytest.raises(DataError):
            train(model, empty, dev, sched)
        with pytest.raises(DataError):
            train(model, mix, empty, sched)

    def test_unknown_tag_in_mixture_rejected(self, copy_task):
        model, _, dev, sched, _ = copy_task
        foreign = TrainingMixture(
            ((tag_source(("w0",), "cc"), ("w0",), "aa-cc"),), {"aa-cc": 1}
        )
        with pytest.raises(ConfigError):
            train(model, foreign, dev, sched)

    def test_untagged_source_rejected(self, copy_task):
        model, _, dev, sched, _ = copy_task
        bare = TrainingMixture(((("w0",), ("w0",), "aa-bb"),), {"aa-bb": 1})
        with pytest.raises(DataError):
            train(model, bare, dev, sched)

    def test_schedule_validation(self):
        with pytest.raises(ConfigError):
            TrainSchedule(eval_every=0)
        with pytest.raises(ConfigError):
            TrainSchedule(patience=0)
        with pytest.raises(ConfigError):
            TrainSchedule(batch_size=0)
        with pytest.raises(ConfigError):
            TrainSchedule(learning_rate=0.0)
        with pytest.raises(ConfigError):
            TrainSchedule(max_updates=-1)


class TestFineTune:
    def test_zero_updates_returns_initial_checkpoint_unchanged(self, copy_task):
        model, mix, dev, _, checkpoints = copy_task
        sched = TrainSchedule(eval_every=10, patience=2, batch_size=4,
                              learning_rate=0.5, max_updates=0, seed=3)
        out = fine_tune(model, checkpoints[-1], mix, dev, sched)
        assert len(out) == 1
        assert out[0].step == 0
        for name, t in out[0].parameters.tensors.items():
            assert np.array_equal(t, checkpoints[-1].parameters.tensors[name])

    def test_transfer_beats_scratch_at_equal_updates(self, copy_task):
        model, _, _, _, checkpoints = copy_task
        rng = np.random.default_rng(0)
        srcs = sample_sentences(rng, 60)
        rev_mix = make_mixture(
            [("aa-bb", as_corpus(srcs, lambda s: tuple(reversed(s))))], strategy="none", seed=1
        )
        rev_dev = make_mixture(
            [("aa-bb", as_corpus(sample_sentences(rng, 10), lambda s: tuple(reversed(s))))],
            strategy="none", seed=1,
        )
        sched = TrainSchedule(eval_every=100, patience=50, batch_size=8,
                              learning_rate=1.0, max_updates=150, seed=9)
        tuned = fine_tune(model, checkpoints[-1], rev_mix, rev_dev, sched)
        scratch = train(model, rev_mix, rev_dev, sched)
        batch = encoded(model, rev_mix)
        tuned_loss = batch_loss(model.config, tuned[-1].parameters, batch)
        scratch_loss = batch_loss(model.config, scratch[-1].parameters, batch)
        assert tuned_loss < scratch_loss

    def test_shape_mismatch_is_an_illegal_stage_transition(self, copy_task):
        model, mix, dev, sched, _ = copy_task
        other_cfg = ModelConfig(vocab_size=model.config.vocab_size, embed_dim=6, hidden_dim=6)
        alien = Checkpoint(0, init_model(other_cfg, 0), 0.0)
        with pytest.raises(DataError):
            fine_tune(model, alien, mix, dev, sched)

    def test_vocab_hash_mismatch_rejected(self, copy_task):
        model, mix, dev, sched, checkpoints = copy_task
        tampered = Checkpoint(
            checkpoints[-1].step, checkpoints[-1].parameters,
            checkpoints[-1].dev_bleu, vocab_hash="feedfacefeedface",
        )
        with pytest.raises(DataError):
            fine_tune(model, tampered, mix, dev, sched)


class TestAverageCheckpoints:
    def ckpt(self, values, step=1):
        params = {"a": np.array(values, dtype=np.float64)}
        from lowres_mt.nmt import Parameters

        return Checkpoint(step, Parameters(params), 0.0)

    def test_identical_checkpoints_average_to_themselves(self):
        c = self.ckpt([1.5, -2.0])
        avg = average_checkpoints([c, c, c])
        assert np.array_equal(avg.tensors["a"], np.array([1.5, -2.0]))

    def test_two_point_mean(self):
        avg = average_checkpoints([self.ckpt([0.0]), self.ckpt([2.0])])
        assert avg.tensors["a"][0] == 1.0

    def test_empty_list_rejected(self):
        with pytest.raises(DataError):
            average_checkpoints([])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            average_checkpoints([self.ckpt([1.0]), self.ckpt([1.0, 2.0])])

    def test_name_mismatch_rejected(self):
        from lowres_mt.nmt import Parameters

        a = self.ckpt([1.0])
        b = Checkpoint(2, Parameters({"b": np.array([1.0])}), 0.0)
        with pytest.raises(DataError):
            average_checkpoints([a, b])
