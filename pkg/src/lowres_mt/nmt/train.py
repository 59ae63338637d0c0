"""Training, fine-tuning, early stopping, and checkpoint averaging.

Training is plain stochastic gradient descent on the mean per-token
cross-entropy, single-threaded and fully determined by (seed, data,
schedule). Dev BLEU is measured by greedy decoding every `eval_every`
updates; training stops once `patience` consecutive evaluations fail to
beat the best dev BLEU seen, or at `max_updates`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus import UNK, Sentence, TrainingMixture, is_tag
from ..errors import ConfigError, DataError, TrainingError
from ..evaluate import bleu
from .decode import greedy_decode
from .model import (
    ModelConfig,
    Parameters,
    batch_loss_and_gradients,
    sgd_update,
    validate_parameters,
)
from .vocab import Vocabulary


@dataclass(frozen=True)
class TrainSchedule:
    eval_every: int = 1000
    patience: int = 10
    batch_size: int = 16
    learning_rate: float = 0.1
    max_updates: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_updates < 0:
            raise ConfigError(f"max_updates must be >= 0, got {self.max_updates}")


@dataclass(frozen=True)
class Checkpoint:
    step: int
    parameters: Parameters
    dev_bleu: float
    vocab_hash: str = ""


@dataclass(frozen=True)
class NeuralModel:
    """A decodable unit: architecture, vocabulary binding, and weights."""

    config: ModelConfig
    vocab: Vocabulary
    parameters: Parameters

    def __post_init__(self):
        if len(self.vocab) != self.config.vocab_size:
            raise ConfigError(
                f"vocab has {len(self.vocab)} symbols, config says "
                f"{self.config.vocab_size}"
            )


def _check_tagged(mixture: TrainingMixture, vocab: Vocabulary) -> None:
    for src, tgt, direction in mixture.examples:
        if not src or not is_tag(src[0]):
            raise DataError(f"untagged source in mixture ({direction})")
        if src[0] not in vocab:
            raise ConfigError(
                f"tag {src[0]!r} missing from the model vocabulary; the "
                f"vocabulary was built for different languages"
            )


def _encode_examples(mixture: TrainingMixture, vocab: Vocabulary):
    return [
        (vocab.encode(src), vocab.encode(tgt)) for src, tgt, _ in mixture.examples
    ]


def _dev_bleu(cfg: ModelConfig, params: Parameters, vocab: Vocabulary, dev: TrainingMixture) -> float:
    hyps = greedy_decode(cfg, params, vocab, [src for src, _, _ in dev.examples])
    # an empty decode scores as a single unknown token so BLEU stays defined
    hyps = [h if h else (UNK,) for h in hyps]
    refs = [tgt for _, tgt, _ in dev.examples]
    return bleu(hyps, refs).score


def train(
    model: NeuralModel,
    mixture: TrainingMixture,
    dev: TrainingMixture,
    sched: TrainSchedule,
) -> list[Checkpoint]:
    """SGD from `model.parameters`; returns every checkpoint in step order."""
    if len(mixture) == 0:
        raise DataError("empty training mixture")
    if len(dev) == 0:
        raise DataError("empty dev set")
    validate_parameters(model.config, model.parameters)
    _check_tagged(mixture, model.vocab)
    _check_tagged(dev, model.vocab)

    examples = _encode_examples(mixture, model.vocab)
    params = model.parameters.copy()
    vocab_hash = model.vocab.hash()
    rng = np.random.default_rng(sched.seed)

    checkpoints = []
    best = -math.inf
    evals_since_best = 0
    step = 0
    halted = sched.max_updates == 0
    while not halted:
        order = rng.permutation(len(examples))
        for start in range(0, len(order), sched.batch_size):
            batch = [examples[i] for i in order[start : start + sched.batch_size]]
            loss, grads = batch_loss_and_gradients(model.config, params, batch)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss!r} at update {step + 1}")
            sgd_update(params, grads, sched.learning_rate, step + 1)
            step += 1
            if step % sched.eval_every == 0:
                score = _dev_bleu(model.config, params, model.vocab, dev)
                checkpoints.append(Checkpoint(step, params.copy(), score, vocab_hash))
                if score > best:
                    best = score
                    evals_since_best = 0
                else:
                    evals_since_best += 1
                if evals_since_best >= sched.patience:
                    halted = True
                    break
            if step >= sched.max_updates:
                halted = True
                break

    if not checkpoints or checkpoints[-1].step != step:
        score = _dev_bleu(model.config, params, model.vocab, dev)
        checkpoints.append(Checkpoint(step, params.copy(), score, vocab_hash))
    return checkpoints


def fine_tune(
    model: NeuralModel,
    init: Checkpoint,
    mixture: TrainingMixture,
    dev: TrainingMixture,
    sched: TrainSchedule,
) -> list[Checkpoint]:
    """`train` starting from a previous run's checkpoint parameters."""
    try:
        validate_parameters(model.config, init.parameters)
    except DataError as e:
        raise DataError(f"illegal stage transition: {e}") from e
    if init.vocab_hash and init.vocab_hash != model.vocab.hash():
        raise DataError(
            "illegal stage transition: checkpoint was trained with a "
            "different vocabulary"
        )
    start = NeuralModel(model.config, model.vocab, init.parameters.copy())
    return train(start, mixture, dev, sched)


def average_checkpoints(checkpoints) -> Parameters:
    """Elementwise arithmetic mean of checkpoint parameters."""
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise DataError("cannot average zero checkpoints")
    names = set(checkpoints[0].parameters.tensors)
    for c in checkpoints[1:]:
        if set(c.parameters.tensors) != names:
            raise DataError("checkpoints disagree on parameter names")
    mean = {}
    for name in sorted(names):
        first = checkpoints[0].parameters.tensors[name]
        for c in checkpoints[1:]:
            if c.parameters.tensors[name].shape != first.shape:
                raise DataError(f"checkpoint shape mismatch for {name}")
        total = np.zeros_like(first)
        for c in checkpoints:
            total += c.parameters.tensors[name]
        mean[name] = total / len(checkpoints)
    return Parameters(mean)
