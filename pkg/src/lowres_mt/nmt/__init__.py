"""Compact trainable sequence-to-sequence model.

Vocabulary binding, parameter initialization, teacher-forced training with
manual gradients, early stopping on dev BLEU, checkpoint averaging, beam
decoding with a length penalty, and a byte-stable checkpoint format.
"""

from .decode import (
    DecodeConfig,
    beam_decode,
    effective_max_len,
    greedy_decode,
    length_penalty,
    strip_control,
)
from .io import load_model, save_model
from .model import (
    ARCHITECTURE_ID,
    ModelConfig,
    Parameters,
    batch_loss,
    batch_loss_and_gradients,
    grad_check,
    init_model,
    parameter_count,
    parameter_shapes,
    validate_parameters,
)
from .train import (
    Checkpoint,
    NeuralModel,
    TrainSchedule,
    average_checkpoints,
    fine_tune,
    train,
)
from .vocab import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    RESERVED,
    UNK_ID,
    Vocabulary,
    build_vocab,
    load_vocab,
    save_vocab,
)

__all__ = [
    "ARCHITECTURE_ID",
    "BOS_ID",
    "Checkpoint",
    "DecodeConfig",
    "EOS_ID",
    "ModelConfig",
    "NeuralModel",
    "PAD_ID",
    "Parameters",
    "RESERVED",
    "TrainSchedule",
    "UNK_ID",
    "Vocabulary",
    "average_checkpoints",
    "batch_loss",
    "batch_loss_and_gradients",
    "beam_decode",
    "build_vocab",
    "effective_max_len",
    "fine_tune",
    "grad_check",
    "greedy_decode",
    "init_model",
    "length_penalty",
    "load_model",
    "load_vocab",
    "parameter_count",
    "parameter_shapes",
    "save_model",
    "save_vocab",
    "strip_control",
    "train",
    "validate_parameters",
]
