"""Checkpoint directory format.

A saved model is a directory holding `manifest.json` (architecture config,
step, vocabulary hash, dev BLEU, tensor inventory), `vocab.txt` (one symbol
per line), and `tensors/<name>.bin` per parameter: an 8-byte little-endian
unsigned element count followed by the elements as little-endian 64-bit
floats in row-major order. Loading then saving reproduces every byte.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from .model import ARCHITECTURE_ID, ModelConfig, Parameters, validate_parameters
from .train import Checkpoint, NeuralModel
from .vocab import Vocabulary, load_vocab, save_vocab

_MANIFEST = "manifest.json"
_VOCAB = "vocab.txt"
_TENSOR_DIR = "tensors"


def _write_tensor(path: Path, tensor: np.ndarray) -> None:
    data = np.ascontiguousarray(tensor, dtype="<f8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", data.size))
        f.write(data.tobytes())


def _read_tensor(path: Path, shape) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 8:
        raise DataError(f"{path}: truncated tensor file")
    (count,) = struct.unpack("<Q", raw[:8])
    expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
    if count != expected:
        raise DataError(f"{path}: holds {count} elements, shape {shape} wants {expected}")
    if len(raw) != 8 + 8 * count:
        raise DataError(f"{path}: {len(raw)} bytes, expected {8 + 8 * count}")
    return np.frombuffer(raw[8:], dtype="<f8").astype(np.float64).reshape(shape)


def save_model(
    directory,
    model: NeuralModel,
    step: int = 0,
    dev_bleu: float = 0.0,
) -> None:
    directory = Path(directory)
    (directory / _TENSOR_DIR).mkdir(parents=True, exist_ok=True)
    manifest = {
        "architecture_id": model.config.architecture_id,
        "vocab_size": model.config.vocab_size,
        "embed_dim": model.config.embed_dim,
        "hidden_dim": model.config.hidden_dim,
        "max_decode_len": model.config.max_decode_len,
        "step": step,
        "dev_bleu": dev_bleu,
        "vocab_hash": model.vocab.hash(),
        "tensors": {
            name: {"shape": list(t.shape), "file": f"{_TENSOR_DIR}/{name}.bin"}
            for name, t in sorted(model.parameters.tensors.items())
        },
    }
    for name, t in model.parameters.tensors.items():
        _write_tensor(directory / _TENSOR_DIR / f"{name}.bin", t)
    save_vocab(model.vocab, directory / _VOCAB)
    with open(directory / _MANIFEST, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(directory) -> tuple[NeuralModel, Checkpoint]:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST
    if not manifest_path.exists():
        raise DataError(f"{directory}: no {_MANIFEST}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{manifest_path}: invalid JSON ({e})") from e
    if manifest.get("architecture_id") != ARCHITECTURE_ID:
        raise DataError(
            f"{directory}: architecture {manifest.get('architecture_id')!r} "
            f"is not {ARCHITECTURE_ID!r}"
        )
    cfg = ModelConfig(
        vocab_size=manifest["vocab_size"],
        embed_dim=manifest["embed_dim"],
        hidden_dim=manifest["hidden_dim"],
        max_decode_len=manifest["max_decode_len"],
    )
    vocab = load_vocab(directory / _VOCAB)
    if vocab.hash() != manifest["vocab_hash"]:
        raise DataError(f"{directory}: vocabulary does not match its manifest hash")
    tensors = {}
    for name, info in manifest["tensors"].items():
        tensors[name] = _read_tensor(directory / info["file"], tuple(info["shape"]))
    params = Parameters(tensors)
    validate_parameters(cfg, params)
    model = NeuralModel(cfg, vocab, params)
    ckpt = Checkpoint(
        step=manifest["step"],
        parameters=params,
        dev_bleu=manifest["dev_bleu"],
        vocab_hash=manifest["vocab_hash"],
    )
    return model, ckpt
