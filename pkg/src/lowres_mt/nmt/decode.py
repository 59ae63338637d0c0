"""Beam decoding with a length penalty, plus the greedy special case.

A hypothesis emits tokens until it produces the end-of-sentence symbol or
reaches the length cap; finished hypotheses are ranked by total log-prob
divided by lp(len) = ((5 + len) / 6)^alpha. At every step all single-token
extensions of all live hypotheses compete for the beam jointly, so beam=1
is exactly greedy decoding and an unbounded beam enumerates the full
sequence space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..corpus import Sentence, is_tag
from ..errors import ConfigError, DataError
from .model import ModelConfig, Parameters, _attend_project, _encode, _gru_forward, _log_softmax
from .vocab import BOS_ID, EOS_ID, RESERVED, Vocabulary


@dataclass(frozen=True)
class DecodeConfig:
    beam: float = 4
    alpha: float = 0.0
    max_len: int = 0

    def __post_init__(self):
        if self.beam < 1:
            raise ConfigError(f"beam must be >= 1, got {self.beam}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.max_len < 0:
            raise ConfigError(f"max_len must be >= 0, got {self.max_len}")


def length_penalty(length: int, alpha: float) -> float:
    return ((5.0 + length) / 6.0) ** alpha


def effective_max_len(model_cfg: ModelConfig, cfg: DecodeConfig, src_len: int) -> int:
    """Per-sentence decode cap: explicit settings win, else 2·source + 5."""
    if cfg.max_len > 0:
        return cfg.max_len
    if model_cfg.max_decode_len > 0:
        return model_cfg.max_decode_len
    return 2 * src_len + 5


def strip_control(vocab: Vocabulary, ids) -> Sentence:
    reserved = set(RESERVED)
    out = []
    for i in ids:
        sym = vocab.symbol(i)
        if sym in reserved or is_tag(sym):
            continue
        out.append(sym)
    return tuple(out)


def _decode_step(p, henc, s_prev, token_id):
    """Advance the decoder one token; returns the new state and log-probs."""
    s, _ = _gru_forward(p, "dec", p["embedding"][token_id], s_prev)
    logits, _ = _attend_project(p, s, henc)
    return s, _log_softmax(logits)


def beam_decode(
    model_cfg: ModelConfig,
    params: Parameters,
    vocab: Vocabulary,
    src: Sentence,
    cfg: DecodeConfig = DecodeConfig(),
) -> Sentence:
    """Best finished hypothesis for a tagged source sentence, control
    symbols stripped. Ties break toward the smaller token-id sequence."""
    if not src or not is_tag(src[0]):
        raise DataError(f"source must begin with a language tag, got {src[:1]!r}")
    if len(vocab) != model_cfg.vocab_size:
        raise ConfigError(
            f"vocabulary size {len(vocab)} does not match model config "
            f"{model_cfg.vocab_size}"
        )
    p = params.tensors
    src_ids = vocab.encode(src)
    henc, _ = _encode(p, src_ids, model_cfg.hidden_dim)
    cap = effective_max_len(model_cfg, cfg, len(src))

    # live hypotheses: (emitted ids, total logprob, decoder state, last id)
    live = [((), 0.0, henc[-1], BOS_ID)]
    finished = []
    for _ in range(cap):
        if not live:
            break
        expansions = []
        for ids, score, state, last in live:
            new_state, logp = _decode_step(p, henc, state, last)
            for tok in range(model_cfg.vocab_size):
                expansions.append((ids + (tok,), score + float(logp[tok]), new_state))
        expansions.sort(key=lambda e: (-e[1], e[0]))
        kept = expansions if cfg.beam >= len(expansions) else expansions[: int(cfg.beam)]
        live = []
        for ids, score, state in kept:
            if ids[-1] == EOS_ID or len(ids) == cap:
                finished.append((score / length_penalty(len(ids), cfg.alpha), ids))
            else:
                live.append((ids, score, state, ids[-1]))
    finished.sort(key=lambda f: (-f[0], f[1]))
    return strip_control(vocab, finished[0][1])


def greedy_decode(
    model_cfg: ModelConfig,
    params: Parameters,
    vocab: Vocabulary,
    sources,
    max_len: int = 0,
) -> list[Sentence]:
    """Beam-1 decode of many tagged sources (used for dev evaluation)."""
    cfg = DecodeConfig(beam=1, alpha=0.0, max_len=max_len)
    return [beam_decode(model_cfg, params, vocab, src, cfg) for src in sources]
