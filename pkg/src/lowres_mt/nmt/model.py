"""Compact attention-based sequence-to-sequence model with manual gradients.

Single-layer gated-recurrent encoder and decoder, multiplicative attention,
and an output projection, all in 64-bit floats. The source sequence carries
a target-language tag as its first token; the decoder runs teacher-forced
during training. Gradients are computed by hand-written backpropagation and
validated against central finite differences by `grad_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError, TrainingError

ARCHITECTURE_ID = "gru_attn_v1"
INIT_SCALE = 0.08


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 64
    hidden_dim: int = 64
    max_decode_len: int = 0
    architecture_id: str = ARCHITECTURE_ID

    def __post_init__(self):
        if self.vocab_size < 5:
            raise ConfigError(
                f"vocab_size must cover the reserved symbols and at least one "
                f"real token, got {self.vocab_size}"
            )
        if self.embed_dim < 2 or self.hidden_dim < 2:
            raise ConfigError(
                f"dims must be >= 2, got embed_dim={self.embed_dim} "
                f"hidden_dim={self.hidden_dim}"
            )
        if self.max_decode_len < 0:
            raise ConfigError(f"max_decode_len must be >= 0, got {self.max_decode_len}")
        if self.architecture_id != ARCHITECTURE_ID:
            raise ConfigError(f"unknown architecture_id: {self.architecture_id!r}")


def parameter_shapes(cfg: ModelConfig) -> dict:
    """Named tensor shapes, in the fixed creation order."""
    v, e, h = cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim
    shapes = {"embedding": (v, e)}
    for side in ("enc", "dec"):
        for gate in ("z", "r", "h"):
            shapes[f"{side}_w{gate}"] = (e + h, h)
            shapes[f"{side}_b{gate}"] = (h,)
    shapes["att_w"] = (h, h)
    shapes["att_wc"] = (2 * h, h)
    shapes["att_bc"] = (h,)
    shapes["out_w"] = (h, v)
    shapes["out_b"] = (v,)
    return shapes


def parameter_count(cfg: ModelConfig) -> int:
    return sum(int(np.prod(s)) for s in parameter_shapes(cfg).values())


@dataclass(frozen=True)
class Parameters:
    """Named float64 tensors. The dataclass is frozen; the arrays are not."""

    tensors: dict

    def copy(self) -> "Parameters":
        return Parameters({name: t.copy() for name, t in self.tensors.items()})

    def count(self) -> int:
        return sum(t.size for t in self.tensors.values())


def init_model(cfg: ModelConfig, seed: int) -> Parameters:
    rng = np.random.default_rng(seed)
    tensors = {
        name: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
        for name, shape in parameter_shapes(cfg).items()
    }
    return Parameters(tensors)


def validate_parameters(cfg: ModelConfig, params: Parameters) -> None:
    shapes = parameter_shapes(cfg)
    if set(shapes) != set(params.tensors):
        raise DataError(
            f"parameter names {sorted(params.tensors)} do not match the "
            f"architecture's {sorted(shapes)}"
        )
    for name, t in params.tensors.items():
        if t.shape != shapes[name]:
            raise DataError(f"{name}: shape {t.shape}, config wants {shapes[name]}")
        if not np.all(np.isfinite(t)):
            raise DataError(f"{name}: non-finite values")


def zero_gradients(cfg: ModelConfig) -> dict:
    return {name: np.zeros(shape) for name, shape in parameter_shapes(cfg).items()}


def _sigmoid(x):
    # saturated gates overflow np.exp harmlessly; the limit value is exact
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _log_softmax(logits):
    shifted = logits - logits.max()
    return shifted - math.log(np.exp(shifted).sum())


def _gru_forward(p, side, x, h):
    """One gated-recurrent step; returns the new state and a backprop cache."""
    cat = np.concatenate([x, h])
    z = _sigmoid(cat @ p[f"{side}_wz"] + p[f"{side}_bz"])
    r = _sigmoid(cat @ p[f"{side}_wr"] + p[f"{side}_br"])
    cat_r = np.concatenate([x, r * h])
    hc = np.tanh(cat_r @ p[f"{side}_wh"] + p[f"{side}_bh"])
    h_new = (1.0 - z) * h + z * hc
    return h_new, (cat, z, r, cat_r, hc, h)


def _gru_backward(p, g, side, cache, dh_new):
    """Backprop one step; returns gradients w.r.t. the input and prior state."""
    cat, z, r, cat_r, hc, h = cache
    e = cat.size - h.size

    dz = dh_new * (hc - h)
    dhc = dh_new * z
    dh = dh_new * (1.0 - z)

    da_hc = dhc * (1.0 - hc * hc)
    g[f"{side}_wh"] += np.outer(cat_r, da_hc)
    g[f"{side}_bh"] += da_hc
    dcat_r = p[f"{side}_wh"] @ da_hc
    dx = dcat_r[:e].copy()
    drh = dcat_r[e:]
    dr = drh * h
    dh += drh * r

    da_z = dz * z * (1.0 - z)
    g[f"{side}_wz"] += np.outer(cat, da_z)
    g[f"{side}_bz"] += da_z
    da_r = dr * r * (1.0 - r)
    g[f"{side}_wr"] += np.outer(cat, da_r)
    g[f"{side}_br"] += da_r
    dcat = p[f"{side}_wz"] @ da_z + p[f"{side}_wr"] @ da_r
    dx += dcat[:e]
    dh += dcat[e:]
    return dx, dh


def _encode(p, src_ids, hidden_dim):
    h = np.zeros(hidden_dim)
    states = []
    caches = []
    for idx in src_ids:
        h, cache = _gru_forward(p, "enc", p["embedding"][idx], h)
        states.append(h)
        caches.append(cache)
    return np.stack(states), caches


def _attend_project(p, s, henc):
    """Attention read plus output logits for one decoder state."""
    u = s @ p["att_w"]
    scores = henc @ u
    a_shift = scores - scores.max()
    a = np.exp(a_shift)
    a /= a.sum()
    c = a @ henc
    cat_sc = np.concatenate([s, c])
    stilde = np.tanh(cat_sc @ p["att_wc"] + p["att_bc"])
    logits = stilde @ p["out_w"] + p["out_b"]
    return logits, (u, a, cat_sc, stilde)


def _attend_backward(p, g, s, henc, cache, dlogits):
    u, a, cat_sc, stilde = cache
    h = s.size

    g["out_w"] += np.outer(stilde, dlogits)
    g["out_b"] += dlogits
    dstilde = p["out_w"] @ dlogits
    dpre = dstilde * (1.0 - stilde * stilde)
    g["att_wc"] += np.outer(cat_sc, dpre)
    g["att_bc"] += dpre
    dcat_sc = p["att_wc"] @ dpre
    ds = dcat_sc[:h].copy()
    dc = dcat_sc[h:]

    da = henc @ dc
    dhenc = np.outer(a, dc)
    dscores = a * (da - float(a @ da))
    du = henc.T @ dscores
    dhenc += np.outer(dscores, u)
    g["att_w"] += np.outer(s, du)
    ds += p["att_w"] @ du
    return ds, dhenc


def _sentence_forward(cfg, p, src_ids, inp_ids, out_ids):
    """Teacher-forced loss for one pair, with every backprop cache."""
    henc, enc_caches = _encode(p, src_ids, cfg.hidden_dim)
    s = henc[-1]
    nll = 0.0
    dec_caches = []
    for inp, out in zip(inp_ids, out_ids):
        s, gru_cache = _gru_forward(p, "dec", p["embedding"][inp], s)
        logits, att_cache = _attend_project(p, s, henc)
        logp = _log_softmax(logits)
        nll -= logp[out]
        dec_caches.append((s, gru_cache, att_cache, np.exp(logp)))
    return nll, (henc, enc_caches, dec_caches)


def _sentence_backward(cfg, p, g, src_ids, inp_ids, out_ids, caches):
    henc, enc_caches, dec_caches = caches
    dhenc = np.zeros_like(henc)
    ds_next = np.zeros(cfg.hidden_dim)
    for t in range(len(inp_ids) - 1, -1, -1):
        s, gru_cache, att_cache, probs = dec_caches[t]
        dlogits = probs.copy()
        dlogits[out_ids[t]] -= 1.0
        ds_att, dhenc_t = _attend_backward(p, g, s, henc, att_cache, dlogits)
        dhenc += dhenc_t
        dx, ds_next = _gru_backward(p, g, "dec", gru_cache, ds_att + ds_next)
        g["embedding"][inp_ids[t]] += dx
    # the decoder's initial state is the final encoder state
    dh = ds_next
    for i in range(len(src_ids) - 1, -1, -1):
        dh = dh + dhenc[i]
        dx, dh = _gru_backward(p, g, "enc", enc_caches[i], dh)
        g["embedding"][src_ids[i]] += dx


def batch_loss(cfg: ModelConfig, params: Parameters, batch) -> float:
    """Mean per-token teacher-forced negative log-likelihood."""
    from .vocab import BOS_ID, EOS_ID

    if not batch:
        raise DataError("empty batch")
    p = params.tensors
    total = 0.0
    tokens = 0
    for src_ids, tgt_ids in batch:
        inp = [BOS_ID] + list(tgt_ids)
        out = list(tgt_ids) + [EOS_ID]
        nll, _ = _sentence_forward(cfg, p, src_ids, inp, out)
        total += nll
        tokens += len(out)
    return total / tokens


def batch_loss_and_gradients(cfg: ModelConfig, params: Parameters, batch):
    """Loss as in `batch_loss` plus its gradient for every parameter."""
    from .vocab import BOS_ID, EOS_ID

    if not batch:
        raise DataError("empty batch")
    p = params.tensors
    g = zero_gradients(cfg)
    total = 0.0
    tokens = 0
    for src_ids, tgt_ids in batch:
        inp = [BOS_ID] + list(tgt_ids)
        out = list(tgt_ids) + [EOS_ID]
        nll, caches = _sentence_forward(cfg, p, src_ids, inp, out)
        _sentence_backward(cfg, p, g, src_ids, inp, out, caches)
        total += nll
        tokens += len(out)
    for name in g:
        g[name] /= tokens
    return total / tokens, g


def grad_check(
    cfg: ModelConfig,
    params: Parameters,
    batch,
    epsilon: float = 1e-4,
    coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Checks a random subsample of at least `coords` parameter coordinates
    (or every coordinate on smaller models).
    """
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    if not batch:
        raise DataError("empty batch")
    _, grads = batch_loss_and_gradients(cfg, params, batch)

    flat = [(name, i) for name, t in sorted(params.tensors.items()) for i in range(t.size)]
    rng = np.random.default_rng(seed)
    if len(flat) > coords:
        picked = [flat[j] for j in rng.choice(len(flat), size=coords, replace=False)]
    else:
        picked = flat

    worst = 0.0
    for name, i in picked:
        t = params.tensors[name]
        original = t.flat[i]
        t.flat[i] = original + epsilon
        up = batch_loss(cfg, params, batch)
        t.flat[i] = original - epsilon
        down = batch_loss(cfg, params, batch)
        t.flat[i] = original
        numeric = (up - down) / (2.0 * epsilon)
        analytic = grads[name].flat[i]
        err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst


def sgd_update(params: Parameters, grads: dict, learning_rate: float, step: int) -> None:
    """In-place stochastic gradient descent step; aborts on non-finite values."""
    for name, t in params.tensors.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name} at update {step}")
        t -= learning_rate * g
