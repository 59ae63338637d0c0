"""Interpolated modified Kneser-Ney n-gram language models (orders 1 to 6).

Counting conventions: every sentence is padded with (order-1) begin symbols
and one end symbol; the highest order uses raw n-gram counts, lower orders
use continuation counts (number of distinct one-token left extensions).

Discounts per order come from the count-of-counts n1..n4 of that order's
(adjusted) counts: with Y = n1/(n1+2*n2),

    D1 = 1 - 2*Y*n2/n1,  D2 = 2 - 3*Y*n3/n2,  D3+ = 3 - 4*Y*n4/n3,

each clamped into [0, k]. If n1 or n2 is zero the order falls back to
D1 = D2 = D3+ = 0.5; if n3 is zero, D3+ inherits D2. These fallbacks keep
tiny toy corpora trainable; any D in [0, k] preserves exact normalization
because the backoff mass is computed from the same discounts.

Probabilities are stored ARPA-style: each seen n-gram holds its interpolated
probability, each seen context holds its backoff weight, and queries walk
down one order at a time. The bottom of the recursion is a uniform
distribution over the full vocabulary (including the unknown, begin, and end
symbols), so every symbol has probability > 0 given any history.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from pathlib import Path

from .corpus import BOS, EOS, UNK, MonolingualCorpus, Sentence
from .errors import ConfigError, DataError

MAX_ORDER = 6
_LN10 = math.log(10.0)


def _collect_counts(sentences, order):
    """Raw counts at the highest order, continuation counts below."""
    counts = [None] + [Counter() for _ in range(order)]
    top = counts[order]
    for s in sentences:
        padded = (BOS,) * (order - 1) + tuple(s) + (EOS,)
        for i in range(order - 1, len(padded)):
            top[padded[i - order + 1 : i + 1]] += 1
    for m in range(order - 1, 0, -1):
        for gram in counts[m + 1]:
            counts[m][gram[1:]] += 1
    return counts


def _discounts(count_values):
    n = Counter()
    for c in count_values:
        if 1 <= c <= 4:
            n[c] += 1
    if n[1] == 0 or n[2] == 0:
        return (0.5, 0.5, 0.5)
    y = n[1] / (n[1] + 2.0 * n[2])
    d1 = min(1.0, max(0.0, 1.0 - 2.0 * y * n[2] / n[1]))
    d2 = min(2.0, max(0.0, 2.0 - 3.0 * y * n[3] / n[2]))
    d3 = min(3.0, max(0.0, 3.0 - 4.0 * y * n[4] / n[3])) if n[3] > 0 else d2
    return (d1, d2, d3)


def _discount_for(count, d):
    if count >= 3:
        return d[2]
    return d[1] if count == 2 else d[0]


class NGramModel:
    """Immutable smoothed language model; scores are natural-log based."""

    def __init__(self, order, vocab, prob, backoff, discounts):
        self.order = order
        self.vocab = frozenset(vocab)
        self._prob = prob          # n-gram tuple -> log10 probability
        self._backoff = backoff    # context tuple -> log10 backoff weight
        self.discounts = tuple(discounts)

    def _map(self, token):
        return token if token in self.vocab else UNK

    def logprob(self, word: str, history=()) -> float:
        """Natural log of p(word | history)."""
        w = self._map(word)
        h = tuple(self._map(t) for t in history)[max(0, len(history) - self.order + 1) :]
        acc = 0.0
        while True:
            p = self._prob.get(h + (w,))
            if p is not None:
                return acc + p * _LN10
            if not h:
                raise DataError(f"symbol {w!r} missing from the unigram table")
            bo = self._backoff.get(h)
            if bo is not None:
                acc += bo * _LN10
            h = h[1:]

    def prob(self, word: str, history=()) -> float:
        return math.exp(self.logprob(word, history))

    def sentence_logprob(self, s: Sentence) -> float:
        """Sum of ln p over the sentence's tokens plus the end-of-sentence event."""
        if not s:
            raise DataError("cannot score an empty sentence")
        mapped = [self._map(t) for t in s]
        ctx = [BOS] * (self.order - 1) + mapped
        total = 0.0
        for i, w in enumerate(mapped + [EOS]):
            total += self.logprob(w, tuple(ctx[i : i + self.order - 1]))
        return total


def train_ngram(corpus: MonolingualCorpus, order: int) -> NGramModel:
    """Train an interpolated modified Kneser-Ney model of the given order."""
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"order must be in [1, {MAX_ORDER}], got {order}")
    if len(corpus) == 0:
        raise DataError("cannot train a language model on an empty corpus")

    counts = _collect_counts(corpus.sentences, order)
    vocab = {UNK, BOS, EOS}
    for s in corpus.sentences:
        vocab.update(s)
    discounts = [None] + [_discounts(counts[m].values()) for m in range(1, order + 1)]

    # Interpolated probabilities, built from the unigram level up. `linear`
    # holds natural-domain values; the model stores log10 like its file form.
    linear: dict[tuple, float] = {}
    backoff_linear: dict[tuple, float] = {}

    d1 = discounts[1]
    total1 = sum(counts[1].values())
    disc_mass = sum(min(c, _discount_for(c, d1)) for c in counts[1].values())
    gamma1 = disc_mass / total1
    uniform = 1.0 / len(vocab)
    for w in vocab:
        c = counts[1].get((w,), 0)
        base = max(c - _discount_for(c, d1), 0.0) / total1 if c else 0.0
        linear[(w,)] = base + gamma1 * uniform

    for m in range(2, order + 1):
        d = discounts[m]
        by_context = defaultdict(list)
        for gram, c in counts[m].items():
            by_context[gram[:-1]].append((gram, c))
        for context, entries in by_context.items():
            c_total = sum(c for _, c in entries)
            disc_mass = sum(min(c, _discount_for(c, d)) for _, c in entries)
            gamma = disc_mass / c_total
            backoff_linear[context] = gamma
            for gram, c in entries:
                base = max(c - _discount_for(c, d), 0.0) / c_total
                linear[gram] = base + gamma * linear[gram[1:]]

    # Every seen context carries a backoff weight, but begin-padding contexts
    # like (<s>, <s>) are never seen as n-grams themselves (nothing precedes
    # the begin symbol), and the file format attaches backoff weights to
    # stored n-gram lines. Materialize such contexts with the probability the
    # backoff walk would produce anyway; queries are unchanged.
    def backoff_route(gram):
        if gram in linear:
            return linear[gram]
        return backoff_linear.get(gram[:-1], 1.0) * backoff_route(gram[1:])

    for h in sorted(backoff_linear, key=len):
        if h not in linear:
            linear[h] = backoff_route(h)

    prob = {g: math.log10(p) for g, p in linear.items()}
    backoff = {h: math.log10(g) if g > 0.0 else -99.0 for h, g in backoff_linear.items()}
    return NGramModel(order, vocab, prob, backoff, discounts[1:])


def cross_entropy(model: NGramModel, s: Sentence) -> float:
    """Nats per token, counting the end-of-sentence event: -(1/(|s|+1)) Σ ln p."""
    return -model.sentence_logprob(s) / (len(s) + 1)


def corpus_cross_entropy(model: NGramModel, corpus: MonolingualCorpus) -> float:
    """Token-weighted cross-entropy over a whole corpus (nats per token)."""
    total = 0.0
    events = 0
    for s in corpus.sentences:
        total += model.sentence_logprob(s)
        events += len(s) + 1
    if events == 0:
        raise DataError("empty corpus")
    return -total / events


def perplexity(model: NGramModel, corpus: MonolingualCorpus) -> float:
    return math.exp(corpus_cross_entropy(model, corpus))


def has_oov(model: NGramModel, s: Sentence) -> bool:
    return any(t not in model.vocab for t in s)


def save_ngram(model: NGramModel, path) -> None:
    """Write the model as text: a header, then per-order blocks.

    Each block line is `ngram<TAB>log10 p<TAB>log10 backoff`, with n-grams in
    lexicographic order. A backoff of 0.0 means the n-gram either is not a
    context or has backoff weight 1; both behave identically at query time.
    """
    by_order = defaultdict(list)
    for gram in model._prob:
        by_order[len(gram)].append(gram)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"order\t{model.order}\n")
        f.write(f"vocab_size\t{len(model.vocab)}\n")
        for m, d in enumerate(model.discounts, 1):
            f.write(f"discounts\t{m}\t{d[0]:.17g} {d[1]:.17g} {d[2]:.17g}\n")
        for m in range(1, model.order + 1):
            grams = sorted(by_order[m])
            f.write(f"ngrams\t{m}\t{len(grams)}\n")
            for gram in grams:
                bo = model._backoff.get(gram, 0.0)
                f.write(f"{' '.join(gram)}\t{model._prob[gram]:.17g}\t{bo:.17g}\n")


def load_ngram(path) -> NGramModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty model file")
    pos = 0

    def expect(key):
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(key + "\t"):
            raise DataError(f"{path}:{pos + 1}: expected {key!r} line")
        fields = lines[pos].split("\t")
        pos += 1
        return fields

    order = int(expect("order")[1])
    vocab_size = int(expect("vocab_size")[1])
    discounts = []
    for m in range(1, order + 1):
        fields = expect("discounts")
        if int(fields[1]) != m:
            raise DataError(f"{path}: discount block out of order")
        discounts.append(tuple(float(x) for x in fields[2].split(" ")))
    prob = {}
    backoff = {}
    for m in range(1, order + 1):
        fields = expect("ngrams")
        if int(fields[1]) != m:
            raise DataError(f"{path}: ngram block out of order")
        n = int(fields[2])
        for _ in range(n):
            gram_s, p_s, bo_s = lines[pos].split("\t")
            pos += 1
            gram = tuple(gram_s.split(" "))
            if len(gram) != m:
                raise DataError(f"{path}:{pos}: ngram of wrong order")
            prob[gram] = float(p_s)
            bo = float(bo_s)
            if bo != 0.0:
                backoff[gram] = bo
    vocab = {g[0] for g in prob if len(g) == 1}
    if len(vocab) != vocab_size:
        raise DataError(f"{path}: unigram block does not match declared vocab size")
    return NGramModel(order, vocab, prob, backoff, discounts)
