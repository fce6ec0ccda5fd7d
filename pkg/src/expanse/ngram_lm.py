"""Deterministic add-k n-gram language model and infill scorer.

This is the built-in stand-in for the neural scorers, so the whole metric
pipeline runs with no external dependencies.  Probabilities are exact and
hand-checkable:

    p(t | ctx) = (count(ctx, t) + k) / (total(ctx) + k * |vocab|)

with no backoff: an unseen context has total 0 and degenerates to the uniform
distribution 1/|vocab|.  The vocabulary is every token seen in training plus
the reserved "<unk>" and "<eos>"; the "<bos>" padding symbol is context-only
and never predicted, so per-context probabilities sum to one over the vocab.
Natural logarithms throughout; perplexity is exp(nll_sum / token_count).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable

from .corpus import TokenSeq
from .templates import InfillTemplatePair, spliced_with_roles

BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"

MAGIC = "EXPANSE-NGLM-1"


@dataclass(frozen=True)
class LmScore:
    """Summed token negative log-likelihood in natural-log units."""

    nll_sum: float
    token_count: int

    @property
    def perplexity(self) -> float:
        return math.exp(self.nll_sum / self.token_count)


@dataclass(frozen=True)
class NgramModel:
    order: int
    add_k: float
    vocab: frozenset[str]
    counts: dict[tuple[str, ...], Counter] = field(default_factory=dict)
    totals: dict[tuple[str, ...], int] = field(default_factory=dict)

    def prob(self, context: tuple[str, ...], token: str) -> float:
        token = token if token in self.vocab else UNK
        context = tuple(t if t in self.vocab or t == BOS else UNK for t in context)
        total = self.totals.get(context, 0)
        count = self.counts.get(context, _EMPTY).get(token, 0)
        return (count + self.add_k) / (total + self.add_k * len(self.vocab))

    @staticmethod
    def uniform(tokens: Iterable[str], order: int = 1, add_k: float = 1.0) -> "NgramModel":
        """A count-free model: every token is 1/|vocab| likely in any context."""
        vocab = frozenset(tokens) | {UNK, EOS}
        return NgramModel(order=order, add_k=add_k, vocab=vocab)


_EMPTY: Counter = Counter()


def train(corpus: Iterable[TokenSeq], order: int = 3, add_k: float = 0.01) -> NgramModel:
    """Count n-grams with <bos> padding and a scored <eos>; no frequency cutoff."""
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise ValueError("empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    if add_k <= 0:
        raise ValueError("add_k must be positive")
    vocab = {tok for sent in sentences for tok in sent} | {UNK, EOS}
    counts: dict[tuple[str, ...], Counter] = {}
    totals: dict[tuple[str, ...], int] = {}
    pad = (BOS,) * (order - 1)
    for sent in sentences:
        seq = pad + sent + (EOS,)
        for i in range(order - 1, len(seq)):
            ctx = seq[i - order + 1:i]
            counts.setdefault(ctx, Counter())[seq[i]] += 1
            totals[ctx] = totals.get(ctx, 0) + 1
    return NgramModel(order=order, add_k=add_k, vocab=frozenset(vocab), counts=counts, totals=totals)


def nll(model: NgramModel, tokens: TokenSeq) -> LmScore:
    """Negative log-likelihood of the sequence plus its <eos>, so the token
    count is len(tokens) + 1.  Unknown tokens map to <unk>."""
    tokens = tuple(tokens)
    if not tokens:
        raise ValueError("empty input")
    seq = (BOS,) * (model.order - 1) + tokens + (EOS,)
    total = 0.0
    for i in range(model.order - 1, len(seq)):
        total -= math.log(model.prob(seq[i - model.order + 1:i], seq[i]))
    return LmScore(nll_sum=total, token_count=len(tokens) + 1)


def infill_nll(model: NgramModel, template: InfillTemplatePair) -> LmScore:
    """Score the target literals of a dual template left to right.

    Every position of the spliced sentence conditions the next prediction
    (teacher-forced left context), but only target-literal tokens contribute
    to the loss and the count; slots are structural and <eos> is not scored.
    """
    roles = spliced_with_roles(template)
    if not any(is_target for _, is_target in roles):
        raise ValueError("no scorable tokens")
    seq = [BOS] * (model.order - 1) + [tok for tok, _ in roles]
    total = 0.0
    count = 0
    for i, (_, is_target) in enumerate(roles):
        if not is_target:
            continue
        pos = i + model.order - 1
        total -= math.log(model.prob(tuple(seq[pos - model.order + 1:pos]), seq[pos]))
        count += 1
    return LmScore(nll_sum=total, token_count=count)


def save(model: NgramModel, stream: IO[str]) -> None:
    obj = {
        "magic": MAGIC,
        "order": model.order,
        "add_k": model.add_k,
        "vocab": sorted(model.vocab),
        "counts": [
            [list(ctx), dict(sorted(model.counts[ctx].items()))]
            for ctx in sorted(model.counts)
        ],
    }
    json.dump(obj, stream, ensure_ascii=False, sort_keys=True)


def load(stream: IO[str]) -> NgramModel:
    obj = json.load(stream)
    if obj.get("magic") != MAGIC:
        raise ValueError(f"not a {MAGIC} model file")
    counts = {tuple(ctx): Counter(table) for ctx, table in obj["counts"]}
    totals = {ctx: sum(c.values()) for ctx, c in counts.items()}
    return NgramModel(
        order=int(obj["order"]),
        add_k=float(obj["add_k"]),
        vocab=frozenset(obj["vocab"]),
        counts=counts,
        totals=totals,
    )
