"""Corpus construction machinery: noise filters, mask-slot sampling for
masked modifier prediction, and pretraining mask generation.

A candidate pair is discarded when any of the eight filter questions answers
yes:

  1  PPL of X or Y exceeds a threshold (default 200)
  2  some modifier carries no meaningful non-stopword token
  3  X is shorter than 3 tokens
  4  some modifier is longer than 20 tokens
  5  some modifier has more than 3 consecutive punctuation tokens or a banned
     substring such as "http" or "@"
  6  total inserted length falls outside [3, 20]
  7  the pair expands at a single position (never applied to IAR pairs, whose
     templates fix the position count at one)
  8  the expansion does not entail the source: Nli-E(Y, X) below a threshold
     (default 0.5)

All sampling here is reproducible from (seed, record id) alone; no global
random state is touched.
"""

from __future__ import annotations

import hashlib
import math
import random
import unicodedata
from dataclasses import dataclass, field
from typing import Any

from .corpus import ExpansionPair, Language, Provenance, Span, TaggedText, surface_modifiers
from .metrics import metric_len_npos, score_ppl
from .stopwords import default_stopwords
from .templates import InfillTemplatePair, Literal, Slot


@dataclass(frozen=True)
class FilterConfig:
    ppl_threshold: float = 200.0
    min_source_len: int = 3
    max_modifier_len: int = 20
    total_len_range: tuple[int, int] = (3, 20)
    max_consecutive_punct: int = 3
    banned_substrings: tuple[str, ...] = ("http", "@")
    min_positions: int = 2
    nli_threshold: float = 0.5
    stopwords: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        lo, hi = self.total_len_range
        if lo > hi or self.ppl_threshold <= 0 or self.nli_threshold < 0:
            raise ValueError("bad filter config")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))
        object.__setattr__(self, "banned_substrings", tuple(self.banned_substrings))
        object.__setattr__(self, "total_len_range", (lo, hi))

    @staticmethod
    def for_language(language: Language) -> "FilterConfig":
        return FilterConfig(stopwords=default_stopwords(language))

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "FilterConfig":
        kwargs = dict(obj)
        if "total_len_range" in kwargs:
            kwargs["total_len_range"] = tuple(kwargs["total_len_range"])
        if "stopwords" in kwargs:
            kwargs["stopwords"] = frozenset(kwargs["stopwords"])
        if "banned_substrings" in kwargs:
            kwargs["banned_substrings"] = tuple(kwargs["banned_substrings"])
        return FilterConfig(**kwargs)

    def to_obj(self) -> dict[str, Any]:
        return {
            "ppl_threshold": self.ppl_threshold,
            "min_source_len": self.min_source_len,
            "max_modifier_len": self.max_modifier_len,
            "total_len_range": list(self.total_len_range),
            "max_consecutive_punct": self.max_consecutive_punct,
            "banned_substrings": list(self.banned_substrings),
            "min_positions": self.min_positions,
            "nli_threshold": self.nli_threshold,
            "stopwords": sorted(self.stopwords),
        }


@dataclass(frozen=True)
class FilterVerdict:
    keep: bool
    failed_filters: tuple[int, ...]


def _is_punct_token(token: str) -> bool:
    return all(unicodedata.category(ch).startswith("P") for ch in token)


def apply_filters(pair: ExpansionPair, cfg: FilterConfig, lm, nli) -> FilterVerdict:
    """Evaluate all eight filters and report every failure, sorted."""
    failed: set[int] = set()
    runs = surface_modifiers(pair)
    total_len, n_pos = metric_len_npos(pair)

    if (
        score_ppl(pair.source, lm) > cfg.ppl_threshold
        or score_ppl(pair.expansion, lm) > cfg.ppl_threshold
    ):
        failed.add(1)

    for run in runs:
        meaningful = any(
            tok not in cfg.stopwords and not _is_punct_token(tok) for tok in run
        )
        if not meaningful:
            failed.add(2)
        if len(run) > cfg.max_modifier_len:
            failed.add(4)
        streak = 0
        for tok in run:
            streak = streak + 1 if _is_punct_token(tok) else 0
            if streak > cfg.max_consecutive_punct:
                failed.add(5)
        low = [t.lower() for t in run]
        if any(bad in tok for tok in low for bad in cfg.banned_substrings):
            failed.add(5)

    if len(pair.source) < cfg.min_source_len:
        failed.add(3)
    lo, hi = cfg.total_len_range
    if not (lo <= total_len <= hi):
        failed.add(6)
    if 1 <= n_pos < cfg.min_positions and pair.provenance is not Provenance.IAR:
        failed.add(7)
    if nli.entailment(pair.expansion, pair.source) < cfg.nli_threshold:
        failed.add(8)

    ordered = tuple(sorted(failed))
    return FilterVerdict(keep=not ordered, failed_filters=ordered)


# -- masked modifier prediction sampling ----------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    k_min: int = 3
    k_max: int = 5
    repeats: int = 5
    anchor_weight: float = 4.0
    base_weight: float = 1.0
    seed: int = 0
    anchor_tag_prefixes: tuple[str, ...] = ("n", "v")  # matched case-insensitively

    def __post_init__(self):
        if not (1 <= self.k_min <= self.k_max) or self.repeats < 1:
            raise ValueError("bad sampler config")
        if self.anchor_weight <= 0 or self.base_weight <= 0:
            raise ValueError("weights must be positive")
        object.__setattr__(self, "anchor_tag_prefixes", tuple(self.anchor_tag_prefixes))

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "SamplerConfig":
        kwargs = dict(obj)
        if "anchor_tag_prefixes" in kwargs:
            kwargs["anchor_tag_prefixes"] = tuple(kwargs["anchor_tag_prefixes"])
        return SamplerConfig(**kwargs)

    def to_obj(self) -> dict[str, Any]:
        return {
            "k_min": self.k_min,
            "k_max": self.k_max,
            "repeats": self.repeats,
            "anchor_weight": self.anchor_weight,
            "base_weight": self.base_weight,
            "seed": self.seed,
            "anchor_tag_prefixes": list(self.anchor_tag_prefixes),
        }


def derived_rng(seed: int, record_id: str) -> random.Random:
    """A PRNG keyed by (seed, record id); stable across platforms and runs."""
    digest = hashlib.sha256(f"{seed}\x1f{record_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def slot_weights(text: TaggedText, cfg: SamplerConfig) -> list[float]:
    """Weight for each of the |tokens|+1 insertion positions.

    Positions strictly inside a named entity weigh zero; positions adjacent to
    a noun or verb anchor get ``anchor_weight``; everything else the base.
    """
    if text.pos is None:
        raise ValueError("pos required for slot weighting")
    n = len(text.tokens)
    prefixes = tuple(p.lower() for p in cfg.anchor_tag_prefixes)

    def is_anchor(idx: int) -> bool:
        return 0 <= idx < n and text.pos[idx].lower().startswith(prefixes)

    weights = []
    for pos in range(n + 1):
        weights.append(cfg.anchor_weight if is_anchor(pos - 1) or is_anchor(pos) else cfg.base_weight)
    for ent in text.entities or ():
        for pos in range(ent.start + 1, ent.end):
            weights[pos] = 0.0
    return weights


def _weighted_sample(rng: random.Random, weights: list[float], k: int) -> list[int]:
    """k distinct indices drawn proportionally to weights, without replacement."""
    live = list(weights)
    chosen: list[int] = []
    for _ in range(k):
        total = sum(live)
        mark = rng.random() * total
        acc = 0.0
        pick = None
        for i, w in enumerate(live):
            if w <= 0:
                continue
            acc += w
            if mark < acc:
                pick = i
                break
        if pick is None:  # float edge: fall back to the last positive index
            pick = max(i for i, w in enumerate(live) if w > 0)
        chosen.append(pick)
        live[pick] = 0.0
    return sorted(chosen)


def sample_mmp_templates(
    text: TaggedText, cfg: SamplerConfig, mask_format: str = "<M{i}>"
) -> list[InfillTemplatePair]:
    """One template per repeat: the source text with 3..5 mask slots placed at
    weighted positions.  Targets are empty; an infilling model fills them."""
    del mask_format
    weights = slot_weights(text, cfg)
    positive = sum(1 for w in weights if w > 0)
    if positive < cfg.k_min:
        raise ValueError("not enough insertable positions")
    rng = derived_rng(cfg.seed, text.id)
    templates = []
    for _ in range(cfg.repeats):
        k = min(rng.randint(cfg.k_min, cfg.k_max), positive)
        slots = _weighted_sample(rng, weights, k)
        segments: list[Literal | Slot] = []
        slot_no = 0
        cursor = 0
        for pos in slots:
            if pos > cursor:
                segments.append(Literal(text.tokens[cursor:pos]))
                cursor = pos
            slot_no += 1
            segments.append(Slot(slot_no))
        if cursor < len(text.tokens):
            segments.append(Literal(text.tokens[cursor:]))
        templates.append(InfillTemplatePair(input=tuple(segments), target=()))
    return templates


def select_best_expansion(candidates: list, lm) -> int:
    """Index of the lowest-perplexity candidate; ties go to the lowest index."""
    if not candidates:
        raise ValueError("no candidates")
    ppls = [score_ppl(tuple(c), lm) for c in candidates]
    return min(range(len(candidates)), key=lambda i: (ppls[i], i))


# -- pretraining mask generation ---------------------------------------------------


def mask_for_pretraining(
    text: TaggedText,
    rate: float = 0.25,
    span_len_range: tuple[int, int] = (1, 10),
    seed: int = 0,
) -> InfillTemplatePair:
    """Greedy high-quality-modifier masking, then random spans up to the rate.

    High-quality modifier spans are taken in textual order while they fit the
    budget ceil(rate * N).  Random spans with length uniform in
    ``span_len_range`` then fill the remainder; the final span may overshoot
    the budget by at most span_len_max - 1 tokens.  Adjacent masked spans
    merge.  The result is a dual template whose splice reproduces the text.
    """
    n = len(text.tokens)
    lo, hi = span_len_range
    if not (1 <= lo <= hi):
        raise ValueError("bad span length range")
    budget = math.ceil(rate * n)
    masked = [False] * n
    total = 0

    for span in text.hq_modifiers or ():
        length = len(span)
        if total + length <= budget:
            for i in range(span.start, span.end):
                masked[i] = True
            total += length

    rng = derived_rng(seed, text.id)
    while total < budget:
        gaps = _false_runs(masked)
        if not gaps:
            break
        length = rng.randint(lo, hi)
        length = min(length, max(g.end - g.start for g in gaps))
        starts = [s for g in gaps for s in range(g.start, g.end - length + 1)]
        start = starts[rng.randrange(len(starts))]
        for i in range(start, start + length):
            masked[i] = True
        total += length

    spans = _true_runs(masked)
    in_segs: list[Literal | Slot] = []
    tgt_segs: list[Literal | Slot] = []
    slot_no = 0
    cursor = 0
    for span in spans:
        if span.start > cursor:
            in_segs.append(Literal(text.tokens[cursor:span.start]))
        slot_no += 1
        in_segs.append(Slot(slot_no))
        tgt_segs.append(Slot(slot_no))
        tgt_segs.append(Literal(text.tokens[span.start:span.end]))
        cursor = span.end
    if cursor < n:
        in_segs.append(Literal(text.tokens[cursor:]))
    return InfillTemplatePair(input=tuple(in_segs), target=tuple(tgt_segs))


def _false_runs(flags: list[bool]) -> list[Span]:
    return _runs(flags, False)


def _true_runs(flags: list[bool]) -> list[Span]:
    return _runs(flags, True)


def _runs(flags: list[bool], value: bool) -> list[Span]:
    spans = []
    start = None
    for i, f in enumerate(flags):
        if f == value and start is None:
            start = i
        elif f != value and start is not None:
            spans.append(Span(start, i))
            start = None
    if start is not None:
        spans.append(Span(start, len(flags)))
    return spans
