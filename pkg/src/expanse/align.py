"""Fidelity checking, monotone span recovery, and locate-and-infill formats.

An expansion is faithful when the source X is an in-order subsequence of Y.
For faithful pairs that arrive without modifier spans (compression output,
system output), ``align_min_gaps`` recovers a canonical embedding of X into Y:
among all monotone embeddings it minimizes the number of insertion gaps, and
breaks ties by the lexicographically smallest index map.  Total inserted
length is the same under every embedding, but the gap count is not; taking
the minimum yields the most conservative position count and a deterministic
canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ExpansionPair, Language, Provenance, Span, TokenSeq, surface_modifiers
from .templates import (
    DEFAULT_MASK_FORMAT,
    DEFAULT_NULL_TOKEN,
    InfillTemplatePair,
    Literal,
    Slot,
)


class NotSubsequenceError(ValueError):
    pass


@dataclass(frozen=True)
class Alignment:
    """A monotone embedding: ``map[i]`` is the Y-index of X-token i; ``slots``
    are the maximal runs of Y-indices left unmatched (the insertion gaps)."""

    map: tuple[int, ...]
    slots: tuple[Span, ...]


@dataclass(frozen=True)
class LocationLabels:
    """Insert-here flags, one per X token plus a final end-of-text slot."""

    labels: tuple[bool, ...]


def check_fidelity(x: TokenSeq, y: TokenSeq) -> bool:
    """True iff x is a subsequence of y (greedy scan decides this exactly)."""
    it = iter(y)
    return all(tok in it for tok in x)


def align_min_gaps(x: TokenSeq, y: TokenSeq) -> Alignment:
    """Minimum-gap monotone embedding of x into y, leftmost among minima.

    Backward DP: best[j] is the fewest future gaps when the previous match
    sits at y-position j (j = -1 before the first match), counting the final
    end gap.  A forward greedy pass then picks the smallest feasible y-index
    for each x-token, which is exactly the lexicographically smallest optimal
    map.  O(|x| * |y|).
    """
    x, y = tuple(x), tuple(y)
    n, m = len(x), len(y)
    INF = float("inf")

    if n == 0:  # degenerate: everything in y is one insertion gap
        return Alignment(map=(), slots=(Span(0, m),) if m else ())

    # best[i][j+1]: future gaps for x[i:], previous match at j
    end = [1 if j < m - 1 else 0 for j in range(-1, m)]
    best = end
    layers: list[list[float]] = []
    for i in range(n - 1, -1, -1):
        nxt = best
        # suffix minimum of nxt over match positions >= t
        suffix = [INF] * (m + 1)
        for t in range(m - 1, -1, -1):
            suffix[t] = suffix[t + 1]
            if y[t] == x[i]:
                suffix[t] = min(suffix[t], nxt[t + 1])
        cur: list[float] = [INF] * (m + 1)
        for j in range(-1, m):
            adjacent = nxt[j + 2] if j + 1 < m and y[j + 1] == x[i] else INF
            skipped = 1 + suffix[j + 2] if j + 2 <= m else INF
            cur[j + 1] = min(adjacent, skipped)
        layers.append(cur)
        best = cur
    layers.reverse()

    if best[0] == INF:
        raise NotSubsequenceError("not a subsequence")

    mapping: list[int] = []
    prev = -1
    for i in range(n):
        want = layers[i][prev + 1]
        nxt = layers[i + 1] if i + 1 < n else end
        j = prev + 1
        while True:
            if y[j] == x[i]:
                gap = 1 if j > prev + 1 else 0
                if gap + nxt[j + 1] == want:
                    break
            j += 1
        mapping.append(j)
        prev = j

    matched = set(mapping)
    slots = _gap_runs(matched, m)
    return Alignment(map=tuple(mapping), slots=slots)


def _gap_runs(matched: set[int], m: int) -> tuple[Span, ...]:
    spans = []
    start = None
    for j in range(m):
        if j not in matched and start is None:
            start = j
        elif j in matched and start is not None:
            spans.append(Span(start, j))
            start = None
    if start is not None:
        spans.append(Span(start, m))
    return tuple(spans)


def pair_from_alignment(
    x: TokenSeq,
    y: TokenSeq,
    id: str,
    language: Language = Language.EN,
    provenance: Provenance = Provenance.UNKNOWN,
) -> ExpansionPair:
    """Canonicalize a raw (X, Y) pair: modifier spans become the alignment gaps."""
    alignment = align_min_gaps(x, y)
    return ExpansionPair(
        id=id,
        language=language,
        source=tuple(x),
        expansion=tuple(y),
        modifier_spans=alignment.slots,
        provenance=provenance,
    )


def location_labels(pair: ExpansionPair) -> LocationLabels:
    """Label i: insert before X-token i; the last label is the end slot.

    The number of true labels equals the pair's position count: every span is
    followed by exactly one X token, except a span at the very end of Y which
    raises the final flag.
    """
    labels = [False] * (len(pair.source) + 1)
    consumed = 0
    for span in pair.modifier_spans:
        consumed += len(span)
        if span.end == len(pair.expansion):
            labels[-1] = True
        else:
            labels[span.end - consumed] = True
    return LocationLabels(labels=tuple(labels))


def joint_format(
    pair: ExpansionPair,
    mask_format: str = DEFAULT_MASK_FORMAT,
    null_token: str = DEFAULT_NULL_TOKEN,
) -> InfillTemplatePair:
    """Joint locate-and-infill layout: a slot between every two adjacent source
    tokens plus both ends; each target fill is a modifier run or the null token.
    """
    del mask_format  # slots stay symbolic; rendering happens at serialization
    runs = surface_modifiers(pair)
    flags = location_labels(pair).labels
    input_segs: list[Literal | Slot] = []
    target_segs: list[Literal | Slot] = []
    run_iter = iter(runs)
    for i, tok in enumerate(pair.source):
        input_segs.append(Slot(i + 1))
        input_segs.append(Literal((tok,)))
        target_segs.append(Slot(i + 1))
        target_segs.append(Literal(next(run_iter) if flags[i] else (null_token,)))
    input_segs.append(Slot(len(pair.source) + 1))
    target_segs.append(Slot(len(pair.source) + 1))
    target_segs.append(Literal(next(run_iter) if flags[-1] else (null_token,)))
    return InfillTemplatePair(input=tuple(input_segs), target=tuple(target_segs))


def pipelined_format(
    pair: ExpansionPair,
    mask_format: str = DEFAULT_MASK_FORMAT,
) -> InfillTemplatePair:
    """Pipelined layout: the source with a mask slot at each true location
    label; the target carries the modifier runs, one per slot, in order."""
    del mask_format
    runs = surface_modifiers(pair)
    flags = location_labels(pair).labels
    input_segs: list[Literal | Slot] = []
    target_segs: list[Literal | Slot] = []
    slot_no = 0
    pending: list[str] = []

    def flush() -> None:
        if pending:
            input_segs.append(Literal(tuple(pending)))
            pending.clear()

    run_iter = iter(runs)
    for i, tok in enumerate(pair.source):
        if flags[i]:
            flush()
            slot_no += 1
            input_segs.append(Slot(slot_no))
            target_segs.append(Slot(slot_no))
            target_segs.append(Literal(next(run_iter)))
        pending.append(tok)
    flush()
    if flags[-1]:
        slot_no += 1
        input_segs.append(Slot(slot_no))
        target_segs.append(Slot(slot_no))
        target_segs.append(Literal(next(run_iter)))
    return InfillTemplatePair(input=tuple(input_segs), target=tuple(target_segs))
