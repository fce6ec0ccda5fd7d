"""Canonical data model for expansion pairs, tagged text, and metric reports.

Every pipeline stage speaks JSONL whose records decode into the value types
defined here.  All types are immutable after construction and validate their
invariants eagerly, so a pair that exists is a pair that is well formed.

Tokenization is upstream: English text arrives pre-tokenized on whitespace,
Chinese text pre-segmented with one segment per token.  Nothing in this module
splits, joins, case-folds, or otherwise rewrites surface strings.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Iterator

TokenSeq = tuple[str, ...]


class SchemaError(ValueError):
    """A record violates the pair schema; ``line_no`` is 1-based when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class Language(str, enum.Enum):
    EN = "en"
    ZH = "zh"


class Provenance(str, enum.Enum):
    NSC = "NSC"  # neural sentence compression output, realigned downstream
    CTP = "CTP"  # constituency tree pruning
    IAR = "IAR"  # IsA-relationship (Hearst) extraction; single-span by design
    MMP = "MMP"  # masked modifier prediction
    MODEL = "MODEL"  # system output under evaluation
    REF = "REF"  # human reference
    UNKNOWN = "UNKNOWN"


def check_tokens(tokens: Iterable[str], what: str = "tokens") -> TokenSeq:
    """Validate and freeze a token sequence: non-empty strings, no whitespace."""
    seq = tuple(tokens)
    for i, tok in enumerate(seq):
        if not isinstance(tok, str) or not tok:
            raise SchemaError(f"{what}[{i}] is empty or not a string")
        if any(ch.isspace() for ch in tok):
            raise SchemaError(f"{what}[{i}] contains whitespace: {tok!r}")
    return seq


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token index range [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SchemaError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


def normalize_spans(spans: Iterable[Span], length: int, what: str = "spans") -> tuple[Span, ...]:
    """Sort spans, merge adjacent ones, reject overlaps and out-of-range ends.

    Adjacent insertions (end of one == start of the next) describe a single
    maximal run, so they collapse into one span here rather than being counted
    twice by position metrics.
    """
    ordered = sorted(spans)
    merged: list[Span] = []
    for s in ordered:
        if s.end > length:
            raise SchemaError(f"{what}: span [{s.start}, {s.end}) exceeds length {length}")
        if merged and s.start < merged[-1].end:
            raise SchemaError(f"{what}: overlapping spans at [{s.start}, {s.end})")
        if merged and s.start == merged[-1].end:
            merged[-1] = Span(merged[-1].start, s.end)
        else:
            merged.append(s)
    return tuple(merged)


def delete_spans(tokens: TokenSeq, spans: Iterable[Span]) -> TokenSeq:
    """Remove the tokens covered by ``spans`` (assumed disjoint and sorted)."""
    drop = set()
    for s in spans:
        drop.update(range(s.start, s.end))
    return tuple(t for i, t in enumerate(tokens) if i not in drop)


@dataclass(frozen=True)
class ExpansionPair:
    """A source text X, its expansion Y, and the inserted modifier spans over Y.

    ``modifier_spans`` may be empty in two distinct situations: the pair has no
    insertions (X == Y), or the spans were never populated (raw system output).
    When spans are present, deleting them from Y must reproduce X exactly.
    """

    id: str
    language: Language
    source: TokenSeq
    expansion: TokenSeq
    modifier_spans: tuple[Span, ...] = ()
    provenance: Provenance = Provenance.UNKNOWN
    extra: dict[str, Any] = field(default_factory=dict, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "source", check_tokens(self.source, "source"))
        object.__setattr__(self, "expansion", check_tokens(self.expansion, "expansion"))
        object.__setattr__(self, "language", Language(self.language))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        spans = normalize_spans(self.modifier_spans, len(self.expansion), "modifier_spans")
        object.__setattr__(self, "modifier_spans", spans)
        if spans and delete_spans(self.expansion, spans) != self.source:
            raise SchemaError(
                f"pair {self.id!r}: removing modifier spans from expansion does not yield source"
            )


@dataclass(frozen=True)
class TaggedText:
    """Pre-tokenized text with optional POS tags and span annotations.

    ``pos`` carries one tag per token when present.  ``np_chunks`` are noun
    phrase spans, ``entities`` named-entity spans (pairwise disjoint), and
    ``hq_modifiers`` high-quality modifier spans such as adjective, adverb, or
    idiom occurrences (pairwise disjoint).
    """

    tokens: TokenSeq
    pos: tuple[str, ...] | None = None
    np_chunks: tuple[Span, ...] | None = None
    entities: tuple[Span, ...] | None = None
    hq_modifiers: tuple[Span, ...] | None = None
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", check_tokens(self.tokens))
        n = len(self.tokens)
        if self.pos is not None:
            pos = tuple(self.pos)
            if len(pos) != n:
                raise SchemaError(f"pos has {len(pos)} tags for {n} tokens")
            object.__setattr__(self, "pos", pos)
        for name in ("np_chunks", "entities", "hq_modifiers"):
            spans = getattr(self, name)
            if spans is None:
                continue
            if name == "np_chunks":
                # chunks only need to index within the tokens
                checked = tuple(sorted(spans))
                for s in checked:
                    if s.end > n:
                        raise SchemaError(f"{name}: span [{s.start}, {s.end}) exceeds length {n}")
            else:
                checked = _disjoint_spans(spans, n, name)
            object.__setattr__(self, name, checked)


def _disjoint_spans(spans: Iterable[Span], length: int, what: str) -> tuple[Span, ...]:
    ordered = sorted(spans)
    prev_end = 0
    for s in ordered:
        if s.end > length:
            raise SchemaError(f"{what}: span [{s.start}, {s.end}) exceeds length {length}")
        if s.start < prev_end:
            raise SchemaError(f"{what}: overlapping spans at [{s.start}, {s.end})")
        prev_end = s.end
    return tuple(ordered)


# ---------------------------------------------------------------------------
# Serialization (JSONL, one object per line)

_PAIR_FIELDS = {"id", "language", "source", "expansion", "modifier_spans", "provenance"}


def pair_to_obj(pair: ExpansionPair) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "id": pair.id,
        "language": pair.language.value,
        "source": list(pair.source),
        "expansion": list(pair.expansion),
        "modifier_spans": [[s.start, s.end] for s in pair.modifier_spans],
        "provenance": pair.provenance.value,
    }
    obj.update(pair.extra)
    return obj


def pair_from_obj(obj: dict[str, Any], line_no: int | None = None) -> ExpansionPair:
    try:
        spans = [Span(int(a), int(b)) for a, b in obj.get("modifier_spans") or []]
        return ExpansionPair(
            id=str(obj["id"]),
            language=Language(obj["language"]),
            source=obj["source"],
            expansion=obj["expansion"],
            modifier_spans=tuple(spans),
            provenance=Provenance(obj.get("provenance", "UNKNOWN")),
            extra={k: v for k, v in obj.items() if k not in _PAIR_FIELDS},
        )
    except SchemaError as e:
        raise SchemaError(str(e), line_no) from e
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad pair record: {e}", line_no) from e


def _decode_lines(stream: IO[Any] | Iterable[str | bytes]) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line


def read_pairs(stream: IO[Any] | Iterable[str | bytes]) -> list[ExpansionPair]:
    """Read one pair per JSONL line, in file order.

    Raises SchemaError carrying the 1-based line number on malformed JSON or
    any schema violation (overlapping spans, span out of range, bad enum).
    """
    pairs = []
    for line_no, line in enumerate(_decode_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"malformed JSON: {e.msg}", line_no) from e
        if not isinstance(obj, dict):
            raise SchemaError("record is not a JSON object", line_no)
        pairs.append(pair_from_obj(obj, line_no))
    return pairs


def write_pairs(pairs: Iterable[ExpansionPair], stream: IO[str]) -> None:
    """Emit one JSON object per line; read_pairs(write_pairs(p)) round-trips."""
    for pair in pairs:
        stream.write(json.dumps(pair_to_obj(pair), ensure_ascii=False) + "\n")


_TAGGED_FIELDS = {"id", "tokens", "pos", "np_chunks", "entities", "hq_modifiers"}


def tagged_from_obj(obj: dict[str, Any], line_no: int | None = None) -> TaggedText:
    try:
        def spans(key: str) -> tuple[Span, ...] | None:
            if obj.get(key) is None:
                return None
            return tuple(Span(int(a), int(b)) for a, b in obj[key])

        return TaggedText(
            tokens=obj["tokens"],
            pos=tuple(obj["pos"]) if obj.get("pos") is not None else None,
            np_chunks=spans("np_chunks"),
            entities=spans("entities"),
            hq_modifiers=spans("hq_modifiers"),
            id=str(obj.get("id", "")),
        )
    except SchemaError as e:
        raise SchemaError(str(e), line_no) from e
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad tagged-text record: {e}", line_no) from e


def read_tagged(stream: IO[Any] | Iterable[str | bytes]) -> list[TaggedText]:
    records = []
    for line_no, line in enumerate(_decode_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"malformed JSON: {e.msg}", line_no) from e
        records.append(tagged_from_obj(obj, line_no))
    return records


def surface_modifiers(pair: ExpansionPair) -> list[TokenSeq]:
    """The token runs of Y covered by each modifier span, in order.

    Their concatenated length equals |Y| - |X| whenever spans are populated.
    """
    return [pair.expansion[s.start:s.end] for s in pair.modifier_spans]


# ---------------------------------------------------------------------------
# Metric report containers (filled by expanse.metrics, rendered by the CLI)


@dataclass(frozen=True)
class PairMetrics:
    id: str
    fidelity: bool
    len: int | None = None
    n_pos: int | None = None
    ppl: float | None = None
    nli_e: float | None = None
    diff_distinct: float | None = None
    info_gain: float | None = None


@dataclass(frozen=True)
class CorpusMetrics:
    fidelity_rate: float
    mean_len: float | None = None
    mean_n_pos: float | None = None
    mean_ppl: float | None = None
    mean_nli_e: float | None = None
    mean_info_gain: float | None = None
    bleu: float | None = None


@dataclass(frozen=True)
class MetricReport:
    per_pair: tuple[PairMetrics, ...]
    corpus: CorpusMetrics

    def to_obj(self) -> dict[str, Any]:
        return {
            "per_pair": [vars(p).copy() for p in self.per_pair],
            "corpus": vars(self.corpus).copy(),
        }

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "MetricReport":
        return MetricReport(
            per_pair=tuple(PairMetrics(**p) for p in obj["per_pair"]),
            corpus=CorpusMetrics(**obj["corpus"]),
        )
