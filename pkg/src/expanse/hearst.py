"""IsA (hypernym-hyponym) detection with Hearst patterns.

A pattern is a small template over noun-phrase positions and clue words, e.g.
"NP_sup (such as | including) NP_sub".  The contiguous template sub-range
holding the hypernym phrase and the clue words is the *modifier*: excising it
from Y leaves the hyponym in place and produces the source X.  From

    we offer our buyers a wide range of meat , including pork , beef , and lamb .

the modifier "a wide range of meat , including" comes out and

    we offer our buyers pork , beef , and lamb .

remains.  Clue-word comparison is case-insensitive; noun phrases come from the
record's chunk spans or, as a fallback, from the naive tag-run chunker below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Any, Iterable, Union

from .corpus import ExpansionPair, Language, Provenance, Span, TaggedText, delete_spans


class HearstError(ValueError):
    pass


# -- pattern template elements ----------------------------------------------


@dataclass(frozen=True)
class NPSup:
    """The hypernym noun-phrase position."""


@dataclass(frozen=True)
class NPSub:
    """The hyponym noun-phrase position (list tails may add more)."""


@dataclass(frozen=True)
class Lit:
    words: tuple[str, ...]


@dataclass(frozen=True)
class Alt:
    choices: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Opt:
    element: "Element"


Element = Union[NPSup, NPSub, Lit, Alt, Opt]


@dataclass(frozen=True)
class HearstPattern:
    pattern_id: str
    template: tuple[Element, ...]
    modifier_elements: tuple[int, int]  # half-open element index range

    def __post_init__(self):
        lo, hi = self.modifier_elements
        kinds = [type(e) for e in self.template]
        if kinds.count(NPSup) != 1 or NPSub not in kinds:
            raise HearstError(f"{self.pattern_id}: need exactly one NP_sup and an NP_sub")
        if not (0 <= lo < hi <= len(self.template)):
            raise HearstError(f"{self.pattern_id}: bad modifier element range")
        covered = kinds[lo:hi]
        if NPSup not in covered or NPSub in covered:
            raise HearstError(f"{self.pattern_id}: modifier must cover NP_sup and never NP_sub")


@dataclass(frozen=True)
class HearstMatch:
    pattern_id: str
    hypernym_span: Span
    hyponym_spans: tuple[Span, ...]
    modifier_span: Span


def _alt(*choices: str) -> Alt:
    return Alt(tuple(tuple(c.split()) for c in choices))


def builtin_patterns() -> list[HearstPattern]:
    """The eight built-in patterns, in priority order.

    The second noun phrase of the "especially" pattern is the hyponym (the
    first is the general term), so its modifier covers the leading phrase and
    the clue, matching "[secondary pests , especially] mirids and mealy bugs".
    Commas before "such as" / "including" / "especially" / "e.g." clues are
    optional and belong to the modifier when present.
    """
    comma = Opt(Lit((",",)))
    return [
        HearstPattern(
            "p1-kind-of",
            (NPSub(), Lit(("is",)), _alt("a", "an"), _alt("part", "field", "kind", "type"),
             Lit(("of",)), NPSup(), Lit(("that",))),
            (1, 7),
        ),
        HearstPattern(
            "p2-other",
            (NPSub(), _alt("and", "or"), Opt(_alt("some", "any")), Lit(("other",)), NPSup()),
            (1, 5),
        ),
        HearstPattern(
            "p3-especially",
            (NPSup(), comma, _alt("especially", "particularly", "notably"), NPSub()),
            (0, 3),
        ),
        HearstPattern(
            "p4-known-as",
            (NPSub(), Lit((",",)), _alt("known", "famous"), Lit(("as",)), NPSup()),
            (1, 5),
        ),
        HearstPattern(
            "p5-such-as-including",
            (NPSup(), comma, _alt("such as", "including"), NPSub()),
            (0, 3),
        ),
        HearstPattern(
            "p6-such-np-as",
            (Lit(("such",)), NPSup(), Lit(("as",)), NPSub()),
            (0, 3),
        ),
        HearstPattern(
            "p7-for-instance",
            (NPSup(), comma, _alt("e.g.", "i.e.", "for instance", "for example"), NPSub()),
            (0, 3),
        ),
        HearstPattern(
            "p8-known-as-front",
            (_alt("known", "famous"), Lit(("as",)), NPSup(), Lit((",",)), NPSub()),
            (0, 4),
        ),
    ]


_LIST_TAIL_PATTERNS = {"p5-such-as-including", "p6-such-np-as", "p7-for-instance"}


# -- naive chunking fallback --------------------------------------------------

_NOUN_PREFIX = "NN"


def _base_np_end(tags: tuple[str, ...], i: int) -> int | None:
    """Longest base NP starting at i: (DT|PRP$)? (JJ*|CD)* NN+ ; returns its end.

    A determiner or possessive opens a fresh noun phrase, so adjacent NPs like
    "our buyers" and "a wide range" never fuse into one run.
    """
    n = len(tags)
    j = i
    if j < n and tags[j] in ("DT", "PRP$"):
        j += 1
    while j < n and (tags[j].startswith("JJ") or tags[j] == "CD"):
        j += 1
    nouns = j
    while nouns < n and tags[nouns].startswith(_NOUN_PREFIX):
        nouns += 1
    return nouns if nouns > j else None


def chunk_naive(tagged: TaggedText) -> list[Span]:
    """Greedy left-to-right base-NP spans over DT/PRP$/JJ/CD/NN tag runs, each
    ending in a noun tag, then one level of "NP of NP" merging for extended
    noun phrases."""
    if tagged.pos is None:
        raise HearstError("pos required for naive chunking")
    tags = tagged.pos
    base: list[Span] = []
    i, n = 0, len(tags)
    while i < n:
        end = _base_np_end(tags, i)
        if end is not None:
            base.append(Span(i, end))
            i = end
        else:
            i += 1
    merged: list[Span] = []
    i = 0
    while i < len(base):
        cur, nxt = base[i], base[i + 1] if i + 1 < len(base) else None
        if (
            nxt is not None
            and nxt.start == cur.end + 1
            and tagged.tokens[cur.end].lower() == "of"
        ):
            merged.append(Span(cur.start, nxt.end))
            i += 2
        else:
            merged.append(cur)
            i += 1
    return merged


# -- matching -----------------------------------------------------------------


def _chunk_at(chunks: list[Span], p: int) -> Span | None:
    """The noun phrase matched at position p: a chunk starting there, or the
    remaining suffix of a chunk that covers p (so a clue word absorbed into a
    chunk, like the "such" of "such lofty topics", does not block a match)."""
    starting = [c for c in chunks if c.start == p]
    if starting:
        return max(starting, key=lambda c: c.end)
    for c in chunks:
        if c.start < p < c.end:
            return Span(p, c.end)
    return None


def _match_element(
    element: Element, tokens: tuple[str, ...], chunks: list[Span], p: int
) -> tuple[int, Span | None] | None:
    """Try one element at position p; returns (next position, NP span or None)."""
    if isinstance(element, (NPSup, NPSub)):
        chunk = _chunk_at(chunks, p)
        if chunk is None:
            return None
        return chunk.end, chunk
    if isinstance(element, Lit):
        words = element.words
        if tokens[p:p + len(words)] and len(tokens) - p >= len(words):
            if all(tokens[p + k].casefold() == w for k, w in enumerate(words)):
                return p + len(words), None
        return None
    if isinstance(element, Alt):
        for choice in element.choices:
            got = _match_element(Lit(choice), tokens, chunks, p)
            if got is not None:
                return got
        return None
    if isinstance(element, Opt):
        got = _match_element(element.element, tokens, chunks, p)
        return got if got is not None else (p, None)
    raise TypeError(f"unknown element {element!r}")


def _try_pattern(
    pattern: HearstPattern, tokens: tuple[str, ...], chunks: list[Span], start: int
) -> HearstMatch | None:
    p = start
    hypernym: Span | None = None
    hyponyms: list[Span] = []
    bounds: list[tuple[int, int]] = []  # matched token range per element
    for element in pattern.template:
        got = _match_element(element, tokens, chunks, p)
        if got is None:
            return None
        q, np_span = got
        bounds.append((p, q))
        if isinstance(element, NPSup):
            hypernym = np_span
        elif isinstance(element, NPSub):
            hyponyms.append(np_span)
        p = q
    if pattern.pattern_id in _LIST_TAIL_PATTERNS:
        p, more = _consume_list_tail(tokens, chunks, p)
        hyponyms.extend(more)
    lo, hi = pattern.modifier_elements
    mod_start = bounds[lo][0]
    mod_end = bounds[hi - 1][1]
    if mod_start == mod_end:
        return None
    assert hypernym is not None
    return HearstMatch(
        pattern_id=pattern.pattern_id,
        hypernym_span=hypernym,
        hyponym_spans=tuple(hyponyms),
        modifier_span=Span(mod_start, mod_end),
    )


def _consume_list_tail(
    tokens: tuple[str, ...], chunks: list[Span], p: int
) -> tuple[int, list[Span]]:
    """Extend hyponyms over "NP , NP (, and|or NP)?"-style enumerations."""
    found: list[Span] = []
    while True:
        q = p
        seen_sep = False
        if q < len(tokens) and tokens[q] == ",":
            q += 1
            seen_sep = True
        if q < len(tokens) and tokens[q].casefold() in ("and", "or"):
            q += 1
            seen_sep = True
        if not seen_sep:
            break
        chunk = _chunk_at(chunks, q)
        if chunk is None:
            break
        found.append(chunk)
        p = chunk.end
    return p, found


def find_matches(
    tagged: TaggedText, patterns: Iterable[HearstPattern] | None = None
) -> list[HearstMatch]:
    """Left-to-right scan; at each position patterns are tried in list order,
    and after a match scanning resumes past its modifier span, so the returned
    matches are non-overlapping and sorted."""
    pattern_list = list(patterns) if patterns is not None else builtin_patterns()
    chunks = list(tagged.np_chunks) if tagged.np_chunks is not None else chunk_naive(tagged)
    tokens = tagged.tokens
    matches: list[HearstMatch] = []
    p = 0
    while p < len(tokens):
        hit = None
        for pattern in pattern_list:
            hit = _try_pattern(pattern, tokens, chunks, p)
            if hit is not None:
                break
        if hit is None:
            p += 1
        else:
            matches.append(hit)
            p = max(hit.modifier_span.end, p + 1)
    return matches


def match_to_pair(tagged: TaggedText, match: HearstMatch, id: str,
                  language: Language = Language.EN) -> ExpansionPair:
    """Y is the tagged text; X is Y minus the matched modifier span."""
    source = delete_spans(tagged.tokens, [match.modifier_span])
    if not source:
        raise HearstError("empty source")
    return ExpansionPair(
        id=id,
        language=language,
        source=source,
        expansion=tagged.tokens,
        modifier_spans=(match.modifier_span,),
        provenance=Provenance.IAR,
    )


# -- pattern file round trip --------------------------------------------------


def _element_to_obj(element: Element) -> Any:
    if isinstance(element, NPSup):
        return "NP_SUP"
    if isinstance(element, NPSub):
        return "NP_SUB"
    if isinstance(element, Lit):
        return {"lit": list(element.words)}
    if isinstance(element, Alt):
        return {"alt": [list(c) for c in element.choices]}
    if isinstance(element, Opt):
        return {"opt": _element_to_obj(element.element)}
    raise TypeError(f"unknown element {element!r}")


def _element_from_obj(obj: Any) -> Element:
    if obj == "NP_SUP":
        return NPSup()
    if obj == "NP_SUB":
        return NPSub()
    if isinstance(obj, dict):
        if "lit" in obj:
            return Lit(tuple(obj["lit"]))
        if "alt" in obj:
            return Alt(tuple(tuple(c) for c in obj["alt"]))
        if "opt" in obj:
            return Opt(_element_from_obj(obj["opt"]))
    raise HearstError(f"bad pattern element: {obj!r}")


def write_patterns(patterns: Iterable[HearstPattern], stream: IO[str]) -> None:
    for p in patterns:
        obj = {
            "pattern_id": p.pattern_id,
            "template": [_element_to_obj(e) for e in p.template],
            "modifier_elements": list(p.modifier_elements),
        }
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_patterns(stream: IO[str] | Iterable[str]) -> list[HearstPattern]:
    out = []
    for line in stream:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            HearstPattern(
                pattern_id=obj["pattern_id"],
                template=tuple(_element_from_obj(e) for e in obj["template"]),
                modifier_elements=(int(obj["modifier_elements"][0]), int(obj["modifier_elements"][1])),
            )
        )
    return out
