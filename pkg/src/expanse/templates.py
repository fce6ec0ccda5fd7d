"""Infilling templates: ordered mixes of literal token runs and numbered slots.

A template pair holds an ``input`` and a ``target`` segment sequence.  In the
dual construction used for infill scoring, the two sequences are complements
of one sentence: every input slot is filled by the target literal with the
same rank, and vice versa, so splicing either way reconstructs the sentence.
Slots render as mask sentinels ("<M1>", "<M2>", ...) when templates cross a
process boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .corpus import TokenSeq

DEFAULT_MASK_FORMAT = "<M{i}>"
DEFAULT_NULL_TOKEN = "<null>"


@dataclass(frozen=True)
class Literal:
    tokens: TokenSeq

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))


@dataclass(frozen=True)
class Slot:
    index: int  # 1-based within its own sequence


Segment = Union[Literal, Slot]


class TemplateError(ValueError):
    pass


def _check_slot_numbering(segments: tuple[Segment, ...], what: str) -> None:
    indices = [s.index for s in segments if isinstance(s, Slot)]
    if indices != list(range(1, len(indices) + 1)):
        raise TemplateError(f"{what} slots are not numbered 1..K in order: {indices}")


@dataclass(frozen=True)
class InfillTemplatePair:
    input: tuple[Segment, ...]
    target: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "input", tuple(self.input))
        object.__setattr__(self, "target", tuple(self.target))
        _check_slot_numbering(self.input, "input")
        _check_slot_numbering(self.target, "target")

    def input_slot_count(self) -> int:
        return sum(1 for s in self.input if isinstance(s, Slot))

    def target_literals(self) -> list[TokenSeq]:
        return [s.tokens for s in self.target if isinstance(s, Literal)]


def render(segments: Iterable[Segment], mask_format: str = DEFAULT_MASK_FORMAT) -> list[str]:
    """Flatten segments to surface tokens; each slot becomes one mask token."""
    out: list[str] = []
    for seg in segments:
        if isinstance(seg, Slot):
            out.append(mask_format.format(i=seg.index))
        else:
            out.extend(seg.tokens)
    return out


def splice(pair: InfillTemplatePair, null_token: str | None = None) -> TokenSeq:
    """Fill input slots with the target literals, in rank order.

    With ``null_token`` set, a fill equal to (null_token,) splices to nothing,
    which undoes the joint location format where empty slots carry "<null>".
    """
    fills = pair.target_literals()
    if len(fills) != pair.input_slot_count():
        raise TemplateError(
            f"cannot splice: {pair.input_slot_count()} input slots but {len(fills)} target literals"
        )
    out: list[str] = []
    it = iter(fills)
    for seg in pair.input:
        if isinstance(seg, Slot):
            fill = next(it)
            if null_token is not None and fill == (null_token,):
                continue
            out.extend(fill)
        else:
            out.extend(seg.tokens)
    return tuple(out)


def spliced_with_roles(pair: InfillTemplatePair) -> list[tuple[str, bool]]:
    """The spliced sentence as (token, comes_from_target) pairs.

    Infill scorers walk this left to right, conditioning every position on the
    full preceding context but accumulating loss only on target positions.
    """
    fills = pair.target_literals()
    if len(fills) != pair.input_slot_count():
        raise TemplateError(
            f"cannot splice: {pair.input_slot_count()} input slots but {len(fills)} target literals"
        )
    out: list[tuple[str, bool]] = []
    it = iter(fills)
    for seg in pair.input:
        if isinstance(seg, Slot):
            out.extend((tok, True) for tok in next(it))
        else:
            out.extend((tok, False) for tok in seg.tokens)
    return out


def to_obj(pair: InfillTemplatePair, mask_format: str = DEFAULT_MASK_FORMAT) -> dict:
    return {
        "input": render(pair.input, mask_format),
        "target": render(pair.target, mask_format),
    }
