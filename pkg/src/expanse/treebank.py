"""Bracketed constituency trees and skeleton extraction by subtree pruning.

The input format is the plain S-expression emitted by treebank-style parsers:
``(LABEL child+)`` where a leaf is ``(TAG token)`` and parentheses inside
tokens are escaped as ``-LRB-`` / ``-RRB-``.  An outer ``(ROOT ...)`` wrapper
is accepted and retained.

Pruning walks the tree in preorder and removes modifier subtrees by label:

English
  S      drop PP and ADVP children
  NP     drop ADJP / JJ / CD / PP children, plus everything between a matching
         -LRB- ... -RRB- child run inclusive
  VP     drop PP and ADVP children
  ADJP   drop children whose label starts with RB
  SBAR   drop the whole subtree when its first child's label starts with WH
  other  recurse

Chinese
  every non-leaf node drops DNP, CP, DVP, ADVP, QP, LCP, and PP children

A candidate subtree is never dropped when it carries more than
``max_prunable_leaves`` leaves (default 10), so long constituents survive.
The remaining yield is the skeleton; the dropped token positions, merged into
maximal runs, are the modifier spans of the resulting pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ExpansionPair, Language, Provenance, Span, TokenSeq


class TreeParseError(ValueError):
    """Malformed bracketed tree; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode("utf-8"))
        super().__init__(f"{message} at byte {self.offset}")


class EmptySkeletonError(ValueError):
    """Pruning removed every leaf; the caller should discard the tree."""


@dataclass(frozen=True)
class ConstNode:
    """A constituency tree node: either a leaf (token) or an inner node."""

    label: str
    children: tuple["ConstNode", ...] = ()
    leaf_token: str | None = None

    def __post_init__(self):
        if bool(self.children) == (self.leaf_token is not None):
            raise ValueError("node must be a leaf xor have children")

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None

    def leaf_count(self) -> int:
        if self.is_leaf:
            return 1
        return sum(c.leaf_count() for c in self.children)


@dataclass(frozen=True)
class PruneOutcome:
    skeleton: TokenSeq
    pruned_spans: tuple[Span, ...]


_ESCAPES = {"-LRB-": "(", "-RRB-": ")"}


def parse_tree(text: str) -> ConstNode:
    """Parse one bracketed tree; raises TreeParseError with a byte offset."""
    i, n = 0, len(text)

    def skip_ws(j: int) -> int:
        while j < n and text[j].isspace():
            j += 1
        return j

    def read_atom(j: int) -> tuple[str, int]:
        k = j
        while k < n and not text[k].isspace() and text[k] not in "()":
            k += 1
        return text[j:k], k

    def read_node(j: int) -> tuple[ConstNode, int]:
        if j >= n or text[j] != "(":
            raise TreeParseError("expected '('", text, j)
        open_pos = j
        j = skip_ws(j + 1)
        label, j = read_atom(j)
        if not label:
            raise TreeParseError("empty label", text, j)
        children: list[ConstNode] = []
        tokens: list[str] = []
        while True:
            j = skip_ws(j)
            if j >= n:
                raise TreeParseError("unbalanced parentheses", text, open_pos)
            if text[j] == ")":
                j += 1
                break
            if text[j] == "(":
                node, j = read_node(j)
                children.append(node)
            else:
                atom, j = read_atom(j)
                tokens.append(atom)
        if children and tokens:
            raise TreeParseError("mixed tokens and subtrees under one node", text, open_pos)
        if not children:
            if len(tokens) == 0:
                raise TreeParseError("leaf with zero tokens", text, open_pos)
            if len(tokens) > 1:
                raise TreeParseError("leaf with multiple tokens", text, open_pos)
            return ConstNode(label=label, leaf_token=tokens[0]), j
        return ConstNode(label=label, children=tuple(children)), j

    i = skip_ws(i)
    root, i = read_node(i)
    i = skip_ws(i)
    if i != n:
        raise TreeParseError("unbalanced parentheses", text, i)
    return root


def yield_tokens(node: ConstNode) -> TokenSeq:
    """In-order leaf tokens with -LRB-/-RRB- rendered as literal brackets."""
    out: list[str] = []

    def walk(nd: ConstNode) -> None:
        if nd.is_leaf:
            out.append(_ESCAPES.get(nd.leaf_token, nd.leaf_token))
        else:
            for c in nd.children:
                walk(c)

    walk(node)
    return tuple(out)


def normalize_label(label: str) -> str:
    """Strip functional suffixes at the first '-'; bracket and empty-category
    labels (-LRB-, -RRB-, -NONE-) and other '-'-initial labels stay verbatim."""
    if label.startswith("-"):
        return label
    return label.split("-", 1)[0]


def strip_empty_categories(node: ConstNode) -> ConstNode | None:
    """Drop -NONE- leaves (traces have no surface form) and cascade upward."""
    if node.is_leaf:
        return None if normalize_label(node.label) == "-NONE-" else node
    kept = tuple(c for c in (strip_empty_categories(ch) for ch in node.children) if c)
    return ConstNode(node.label, children=kept) if kept else None


_EN_DROP_AT = {
    "S": {"PP", "ADVP"},
    "VP": {"PP", "ADVP"},
    "NP": {"ADJP", "JJ", "CD", "PP"},
}
_ZH_DROP = {"DNP", "CP", "DVP", "ADVP", "QP", "LCP", "PP"}


def _prune(tree: ConstNode, language: Language, max_prunable_leaves: int) -> PruneOutcome:
    tree = strip_empty_categories(tree)
    if tree is None:
        raise EmptySkeletonError("empty skeleton")
    original = yield_tokens(tree)
    dropped: list[bool] = [False] * len(original)
    cursor = 0  # next leaf position during the walk

    def mark_dropped(nd: ConstNode) -> None:
        nonlocal cursor
        for _ in range(nd.leaf_count()):
            dropped[cursor] = True
            cursor += 1

    def droppable(nd: ConstNode) -> bool:
        return nd.leaf_count() <= max_prunable_leaves

    def child_drops_en(label: str, children: tuple[ConstNode, ...]) -> set[int]:
        drops: set[int] = set()
        if label == "NP":
            # bracketed runs count as one candidate; an unmatched -LRB- prunes nothing
            i = 0
            while i < len(children):
                if normalize_label(children[i].label) == "-LRB-":
                    depth, j = 1, i + 1
                    while j < len(children) and depth:
                        lab = normalize_label(children[j].label)
                        depth += lab == "-LRB-"
                        depth -= lab == "-RRB-"
                        j += 1
                    if depth == 0:
                        run_leaves = sum(children[k].leaf_count() for k in range(i, j))
                        if run_leaves <= max_prunable_leaves:
                            drops.update(range(i, j))
                        i = j
                        continue
                i += 1
        droppable_labels = _EN_DROP_AT.get(label)
        for idx, child in enumerate(children):
            if idx in drops:
                continue
            clab = normalize_label(child.label)
            hit = bool(droppable_labels and clab in droppable_labels)
            if label == "ADJP" and clab.startswith("RB"):
                hit = True
            if hit and droppable(child):
                drops.add(idx)
        return drops

    def walk(nd: ConstNode) -> None:
        nonlocal cursor
        if nd.is_leaf:
            cursor += 1
            return
        label = normalize_label(nd.label)
        if language is Language.EN:
            if (
                label == "SBAR"
                and nd.children
                and normalize_label(nd.children[0].label).startswith("WH")
                and droppable(nd)
            ):
                mark_dropped(nd)
                return
            drops = child_drops_en(label, nd.children)
        else:
            drops = {
                i
                for i, c in enumerate(nd.children)
                if normalize_label(c.label) in _ZH_DROP and droppable(c)
            }
        for i, child in enumerate(nd.children):
            if i in drops:
                mark_dropped(child)
            else:
                walk(child)

    walk(tree)
    skeleton = tuple(t for t, d in zip(original, dropped) if not d)
    if not skeleton:
        raise EmptySkeletonError("empty skeleton")
    spans = _runs(dropped)
    return PruneOutcome(skeleton=skeleton, pruned_spans=spans)


def _runs(flags: list[bool]) -> tuple[Span, ...]:
    spans: list[Span] = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            spans.append(Span(start, i))
            start = None
    if start is not None:
        spans.append(Span(start, len(flags)))
    return tuple(spans)


def prune_english(tree: ConstNode, max_prunable_leaves: int = 10) -> PruneOutcome:
    return _prune(tree, Language.EN, max_prunable_leaves)


def prune_chinese(tree: ConstNode, max_prunable_leaves: int = 10) -> PruneOutcome:
    return _prune(tree, Language.ZH, max_prunable_leaves)


def tree_to_pair(
    tree: ConstNode,
    language: Language,
    id: str,
    max_prunable_leaves: int = 10,
) -> ExpansionPair:
    """Skeleton becomes X, the full yield Y, pruned runs the modifier spans."""
    language = Language(language)
    outcome = _prune(tree, language, max_prunable_leaves)
    stripped = strip_empty_categories(tree)
    assert stripped is not None  # _prune would have raised
    return ExpansionPair(
        id=id,
        language=language,
        source=outcome.skeleton,
        expansion=yield_tokens(stripped),
        modifier_spans=outcome.pruned_spans,
        provenance=Provenance.CTP,
    )
