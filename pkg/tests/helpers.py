"""Shared test data: canonical example pairs, trees, and random-pair generators."""

from __future__ import annotations

import random

from expanse.corpus import ExpansionPair, Language, Provenance, Span

FIG1_TREE = (
    "(ROOT (S (NP (PRP i)) (VP (ADVP (RB truly)) (VBP love) (NP (PRP you))"
    " (PP (IN with) (NP (DT all) (PRP$ my) (NN heart))))))"
)

TABLE1_X = tuple("my favorite sport is basketball".split())
TABLE1_Y = tuple(
    "when it comes to sports , my absolute favorite sport of all time is basketball "
    ", and i 'm a huge fan of james".split()
)
TABLE1_SPANS = (Span(0, 6), Span(7, 8), Span(10, 13), Span(15, 24))

# the informative expansion used for the info-gain templates
INFO_X = tuple("my favorite sport is basketball".split())
INFO_Y = tuple(
    "besides tennis , my personal favorite sport of all time is basketball "
    ", and i 'm a huge fan .".split()
)

MEAT_TOKENS = tuple("we offer our buyers a wide range of meat , including pork , beef , and lamb .".split())
MEAT_POS = tuple("PRP VBP PRP$ NNS DT JJ NN IN NN , VBG NN , NN , CC NN .".split())

# the pipelined-format source from the Chinese masked-prediction example,
# segmented so the six mask positions sit exactly before the anchors
ZH_SOURCE = ("林丹在", "伦敦奥运会", "击败了", "李宗伟", "，", "获得了", "奥运冠军")
ZH_MODIFIERS = ("而立之年的", "万众瞩目的", "一路过关斩将", "实力强劲的", "如愿以偿地", "梦寐以求的")


def zh_expansion_pair() -> ExpansionPair:
    """Source tokens interleaved with one modifier before each anchor."""
    y: list[str] = []
    spans: list[Span] = []
    mods = iter(ZH_MODIFIERS)
    for tok in ZH_SOURCE:
        if tok != "，":
            mod = next(mods)
            spans.append(Span(len(y), len(y) + 1))
            y.append(mod)
        y.append(tok)
    return ExpansionPair(
        id="zh-mmp",
        language=Language.ZH,
        source=ZH_SOURCE,
        expansion=tuple(y),
        modifier_spans=tuple(spans),
        provenance=Provenance.MMP,
    )


_WORDS = ["a", "b", "c", "d", "e", "f", "g", "red", "dog", "ran", "x1", "x2"]


def random_pair(rng: random.Random, max_x: int = 8, max_run: int = 4) -> ExpansionPair:
    """A random valid pair built by inserting runs between source tokens."""
    x = [rng.choice(_WORDS) for _ in range(rng.randint(1, max_x))]
    y: list[str] = []
    spans: list[Span] = []
    slots = list(range(len(x) + 1))
    n_insert = rng.randint(0, min(3, len(slots)))
    insert_at = sorted(rng.sample(slots, n_insert))
    for i, tok in enumerate(x):
        if insert_at and insert_at[0] == i:
            insert_at.pop(0)
            run = [rng.choice(_WORDS) for _ in range(rng.randint(1, max_run))]
            spans.append(Span(len(y), len(y) + len(run)))
            y.extend(run)
        y.append(tok)
    if insert_at:
        run = [rng.choice(_WORDS) for _ in range(rng.randint(1, max_run))]
        spans.append(Span(len(y), len(y) + len(run)))
        y.extend(run)
    return ExpansionPair(
        id=f"r{rng.randint(0, 10**9)}",
        language=Language.EN,
        source=tuple(x),
        expansion=tuple(y),
        modifier_spans=tuple(spans),
        provenance=Provenance.UNKNOWN,
    )
