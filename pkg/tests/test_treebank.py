import pytest

from expanse.corpus import Language, Provenance, Span
from expanse.treebank import (
    ConstNode,
    EmptySkeletonError,
    TreeParseError,
    normalize_label,
    parse_tree,
    prune_chinese,
    prune_english,
    tree_to_pair,
    yield_tokens,
)

from helpers import FIG1_TREE


# -- independent reference pruner (string-rewriting style, used as the oracle) --


def reference_prune(node: ConstNode, lang: str, guard: int = 10) -> list[str]:
    """Recompute the skeleton by literal rule transcription, returning tokens.

    Deliberately structured differently from the implementation: it rebuilds
    token lists by concatenation instead of marking drop positions.
    """

    def leaves(n: ConstNode) -> int:
        return 1 if n.is_leaf else sum(leaves(c) for c in n.children)

    def go(n: ConstNode) -> list[str]:
        if n.is_leaf:
            return [{"-LRB-": "(", "-RRB-": ")"}.get(n.leaf_token, n.leaf_token)]
        label = normalize_label(n.label)
        kids = list(n.children)
        if lang == "zh":
            out = []
            for c in kids:
                if normalize_label(c.label) in {"DNP", "CP", "DVP", "ADVP", "QP", "LCP", "PP"} and leaves(c) <= guard:
                    continue
                out.extend(go(c))
            return out
        if label == "SBAR" and kids and normalize_label(kids[0].label).startswith("WH") and leaves(n) <= guard:
            return []
        removed = set()
        if label == "NP":
            i = 0
            while i < len(kids):
                if normalize_label(kids[i].label) == "-LRB-":
                    depth, j = 1, i + 1
                    while j < len(kids) and depth:
                        depth += normalize_label(kids[j].label) == "-LRB-"
                        depth -= normalize_label(kids[j].label) == "-RRB-"
                        j += 1
                    if depth == 0 and sum(leaves(kids[k]) for k in range(i, j)) <= guard:
                        removed.update(range(i, j))
                        i = j
                        continue
                i += 1
        drop_labels = {
            "S": {"PP", "ADVP"},
            "VP": {"PP", "ADVP"},
            "NP": {"ADJP", "JJ", "CD", "PP"},
        }.get(label, set())
        out = []
        for i, c in enumerate(kids):
            cl = normalize_label(c.label)
            if i in removed:
                continue
            if cl in drop_labels and leaves(c) <= guard:
                continue
            if label == "ADJP" and cl.startswith("RB") and leaves(c) <= guard:
                continue
            out.extend(go(c))
        return out

    return go(node)


# -- parsing ----------------------------------------------------------------


def test_parse_minimal_tree():
    tree = parse_tree("(ROOT (S (NP (PRP i)) (VP (VBP love) (NP (PRP you)))))")
    assert yield_tokens(tree) == ("i", "love", "you")
    assert tree.label == "ROOT"


def test_parse_unbalanced():
    with pytest.raises(TreeParseError, match="unbalanced parentheses"):
        parse_tree("(S (NP (PRP i))")


def test_parse_trailing_garbage():
    with pytest.raises(TreeParseError, match="unbalanced"):
        parse_tree("(S (NN dog)))")


def test_parse_empty_label_and_empty_leaf():
    with pytest.raises(TreeParseError, match="empty label"):
        parse_tree("( (NN dog))")
    with pytest.raises(TreeParseError, match="zero tokens"):
        parse_tree("(S (NN))")


def test_parse_error_reports_byte_offset():
    try:
        parse_tree("(S (NP (PRP i))")
    except TreeParseError as e:
        assert e.offset == 0
    else:
        pytest.fail("no error raised")


def test_yield_single_leaf_and_escapes():
    assert yield_tokens(parse_tree("(NN dog)")) == ("dog",)
    assert yield_tokens(parse_tree("(-LRB- -LRB-)")) == ("(",)
    assert yield_tokens(parse_tree("(-RRB- -RRB-)")) == (")",)


def test_figure1_yield():
    assert yield_tokens(parse_tree(FIG1_TREE)) == (
        "i", "truly", "love", "you", "with", "all", "my", "heart",
    )


# -- english pruning -----------------------------------------------------------


def test_figure1_prune_golden():
    out = prune_english(parse_tree(FIG1_TREE))
    assert out.skeleton == ("i", "love", "you")
    assert out.pruned_spans == (Span(1, 2), Span(4, 8))


def test_nothing_prunable_is_identity():
    tree = parse_tree("(S (NP (PRP we)) (VP (VBP eat) (NP (NN rice))))")
    out = prune_english(tree)
    assert out.skeleton == yield_tokens(tree)
    assert out.pruned_spans == ()


def _pp_with_leaves(n: int) -> str:
    inner = " ".join(f"(NN w{i})" for i in range(n - 1))
    return f"(PP (IN of) (NP {inner}))"


def test_guard_keeps_11_leaf_pp():
    tree = parse_tree(f"(S (NP (NN fact)) (VP (VBZ holds) {_pp_with_leaves(11)}))")
    out = prune_english(tree)
    assert out.pruned_spans == ()
    assert out.skeleton == yield_tokens(tree)
    # one leaf fewer and the subtree goes
    tree10 = parse_tree(f"(S (NP (NN fact)) (VP (VBZ holds) {_pp_with_leaves(10)}))")
    assert prune_english(tree10).skeleton == ("fact", "holds")


def test_guard_is_parameterizable_and_monotone():
    tree = parse_tree(f"(S (NP (NN fact)) (VP (VBZ holds) {_pp_with_leaves(11)}))")
    pruned_at = {}
    for guard in (5, 10, 11, 20):
        out = prune_english(tree, max_prunable_leaves=guard)
        dropped = set()
        for s in out.pruned_spans:
            dropped.update(range(s.start, s.end))
        pruned_at[guard] = dropped
    assert pruned_at[5] <= pruned_at[10] <= pruned_at[11] <= pruned_at[20]
    assert pruned_at[10] == set() and len(pruned_at[11]) == 11


def test_sbar_wh_clause_dropped_whole():
    tree = parse_tree(
        "(S (NP (NN man) (SBAR (WHNP (WP who)) (S (VP (VBD ran))))) (VP (VBD fell)))"
    )
    out = prune_english(tree)
    assert out.skeleton == ("man", "fell")


def test_sbar_without_wh_kept():
    tree = parse_tree("(S (NP (NN claim)) (SBAR (IN that) (S (NP (PRP we)) (VP (VBD won)))))")
    out = prune_english(tree)
    assert out.skeleton == yield_tokens(tree)


def test_np_bracket_rule_inclusive_and_unmatched():
    tree = parse_tree(
        "(S (NP (NN tea) (-LRB- -LRB-) (NN green) (-RRB- -RRB-)) (VP (VBZ helps)))"
    )
    assert prune_english(tree).skeleton == ("tea", "helps")
    unmatched = parse_tree("(S (NP (NN tea) (-LRB- -LRB-) (NN green)) (VP (VBZ helps)))")
    assert prune_english(unmatched).skeleton == yield_tokens(unmatched)


def test_np_drops_jj_cd_adjp_pp():
    tree = parse_tree(
        "(S (NP (CD three) (JJ big) (NN dogs) (PP (IN in) (NP (NN town)))) (VP (VBP bark)))"
    )
    assert prune_english(tree).skeleton == ("dogs", "bark")


def test_adjp_drops_rb_children():
    tree = parse_tree("(S (NP (NN sky)) (VP (VBZ is) (ADJP (RB very) (JJ blue))))")
    assert prune_english(tree).skeleton == ("sky", "is", "blue")


def test_label_normalization():
    assert normalize_label("NP-SBJ") == "NP"
    assert normalize_label("-LRB-") == "-LRB-"
    assert normalize_label("-NONE-") == "-NONE-"
    tree = parse_tree("(S (NP-SBJ (NN cat)) (VP (VBZ sits) (PP-LOC (IN on) (NP (NN mat)))))")
    assert prune_english(tree).skeleton == ("cat", "sits")


def test_none_leaves_dropped():
    tree = parse_tree("(S (NP (-NONE- *T*)) (VP (VBZ rains)))")
    out = prune_english(tree)
    assert out.skeleton == ("rains",)
    assert out.pruned_spans == ()  # the trace never entered the yield


def test_empty_skeleton_error():
    with pytest.raises(EmptySkeletonError):
        prune_chinese(parse_tree("(IP (PP (P 在) (NP (NN 家))))"))


# -- chinese pruning -------------------------------------------------------------


def test_chinese_advp_pruned_matches_reference():
    tree = parse_tree("(IP (NP (NR 他)) (VP (ADVP (AD 迅速)) (VV 跑) (AS 了)))")
    out = prune_chinese(tree)
    assert list(out.skeleton) == reference_prune(tree, "zh")
    assert out.skeleton == ("他", "跑", "了")


def test_chinese_no_listed_labels_identity():
    tree = parse_tree("(IP (NP (NR 他)) (VP (VV 吃) (NP (NN 饭))))")
    out = prune_chinese(tree)
    assert out.skeleton == yield_tokens(tree)
    assert out.pruned_spans == ()


def test_chinese_guard_keeps_12_leaf_cp():
    inner = " ".join(f"(NN 字{i})" for i in range(12))
    tree = parse_tree(f"(IP (NP (NN 书) (CP {inner})) (VP (VV 好)))")
    out = prune_chinese(tree)
    assert out.pruned_spans == ()
    small = parse_tree("(IP (NP (NN 书) (CP (NN 我) (VV 写))) (VP (VV 好)))")
    assert prune_chinese(small).skeleton == ("书", "好")


# -- pairs and properties ----------------------------------------------------------


def test_figure1_tree_to_pair():
    pair = tree_to_pair(parse_tree(FIG1_TREE), Language.EN, "fig1")
    assert pair.source == ("i", "love", "you")
    assert len(pair.modifier_spans) == 2
    assert pair.provenance is Provenance.CTP


def test_unprunable_tree_to_pair_identity():
    tree = parse_tree("(S (NP (PRP we)) (VP (VBP eat) (NP (NN rice))))")
    pair = tree_to_pair(tree, Language.EN, "id")
    assert pair.source == pair.expansion
    assert pair.modifier_spans == ()


FIXTURE_TREES = [
    FIG1_TREE,
    "(S (NP (DT the) (JJ old) (NN dog)) (VP (VBD slept) (PP (IN on) (NP (DT the) (NN rug)))))",
    "(S (NP (NN rain)) (VP (VBD fell) (ADVP (RB hard))))",
    "(ROOT (S (NP (CD two) (NNS cats)) (VP (VBP chase) (NP (DT a) (JJ red) (NN ball)))))",
    "(S (NP (NN fact) (SBAR (WHNP (WDT which)) (S (VP (VBZ matters))))) (VP (VBZ stands)))",
    "(S (NP (NN tea) (-LRB- -LRB-) (JJ green) (-RRB- -RRB-)) (VP (VBZ helps) (ADVP (RB greatly))))",
]


@pytest.mark.parametrize("text", FIXTURE_TREES)
def test_skeleton_matches_reference_implementation(text):
    tree = parse_tree(text)
    assert list(prune_english(tree).skeleton) == reference_prune(tree, "en")


@pytest.mark.parametrize("text", FIXTURE_TREES)
def test_reconstruction_and_subsequence_invariants(text):
    pair = tree_to_pair(parse_tree(text), Language.EN, "fx")
    # removal of spans reproduces X is enforced by the pair constructor;
    # additionally the skeleton must be a subsequence of the yield
    it = iter(pair.expansion)
    assert all(tok in it for tok in pair.source)


def _residual_tree(node: ConstNode, lang: str, guard: int = 10) -> ConstNode | None:
    """Prune structurally (keeping the tree), for the idempotence check."""

    def leaves(n):
        return 1 if n.is_leaf else sum(leaves(c) for c in n.children)

    if node.is_leaf:
        return node
    label = normalize_label(node.label)
    if (
        lang == "en"
        and label == "SBAR"
        and node.children
        and normalize_label(node.children[0].label).startswith("WH")
        and leaves(node) <= guard
    ):
        return None
    kept = []
    kids = list(node.children)
    removed = set()
    if lang == "en" and label == "NP":
        i = 0
        while i < len(kids):
            if normalize_label(kids[i].label) == "-LRB-":
                depth, j = 1, i + 1
                while j < len(kids) and depth:
                    depth += normalize_label(kids[j].label) == "-LRB-"
                    depth -= normalize_label(kids[j].label) == "-RRB-"
                    j += 1
                if depth == 0 and sum(leaves(kids[k]) for k in range(i, j)) <= guard:
                    removed.update(range(i, j))
                    i = j
                    continue
            i += 1
    for i, child in enumerate(kids):
        if i in removed:
            continue
        cl = normalize_label(child.label)
        if lang == "zh":
            if cl in {"DNP", "CP", "DVP", "ADVP", "QP", "LCP", "PP"} and leaves(child) <= guard:
                continue
        else:
            drop = {
                "S": {"PP", "ADVP"},
                "VP": {"PP", "ADVP"},
                "NP": {"ADJP", "JJ", "CD", "PP"},
            }.get(label, set())
            if cl in drop and leaves(child) <= guard:
                continue
            if label == "ADJP" and cl.startswith("RB") and leaves(child) <= guard:
                continue
        sub = _residual_tree(child, lang, guard)
        if sub is not None:
            kept.append(sub)
    if not kept:
        return None
    return ConstNode(node.label, children=tuple(kept))


@pytest.mark.parametrize("text", FIXTURE_TREES)
def test_idempotence_on_fixtures(text):
    tree = parse_tree(text)
    residual = _residual_tree(tree, "en")
    assert residual is not None
    assert yield_tokens(residual) == prune_english(tree).skeleton
    again = prune_english(residual)
    assert again.pruned_spans == ()
