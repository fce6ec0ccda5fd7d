"""The automatic metric suite: fertility, BLEU, perplexity, entailment, and
information gain of expansions.

Information gain compares two infill perplexities obtained from dual templates
of the same pair.  The infill template exposes the modifiers and asks for the
source fragments; the inherent template asks for the source cold:

    infill    input  = besides tennis , <M1> personal <M2> of all time <M3> , and i 'm a huge fan .
              target = <M1> my <M2> favorite sport <M3> is basketball <M4>
    inherent  input  = <M1>
              target = my favorite sport is basketball

    info_gain = (inherent_ppl / infill_ppl) * diff_distinct

Both perplexities normalize over the non-slot target tokens only.  The
diff-distinct penalty is the mean over n in 1..4 of the fraction of distinct
modifier n-grams that never occur in the source; n-grams never cross modifier
span boundaries.  A pair that inserts nothing scores zero by convention.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

from . import align as align_mod
from .corpus import (
    CorpusMetrics,
    ExpansionPair,
    MetricReport,
    PairMetrics,
    TokenSeq,
    surface_modifiers,
)
from .templates import DEFAULT_MASK_FORMAT, InfillTemplatePair, Literal, Slot


def metric_len_npos(pair: ExpansionPair) -> tuple[int, int]:
    """Total inserted length and the number of insertion positions."""
    spans = pair.modifier_spans
    return sum(len(s) for s in spans), len(spans)


# -- BLEU -----------------------------------------------------------------------


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq]) -> float:
    """Corpus-level BLEU-4 with one reference per candidate.

    Clipped modified n-gram counts are pooled over the corpus for n = 1..4,
    combined by geometric mean, and multiplied by the brevity penalty
    exp(min(0, 1 - r/c)).  A zero pooled numerator is smoothed to 1/2^k on the
    k-th consecutive zero order; an order with a zero denominator (every
    candidate shorter than n) is dropped from the mean.
    """
    if len(candidates) != len(references):
        raise ValueError("candidate/reference count mismatch")
    if not candidates:
        raise ValueError("empty corpus")
    clipped = [0] * 5
    total = [0] * 5
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_counts = _ngrams(cand, n)
            ref_counts = _ngrams(ref, n)
            clipped[n] += sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
            total[n] += max(0, len(cand) - n + 1)
    log_sum = 0.0
    orders = 0
    zeros = 0
    for n in range(1, 5):
        if total[n] == 0:
            continue
        num: float = clipped[n]
        if num == 0:
            zeros += 1
            num = 1.0 / (2 ** zeros)
        else:
            zeros = 0
        log_sum += math.log(num / total[n])
        orders += 1
    if orders == 0:
        return 0.0
    bp = math.exp(min(0.0, 1.0 - ref_len / cand_len)) if cand_len > 0 else 0.0
    return bp * math.exp(log_sum / orders)


# -- diff-distinct ----------------------------------------------------------------


def diff_distinct(pair: ExpansionPair) -> float:
    runs = surface_modifiers(pair)
    if not runs:
        return 0.0
    source = pair.source
    result = 0.0
    defined = 0
    for n in range(1, 5):
        grams = {g for run in runs for g in _ngrams(run, n)}
        if not grams:
            continue
        source_grams = set(_ngrams(source, n))
        result += sum(1 for g in grams if g not in source_grams) / len(grams)
        defined += 1
    return result / defined if defined else 0.0


# -- info-gain ---------------------------------------------------------------------


def infill_templates_for_infogain(
    pair: ExpansionPair, mask_format: str = DEFAULT_MASK_FORMAT
) -> tuple[InfillTemplatePair, InfillTemplatePair]:
    """The dual (infill, inherent) template pair for a spanned expansion."""
    del mask_format  # symbolic; sentinels appear at rendering time
    if not pair.modifier_spans:
        raise ValueError("no modifiers")
    in_segs: list[Literal | Slot] = []
    tgt_segs: list[Literal | Slot] = []
    in_slots = tgt_slots = 0
    cursor = 0
    for span in pair.modifier_spans:
        if span.start > cursor:  # source fragment before this modifier
            in_slots += 1
            in_segs.append(Slot(in_slots))
            tgt_segs.append(Literal(pair.expansion[cursor:span.start]))
        tgt_slots += 1
        in_segs.append(Literal(pair.expansion[span.start:span.end]))
        tgt_segs.append(Slot(tgt_slots))
        cursor = span.end
    if cursor < len(pair.expansion):
        in_slots += 1
        in_segs.append(Slot(in_slots))
        tgt_segs.append(Literal(pair.expansion[cursor:]))
    infill = InfillTemplatePair(input=tuple(in_segs), target=tuple(tgt_segs))
    inherent = InfillTemplatePair(input=(Slot(1),), target=(Literal(pair.source),))
    return infill, inherent


def score_ppl(tokens: TokenSeq, lm) -> float:
    """Perplexity of a token sequence under an LM oracle."""
    if not tokens:
        raise ValueError("empty input")
    return lm.score_tokens(tuple(tokens)).perplexity


def score_nli(premise: TokenSeq, hypothesis: TokenSeq, nli) -> float:
    """Entailment probability that the premise entails the hypothesis."""
    return float(nli.entailment(tuple(premise), tuple(hypothesis)))


def info_gain(pair: ExpansionPair, infill, mask_format: str = DEFAULT_MASK_FORMAT) -> float:
    if not pair.modifier_spans:
        return 0.0
    penalty = diff_distinct(pair)
    if penalty == 0.0:
        return 0.0
    infill_t, inherent_t = infill_templates_for_infogain(pair, mask_format)
    infill_ppl = infill.score_template(infill_t, mask_format).perplexity
    inherent_ppl = infill.score_template(inherent_t, mask_format).perplexity
    return (inherent_ppl / infill_ppl) * penalty


# -- corpus evaluation ---------------------------------------------------------------


def _mean(values: Iterable[float]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def evaluate_corpus(
    system_pairs: Sequence[ExpansionPair],
    reference_pairs: Sequence[ExpansionPair],
    lm=None,
    nli=None,
    infill=None,
    mask_format: str = DEFAULT_MASK_FORMAT,
) -> MetricReport:
    """Score a system corpus against references with matching ids.

    The reference source is the task input X.  Fidelity-true outputs get
    canonical spans by minimum-gap alignment unless they arrived with spans
    over the same source.  Span metrics (len, n-pos, diff-distinct, info-gain)
    are undefined for fidelity-false outputs and excluded from the means;
    perplexity, entailment, BLEU, and the fidelity rate always count them.
    """
    if not system_pairs:
        raise ValueError("empty corpus")
    refs = {p.id: p for p in reference_pairs}
    sys_ids = [p.id for p in system_pairs]
    if len(refs) != len(reference_pairs) or len(set(sys_ids)) != len(sys_ids):
        raise ValueError("duplicate pair ids")
    orphans = sorted(set(sys_ids) ^ set(refs))
    if orphans:
        raise ValueError(f"system/reference id mismatch: {orphans}")

    rows: list[PairMetrics] = []
    for sys_pair in system_pairs:
        ref = refs[sys_pair.id]
        x, y = ref.source, sys_pair.expansion
        fidelity = align_mod.check_fidelity(x, y)
        scored: ExpansionPair | None = None
        if fidelity:
            if sys_pair.source == x and sys_pair.modifier_spans:
                scored = sys_pair
            else:
                scored = align_mod.pair_from_alignment(
                    x, y, sys_pair.id, sys_pair.language, sys_pair.provenance
                )
        length = n_pos = dd = ig = None
        if scored is not None:
            length, n_pos = metric_len_npos(scored)
            dd = diff_distinct(scored)
            if infill is not None:
                ig = info_gain(scored, infill, mask_format)
        rows.append(
            PairMetrics(
                id=sys_pair.id,
                fidelity=fidelity,
                len=length,
                n_pos=n_pos,
                ppl=score_ppl(y, lm) if lm is not None else None,
                nli_e=score_nli(y, x, nli) if nli is not None else None,
                diff_distinct=dd,
                info_gain=ig,
            )
        )

    corpus = CorpusMetrics(
        fidelity_rate=sum(r.fidelity for r in rows) / len(rows),
        mean_len=_mean(r.len for r in rows),
        mean_n_pos=_mean(r.n_pos for r in rows),
        mean_ppl=_mean(r.ppl for r in rows),
        mean_nli_e=_mean(r.nli_e for r in rows),
        mean_info_gain=_mean(r.info_gain for r in rows),
        bleu=corpus_bleu(
            [p.expansion for p in system_pairs],
            [refs[p.id].expansion for p in system_pairs],
        ),
    )
    return MetricReport(per_pair=tuple(rows), corpus=corpus)
