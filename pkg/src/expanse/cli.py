"""Single executable exposing every pipeline stage as a subcommand.

Subcommands: prune, hearst, align, filter, mmp-prep, pretrain-mask, lm,
metrics, report.  Every stage is deterministic given (inputs, config, seed),
never mutates its inputs, and writes a JSON run manifest beside each named
output.  Exit codes: 0 success, 1 input or validation errors, 2 oracle
failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__, align, construct, hearst, metrics, ngram_lm, oracles, treebank
from .corpus import (
    ExpansionPair,
    Language,
    MetricReport,
    SchemaError,
    pair_to_obj,
    read_pairs,
    read_tagged,
)
from .stopwords import default_stopwords
from .templates import DEFAULT_MASK_FORMAT, DEFAULT_NULL_TOKEN, to_obj as template_to_obj


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on bad usage, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


@dataclass
class PipelineConfig:
    language: Language = Language.EN
    mask_format: str = DEFAULT_MASK_FORMAT
    null_token: str = DEFAULT_NULL_TOKEN
    seed: int = 0
    filter: construct.FilterConfig | None = None
    sampler: construct.SamplerConfig | None = None
    lm_oracle: str = "builtin"
    nli_oracle: str = "builtin"
    infill_oracle: str = "builtin"

    def __post_init__(self):
        if self.mask_format.count("{i}") != 1:
            raise SchemaError("mask_format must contain exactly one {i} placeholder")

    @staticmethod
    def load(path: str | None) -> "PipelineConfig":
        if path is None:
            return PipelineConfig()
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        oracle_cfg = obj.get("oracles", {})
        return PipelineConfig(
            language=Language(obj.get("language", "en")),
            mask_format=obj.get("mask_format", DEFAULT_MASK_FORMAT),
            null_token=obj.get("null_token", DEFAULT_NULL_TOKEN),
            seed=int(obj.get("seed", 0)),
            filter=construct.FilterConfig.from_obj(obj["filter"]) if "filter" in obj else None,
            sampler=construct.SamplerConfig.from_obj(obj["sampler"]) if "sampler" in obj else None,
            lm_oracle=oracle_cfg.get("lm", "builtin"),
            nli_oracle=oracle_cfg.get("nli", "builtin"),
            infill_oracle=oracle_cfg.get("infill", "builtin"),
        )


# -- plumbing -------------------------------------------------------------------


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


def _open_out(path: str):
    return nullcontext(sys.stdout) if path == "-" else open(path, "w", encoding="utf-8")


def _write_manifest(
    output_path: str,
    subcommand: str,
    effective_config: dict[str, Any],
    seed: int,
    records_in: int,
    records_out: int,
    records_rejected: int,
) -> None:
    if output_path == "-":
        return
    blob = json.dumps(effective_config, sort_keys=True, ensure_ascii=False).encode("utf-8")
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": seed,
        "records_in": records_in,
        "records_out": records_out,
        "records_rejected": records_rejected,
    }
    Path(output_path + ".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8"
    )


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    """Order-preserving map with a bounded worker pool."""
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("EXPANSE_JOBS", "1")))
    except ValueError:
        return 1


def _resolve_lm(spec: str, fallback_corpus: Callable[[], list]):
    if spec == "builtin":
        return oracles.NgramLmScorer(ngram_lm.train(fallback_corpus()))
    if spec.startswith("builtin:"):
        with open(spec.split(":", 1)[1], encoding="utf-8") as fh:
            return oracles.NgramLmScorer(ngram_lm.load(fh))
    return oracles.ExternalScorer("lm", spec)


def _resolve_infill(spec: str, fallback_corpus: Callable[[], list], mask_format: str):
    if spec == "builtin":
        return oracles.NgramInfillScorer(ngram_lm.train(fallback_corpus()))
    if spec.startswith("builtin:"):
        with open(spec.split(":", 1)[1], encoding="utf-8") as fh:
            return oracles.NgramInfillScorer(ngram_lm.load(fh))
    return oracles.ExternalScorer("infill", spec, mask_format)


def _resolve_nli(spec: str, language: Language):
    if spec == "builtin":
        return oracles.OverlapNliScorer(default_stopwords(language))
    return oracles.ExternalScorer("nli", spec)


def _count_line(subcommand: str, n_in: int, n_out: int, n_rej: int) -> None:
    print(f"{subcommand}: {n_in} records in, {n_out} out, {n_rej} rejected", file=sys.stderr)


def _opt(args, name: str, fallback):
    value = getattr(args, name, None)
    return fallback if value is None else value


# -- subcommands ------------------------------------------------------------------


def _cmd_prune(args, cfg: PipelineConfig) -> int:
    lang = Language(_opt(args, "lang", cfg.language))
    lines = [ln for ln in _read_lines(args.input) if ln.strip()]
    rejected = 0

    def one(numbered: tuple[int, str]) -> ExpansionPair | None:
        line_no, line = numbered
        if line.lstrip().startswith("{"):
            try:
                obj = json.loads(line)
                rec_id, tree_text = str(obj["id"]), obj["tree"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise SchemaError(f"bad tree record: {e}", line_no) from e
        else:
            rec_id, tree_text = f"t{line_no}", line
        tree = treebank.parse_tree(tree_text)
        try:
            return treebank.tree_to_pair(tree, lang, rec_id, args.max_prunable_leaves)
        except treebank.EmptySkeletonError:
            return None

    results = _pmap(one, list(enumerate(lines, start=1)), args.jobs)
    with _open_out(args.output) as out:
        for pair in results:
            if pair is None:
                rejected += 1
                continue
            out.write(json.dumps(pair_to_obj(pair), ensure_ascii=False) + "\n")
    effective = {"lang": lang.value, "max_prunable_leaves": args.max_prunable_leaves}
    _write_manifest(args.output, "prune", effective, cfg.seed,
                    len(lines), len(lines) - rejected, rejected)
    _count_line("prune", len(lines), len(lines) - rejected, rejected)
    return 0


def _cmd_hearst(args, cfg: PipelineConfig) -> int:
    lang = Language(_opt(args, "lang", cfg.language))
    records = read_tagged(_read_lines(args.input))
    if args.patterns:
        with open(args.patterns, encoding="utf-8") as fh:
            patterns = hearst.read_patterns(fh)
    else:
        patterns = hearst.builtin_patterns()

    def one(record):
        pairs = []
        for j, match in enumerate(hearst.find_matches(record, patterns), start=1):
            try:
                pairs.append(hearst.match_to_pair(record, match, f"{record.id}-m{j}", lang))
            except hearst.HearstError:
                continue
        return pairs

    results = _pmap(one, records, args.jobs)
    n_out = 0
    with _open_out(args.output) as out:
        for pairs in results:
            for pair in pairs:
                out.write(json.dumps(pair_to_obj(pair), ensure_ascii=False) + "\n")
                n_out += 1
    effective = {"lang": lang.value, "patterns": bool(args.patterns)}
    _write_manifest(args.output, "hearst", effective, cfg.seed, len(records), n_out, 0)
    _count_line("hearst", len(records), n_out, 0)
    return 0


def _cmd_align(args, cfg: PipelineConfig) -> int:
    mask_format = _opt(args, "mask_format", cfg.mask_format)
    null_token = _opt(args, "null_token", cfg.null_token)
    pairs = read_pairs(_read_lines(args.input))
    rejected = 0

    def canonical(pair: ExpansionPair) -> ExpansionPair | None:
        if pair.modifier_spans:
            return pair
        try:
            return align.pair_from_alignment(
                pair.source, pair.expansion, pair.id, pair.language, pair.provenance
            )
        except align.NotSubsequenceError:
            return None

    results = _pmap(canonical, pairs, args.jobs)
    n_out = 0
    with _open_out(args.output) as out:
        for pair in results:
            if pair is None:
                rejected += 1
                continue
            if args.emit == "pairs":
                obj = pair_to_obj(pair)
            elif args.emit == "joint":
                obj = {"id": pair.id}
                obj.update(
                    template_to_obj(align.joint_format(pair, mask_format, null_token), mask_format)
                )
            else:
                obj = {"id": pair.id}
                obj.update(template_to_obj(align.pipelined_format(pair, mask_format), mask_format))
            out.write(json.dumps(obj, ensure_ascii=False) + "\n")
            n_out += 1
    effective = {"emit": args.emit, "mask_format": mask_format, "null_token": null_token}
    _write_manifest(args.output, "align", effective, cfg.seed, len(pairs), n_out, rejected)
    _count_line("align", len(pairs), n_out, rejected)
    return 0


def _cmd_filter(args, cfg: PipelineConfig) -> int:
    lang = Language(_opt(args, "lang", cfg.language))
    if args.filter_config:
        fcfg = construct.FilterConfig.from_obj(
            json.loads(Path(args.filter_config).read_text(encoding="utf-8"))
        )
    elif cfg.filter is not None:
        fcfg = cfg.filter
    elif getattr(args, "config", None):
        # `filter --config filters.json` may name a bare FilterConfig file
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        try:
            fcfg = construct.FilterConfig.from_obj(raw)
        except TypeError:
            fcfg = construct.FilterConfig.for_language(lang)
    else:
        fcfg = construct.FilterConfig.for_language(lang)
    pairs = read_pairs(_read_lines(args.input))
    lm = _resolve_lm(_opt(args, "lm_oracle", cfg.lm_oracle),
                     lambda: [p.expansion for p in pairs])
    nli = _resolve_nli(_opt(args, "nli_oracle", cfg.nli_oracle), lang)

    verdicts = [(pair, construct.apply_filters(pair, fcfg, lm, nli)) for pair in pairs]
    kept = 0
    with _open_out(args.output) as out:
        for pair, verdict in verdicts:
            if verdict.keep:
                out.write(json.dumps(pair_to_obj(pair), ensure_ascii=False) + "\n")
                kept += 1
    if args.rejects:
        with open(args.rejects, "w", encoding="utf-8") as rej:
            for pair, verdict in verdicts:
                if not verdict.keep:
                    rej.write(json.dumps(
                        {"id": pair.id, "keep": False,
                         "failed_filters": list(verdict.failed_filters)}) + "\n")
    effective = {"filter": fcfg.to_obj(), "lang": lang.value}
    _write_manifest(args.output, "filter", effective, cfg.seed,
                    len(pairs), kept, len(pairs) - kept)
    _count_line("filter", len(pairs), kept, len(pairs) - kept)
    return 0


def _cmd_mmp_prep(args, cfg: PipelineConfig) -> int:
    seed = _opt(args, "seed", cfg.seed)
    mask_format = _opt(args, "mask_format", cfg.mask_format)
    k_min, k_max = _parse_range(args.k)
    base = cfg.sampler or construct.SamplerConfig()
    scfg = construct.SamplerConfig(
        k_min=k_min,
        k_max=k_max,
        repeats=_opt(args, "repeats", base.repeats),
        anchor_weight=base.anchor_weight,
        base_weight=base.base_weight,
        seed=seed,
        anchor_tag_prefixes=base.anchor_tag_prefixes,
    )
    records = read_tagged(_read_lines(args.input))
    rejected = 0

    def one(record):
        try:
            return construct.sample_mmp_templates(record, scfg, mask_format)
        except ValueError:
            return None

    results = _pmap(one, records, args.jobs)
    n_out = 0
    with _open_out(args.output) as out:
        for record, templates in zip(records, results):
            if templates is None:
                rejected += 1
                continue
            for r, template in enumerate(templates, start=1):
                obj = {"id": f"{record.id}-s{r}"}
                obj.update(template_to_obj(template, mask_format))
                out.write(json.dumps(obj, ensure_ascii=False) + "\n")
                n_out += 1
    effective = {"sampler": scfg.to_obj(), "mask_format": mask_format}
    _write_manifest(args.output, "mmp-prep", effective, seed, len(records), n_out, rejected)
    _count_line("mmp-prep", len(records), n_out, rejected)
    return 0


def _cmd_pretrain_mask(args, cfg: PipelineConfig) -> int:
    seed = _opt(args, "seed", cfg.seed)
    mask_format = _opt(args, "mask_format", cfg.mask_format)
    lo, hi = _parse_range(args.span_len)
    records = read_tagged(_read_lines(args.input))

    def one(record):
        return construct.mask_for_pretraining(record, args.rate, (lo, hi), seed)

    results = _pmap(one, records, args.jobs)
    unmasked = 0
    with _open_out(args.output) as out:
        for record, template in zip(records, results):
            if not template.target:
                unmasked += 1
            obj = {"id": record.id}
            obj.update(template_to_obj(template, mask_format))
            out.write(json.dumps(obj, ensure_ascii=False) + "\n")
    if unmasked:
        print(f"pretrain-mask: {unmasked} records yielded no masks", file=sys.stderr)
    effective = {"rate": args.rate, "span_len": [lo, hi], "mask_format": mask_format}
    _write_manifest(args.output, "pretrain-mask", effective, seed,
                    len(records), len(records), 0)
    _count_line("pretrain-mask", len(records), len(records), 0)
    return 0


def _cmd_lm(args, cfg: PipelineConfig) -> int:
    corpus: list[tuple[str, ...]] = []
    for line_no, line in enumerate(_read_lines(args.corpus), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("{"):
            try:
                obj = json.loads(line)
                corpus.append(tuple(obj.get("expansion") or obj["tokens"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise SchemaError(f"bad corpus record: {e}", line_no) from e
        else:
            corpus.append(tuple(line.split()))
    model = ngram_lm.train(corpus, order=args.order, add_k=args.add_k)
    with _open_out(args.out) as fh:
        ngram_lm.save(model, fh)
        fh.write("\n")
    effective = {"order": args.order, "add_k": args.add_k}
    _write_manifest(args.out, "lm", effective, cfg.seed, len(corpus), 1, 0)
    _count_line("lm train", len(corpus), 1, 0)
    return 0


def _cmd_metrics(args, cfg: PipelineConfig) -> int:
    lang = Language(_opt(args, "lang", cfg.language))
    mask_format = _opt(args, "mask_format", cfg.mask_format)
    with open(args.sys, encoding="utf-8") as fh:
        sys_pairs = read_pairs(fh)
    with open(args.ref, encoding="utf-8") as fh:
        ref_pairs = read_pairs(fh)

    def ref_corpus() -> list:
        return [p.expansion for p in ref_pairs]

    lm_spec = _opt(args, "lm_oracle", cfg.lm_oracle)
    nli_spec = _opt(args, "nli_oracle", cfg.nli_oracle)
    infill_spec = _opt(args, "infill_oracle", cfg.infill_oracle)
    lm = None if lm_spec == "none" else _resolve_lm(lm_spec, ref_corpus)
    nli = None if nli_spec == "none" else _resolve_nli(nli_spec, lang)
    infill = None if infill_spec == "none" else _resolve_infill(infill_spec, ref_corpus, mask_format)
    report = metrics.evaluate_corpus(
        sys_pairs, ref_pairs, lm=lm, nli=nli, infill=infill, mask_format=mask_format
    )
    with _open_out(args.report) as fh:
        json.dump(report.to_obj(), fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    effective = {
        "lm_oracle": lm_spec,
        "nli_oracle": nli_spec,
        "infill_oracle": infill_spec,
        "mask_format": mask_format,
        "lang": lang.value,
    }
    _write_manifest(args.report, "metrics", effective, cfg.seed,
                    len(sys_pairs), len(report.per_pair), 0)
    _count_line("metrics", len(sys_pairs), len(report.per_pair), 0)
    return 0


_REPORT_COLUMNS = ("Len", "N-Pos", "PPL", "Nli-E (%)", "Info-Gain", "BLEU (%)", "Fidelity (%)")


def render_report(report: MetricReport) -> str:
    """Corpus-level table in the conventional column order."""
    if not report.per_pair:
        raise ValueError("empty report")
    c = report.corpus

    def fmt(value: float | None, percent: bool = False) -> str:
        if value is None:
            return "-"
        return f"{value * 100:.2f}" if percent else f"{value:.2f}"

    values = (
        fmt(c.mean_len),
        fmt(c.mean_n_pos),
        fmt(c.mean_ppl),
        fmt(c.mean_nli_e, percent=True),
        fmt(c.mean_info_gain),
        fmt(c.bleu, percent=True),
        fmt(c.fidelity_rate, percent=True),
    )
    widths = [max(len(h), len(v)) for h, v in zip(_REPORT_COLUMNS, values)]
    header = "  ".join(h.rjust(w) for h, w in zip(_REPORT_COLUMNS, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return f"{header}\n{'-' * len(header)}\n{row}\n({len(report.per_pair)} pairs)\n"


def _cmd_report(args, cfg: PipelineConfig) -> int:
    obj = json.loads(Path(args.report).read_text(encoding="utf-8"))
    try:
        report = MetricReport.from_obj(obj)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"not a metrics report: {e}") from e
    sys.stdout.write(render_report(report))
    return 0


# -- argument wiring ------------------------------------------------------------------


def _parse_range(spec: str) -> tuple[int, int]:
    lo, _, hi = spec.partition("..")
    try:
        return int(lo), int(hi or lo)
    except ValueError as e:
        raise UsageError(f"bad range {spec!r}; expected LO..HI") from e


def build_parser() -> _Parser:
    parser = _Parser(prog="expanse", description=__doc__)
    parser.add_argument("--config", default=None, help="pipeline config JSON; flags override it")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=_default_jobs())
    sub = parser.add_subparsers(dest="subcommand")

    def common(p: _Parser, io: bool = True) -> None:
        # SUPPRESS keeps subcommand-position flags from clobbering the globals
        p.add_argument("--config", default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
        if io:
            p.add_argument("--input", default="-")
            p.add_argument("--output", default="-")

    p = sub.add_parser("prune", help="derive pairs from bracketed constituency trees")
    common(p)
    p.add_argument("--lang", choices=["en", "zh"], default=None)
    p.add_argument("--max-prunable-leaves", type=int, default=10)

    p = sub.add_parser("hearst", help="derive pairs from IsA constructions")
    common(p)
    p.add_argument("--lang", choices=["en", "zh"], default=None)
    p.add_argument("--patterns", default=None, help="pattern JSONL overriding the built-ins")

    p = sub.add_parser("align", help="canonicalize spans / emit locate-and-infill formats")
    common(p)
    p.add_argument("--emit", choices=["pairs", "joint", "pipelined"], default="pairs")
    p.add_argument("--mask-format", default=None)
    p.add_argument("--null-token", default=None)

    p = sub.add_parser("filter", help="apply the data filters")
    common(p)
    p.add_argument("--lang", choices=["en", "zh"], default=None)
    p.add_argument("--filter-config", default=None, help="FilterConfig JSON file")
    p.add_argument("--rejects", default=None, help="write rejected ids and verdicts here")
    p.add_argument("--lm-oracle", default=None)
    p.add_argument("--nli-oracle", default=None)

    p = sub.add_parser("mmp-prep", help="sample mask templates for modifier prediction")
    common(p)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--k", default="3..5", help="slot count range, e.g. 3..5")
    p.add_argument("--mask-format", default=None)

    p = sub.add_parser("pretrain-mask", help="mask spans for infill pretraining")
    common(p)
    p.add_argument("--rate", type=float, default=0.25)
    p.add_argument("--span-len", default="1..10")
    p.add_argument("--mask-format", default=None)

    p = sub.add_parser("lm", help="built-in n-gram language model")
    common(p, io=False)
    p.add_argument("lm_command", choices=["train"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--add-k", type=float, default=0.01)

    p = sub.add_parser("metrics", help="evaluate a system corpus against references")
    common(p, io=False)
    p.add_argument("--sys", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--lang", choices=["en", "zh"], default=None)
    p.add_argument("--lm-oracle", default=None)
    p.add_argument("--nli-oracle", default=None)
    p.add_argument("--infill-oracle", default=None)
    p.add_argument("--mask-format", default=None)

    p = sub.add_parser("report", help="render a metrics report as a table")
    common(p, io=False)
    p.add_argument("report")

    return parser


_COMMANDS = {
    "prune": _cmd_prune,
    "hearst": _cmd_hearst,
    "align": _cmd_align,
    "filter": _cmd_filter,
    "mmp-prep": _cmd_mmp_prep,
    "pretrain-mask": _cmd_pretrain_mask,
    "lm": _cmd_lm,
    "metrics": _cmd_metrics,
    "report": _cmd_report,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.subcommand:
            raise UsageError(parser.format_usage())
        cfg = PipelineConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return _COMMANDS[args.subcommand](args, cfg)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except oracles.OracleError as e:
        print(f"expanse: oracle failure: {e}", file=sys.stderr)
        return 2
    except (SchemaError, ValueError, OSError) as e:
        print(f"expanse: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
