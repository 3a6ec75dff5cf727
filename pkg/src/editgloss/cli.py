"""Command-line pipeline: preprocess, extract, explain, evaluate, report.

Stages exchange plain JSONL files so every intermediate artifact can be
inspected or hand-edited.  Exit codes: 0 success, 1 usage or configuration
error, 2 data error, 3 provider error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from editgloss import atomic, corpus, evaluation, llm
from editgloss.diffs import coarse_edits
from editgloss.tokenization import Lexicon, tokenize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    language: str = "de"
    endpoint: str = ""
    model_id: str = "mock"
    credential_env: str = "EDITGLOSS_API_KEY"
    extract_temperature: float = llm.EXTRACT_TEMPERATURE
    explain_temperature: float = llm.EXPLAIN_TEMPERATURE
    explain_top_p: float = llm.EXPLAIN_TOP_P
    cache_dir: str | None = None
    lexicon: str | None = None
    extract_template: str | None = None
    explain_template: str | None = None
    concurrency: int = 4

    @staticmethod
    def load(path):
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError("cannot read config: %s" % exc, EXIT_USAGE)
        except ValueError as exc:
            raise CliError("invalid config JSON: %s" % exc, EXIT_USAGE)
        known = {f for f in RunConfig.__dataclass_fields__}
        cfg = RunConfig(**{k: v for k, v in raw.items() if k in known})
        cfg.validate()
        return cfg

    def validate(self):
        if self.language not in ("de", "zh"):
            raise CliError("config: language must be de or zh", EXIT_USAGE)
        if self.extract_temperature < 0 or self.explain_temperature < 0:
            raise CliError("config: temperatures must be >= 0", EXIT_USAGE)
        if not 0 < self.explain_top_p <= 1:
            raise CliError("config: explain_top_p must be in (0, 1]", EXIT_USAGE)
        if self.concurrency < 1:
            raise CliError("config: concurrency must be >= 1", EXIT_USAGE)
        for label, path in (("lexicon", self.lexicon),
                            ("extract_template", self.extract_template),
                            ("explain_template", self.explain_template)):
            if path and not Path(path).exists():
                raise CliError("config: %s file not found: %s" % (label, path), EXIT_USAGE)
        return self

    def load_lexicon(self):
        if self.lexicon:
            return Lexicon.from_file(self.lexicon)
        if self.language == "zh":
            return Lexicon.from_file(llm.ASSET_DIR / "lexicon_zh.txt")
        return None


def _load_pairs(path, fmt="jsonl"):
    try:
        return corpus.load_pairs(path, fmt)
    except OSError as exc:
        raise CliError("cannot read %s: %s" % (path, exc), EXIT_USAGE)
    except corpus.CorpusError as exc:
        raise CliError(str(exc), EXIT_DATA)


def _pair_record(pair):
    rec = {"id": pair.id, "lang": pair.lang, "source": pair.source, "target": pair.target}
    if pair.gold_edits is not None:
        rec["gold_edits"] = [list(e.key()) for e in pair.gold_edits]
    if pair.cefr:
        rec["cefr"] = pair.cefr
    return rec


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _read_jsonl(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("cannot read %s: %s" % (path, exc), EXIT_USAGE)
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except ValueError as exc:
            raise CliError("%s line %d: invalid JSON: %s" % (path, lineno, exc), EXIT_DATA)
    return records


def _edits_from_record(rec, field, where):
    edits = []
    for item in rec.get(field) or []:
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise CliError("%s: bad edit %r" % (where, item), EXIT_DATA)
        edits.append(atomic.AtomicEdit(*item))
    return edits


def _provider(cfg, args):
    if getattr(args, "mock_transcript", None):
        replies = [r["reply"] for r in _read_jsonl(args.mock_transcript)]
        return llm.MockProvider(replies)
    if not cfg.endpoint:
        raise CliError("no provider endpoint configured (and no --mock-transcript)",
                       EXIT_USAGE)
    return llm.HTTPProvider(cfg.endpoint, cfg.credential_env)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_preprocess(args, cfg):
    pairs = _load_pairs(args.input, args.format)
    pairs = [p for p in pairs if p.lang == cfg.language]
    lexicon = cfg.load_lexicon()
    fcfg = corpus.FilterConfig(lexicon=lexicon)
    if cfg.language == "de":
        kept = corpus.filter_german(pairs, fcfg)
    else:
        kept = corpus.filter_chinese(pairs, fcfg)
    _write_jsonl(args.output, (_pair_record(p) for p in kept))
    stats = corpus.corpus_stats(kept, lexicon=lexicon)
    stats_rec = {
        "pair_count": stats.pair_count,
        "edit_count": stats.edit_count,
        "mean_edits_per_pair": round(stats.mean_edits_per_pair, 2),
        "token_length_histogram": stats.token_length_histogram,
    }
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump(stats_rec, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    print("pairs: %d  gold edits: %d  mean edits/pair: %.2f" % (
        stats.pair_count, stats.edit_count, stats.mean_edits_per_pair))
    return EXIT_OK


def _extract_rule(pair, lexicon):
    src = tokenize(pair.source, pair.lang, lexicon=lexicon)
    tgt = tokenize(pair.target, pair.lang, lexicon=lexicon)
    coarse = coarse_edits(src, tgt)
    edits = atomic.refine(src, tgt, coarse)
    feas = atomic.apply_edits(src, pair.target, edits)
    return llm.ExtractionResult(tuple(edits), (), feas)


def cmd_extract(args, cfg):
    pairs = _load_pairs(args.input)
    lexicon = cfg.load_lexicon()
    results = {}
    if args.mode == "rule":
        for p in pairs:
            results[p.id] = _extract_rule(p, lexicon)
    else:
        provider = _provider(cfg, args)
        template = llm.load_template("extract", cfg.language, cfg.extract_template)

        def one(p):
            return p.id, llm.extract_edits_llm(
                p, template, provider, cfg.model_id, cache_dir=cfg.cache_dir,
                lexicon=lexicon, temperature=cfg.extract_temperature,
                log_path=args.log, base_delay=args.retry_delay)

        workers = 1 if getattr(args, "mock_transcript", None) else cfg.concurrency
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for pid, res in pool.map(one, pairs):
                results[pid] = res
    out = []
    for p in pairs:
        res = results[p.id]
        rec = _pair_record(p)
        rec["edits"] = [list(e.key()) for e in res.edits]
        rec["feasibility"] = res.feasibility.status
        if res.warnings:
            rec["warnings"] = list(res.warnings)
        out.append(rec)
    _write_jsonl(args.output, out)
    print("extracted edits for %d pairs" % len(out))
    return EXIT_OK


def cmd_explain(args, cfg):
    records = _read_jsonl(args.input)
    provider = _provider(cfg, args)
    template = llm.load_template("explain", cfg.language, cfg.explain_template)
    pairs = []
    for rec in records:
        pair = corpus.SentencePair(str(rec["id"]), rec["lang"], rec["source"], rec["target"])
        edits = _edits_from_record(rec, "edits", "pair %s" % pair.id)
        pairs.append((rec, pair, edits))

    def one(item):
        rec, pair, edits = item
        if not edits:
            return rec, pair, edits, []
        try:
            xs = llm.explain_edits(
                pair, edits, template, provider, cfg.model_id,
                cache_dir=cfg.cache_dir, temperature=cfg.explain_temperature,
                top_p=cfg.explain_top_p, log_path=args.log,
                base_delay=args.retry_delay)
        except atomic.ParseError as exc:
            return rec, pair, edits, exc
        return rec, pair, edits, xs

    workers = 1 if getattr(args, "mock_transcript", None) else cfg.concurrency
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(one, pairs))
    out = []
    failures = 0
    for rec, pair, edits, xs in outcomes:
        entry = dict(rec)
        if isinstance(xs, atomic.ParseError):
            failures += 1
            entry["explanations"] = []
            entry["error"] = str(xs)
            entry["raw_reply"] = xs.raw
            print("warning: %s" % xs, file=sys.stderr)
        else:
            entry["explanations"] = [{
                "edit_desc": x.edit_desc,
                "reason": x.reason,
                "error_type": x.error_type,
                "matched_edit": list(x.matched_edit.key()) if x.matched_edit else None,
            } for x in xs]
        out.append(entry)
    _write_jsonl(args.output, out)
    print("explained %d pairs (%d failures)" % (len(out), failures))
    return EXIT_OK


def cmd_eval_edits(args, cfg):
    pred_records = {str(r["id"]): r for r in _read_jsonl(args.predictions)}
    gold_pairs = _load_pairs(args.gold)
    lexicon = cfg.load_lexicon()
    adjudicated = {}
    if args.adjudications:
        try:
            adjudicated = evaluation.load_adjudications(args.adjudications)
        except evaluation.EvalError as exc:
            raise CliError(str(exc), EXIT_DATA)
    total = evaluation.empty_match_report()
    queue_rows = []
    for pair in gold_pairs:
        if pair.gold_edits is None:
            raise CliError("pair %s has no gold_edits" % pair.id, EXIT_DATA)
        rec = pred_records.get(pair.id)
        if rec is None:
            raise CliError("no predictions for pair %s" % pair.id, EXIT_DATA)
        predicted = _edits_from_record(rec, "edits", "pair %s" % pair.id)
        try:
            report = evaluation.match_edits(
                predicted, list(pair.gold_edits), pair, lexicon=lexicon,
                adjudicated=adjudicated.get(pair.id))
        except evaluation.EvalError as exc:
            raise CliError(str(exc), EXIT_DATA)
        total = total.merged(report)
        queue_rows.extend(
            {"pair_id": pair.id, "edit": list(e.key()), "status": status}
            for e, status in report.review_queue)
    summary = {
        "tp": total.tp, "fp": total.fp, "fn": total.fn,
        "precision": round(total.precision, 3),
        "recall": round(total.recall, 3),
        "f1": round(total.f1, 3),
    }
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.queue:
        _write_jsonl(args.queue, queue_rows)
    print("P %.3f  R %.3f  F1 %.3f  (tp=%d fp=%d fn=%d, %d queued for review)" % (
        total.precision, total.recall, total.f1,
        total.tp, total.fp, total.fn, len(queue_rows)))
    return EXIT_OK


def cmd_eval_coverage(args, cfg):
    records = _read_jsonl(args.input)
    rows = []
    matched = missing = halluc = total_edits = 0
    for rec in records:
        where = "pair %s" % rec.get("id")
        edits = _edits_from_record(rec, "edits", where)
        xs = [llm.Explanation(x.get("edit_desc", ""), x.get("reason", ""),
                              x.get("error_type", ""), x.get("edit_desc", ""))
              for x in rec.get("explanations") or []]
        report = evaluation.coverage(edits, xs)
        matched += len(report.matched)
        missing += len(report.missing_edits)
        halluc += len(report.hallucinated_claims)
        total_edits += len(edits)
        rows.append({
            "pair_id": rec.get("id"),
            "coverage_rate": round(report.coverage_rate, 3),
            "missing_edits": [list(e.key()) for e in report.missing_edits],
            "hallucinated_claims": [list(c) for _, c in report.hallucinated_claims],
        })
    overall = matched / total_edits if total_edits else 1.0
    out = {
        "coverage_rate": round(overall, 3),
        "matched": matched,
        "missing": missing,
        "hallucinated_claims": halluc,
        "pairs": rows,
    }
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(out, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    print("coverage %.3f  (%d matched, %d missing, %d hallucinated claims)" % (
        overall, matched, missing, halluc))
    return EXIT_OK


def cmd_report(args, cfg):
    records = _read_jsonl(args.annotations)
    dual_ids = None
    if args.dual_ids:
        dual_ids = {line.strip() for line in
                    Path(args.dual_ids).read_text(encoding="utf-8").splitlines()
                    if line.strip()}
    try:
        summary = evaluation.aggregate_annotations(records, dual_ids)
    except evaluation.EvalError as exc:
        raise CliError(str(exc), EXIT_DATA)
    rows = [(label, summary.counts[label], "%.1f%%" % summary.percentages[label])
            for label in evaluation.MISTAKE_LABELS]
    rows.append(("missing_error", summary.missing_errors, ""))
    header = ("category", "count", "share")
    base = Path(args.report)
    evaluation.write_table_csv(rows, base.with_suffix(".csv"), header)
    evaluation.write_table_html(rows, base.with_suffix(".html"), header,
                                title="Annotation summary")
    payload = {
        "counts": summary.counts,
        "total_explanations": summary.total_explanations,
        "missing_errors": summary.missing_errors,
        "percentages": summary.percentages,
        "agreement": summary.agreement,
    }
    with open(base.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    print("annotations: %d explanations, %d missing errors" % (
        summary.total_explanations, summary.missing_errors))
    if summary.agreement:
        print("dual-annotator agreement: %.1f%%" % summary.agreement["rate"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="editgloss",
        description="Token-edit extraction and explanation pipeline for learner text.")
    parser.add_argument("--config", help="JSON run configuration file")
    parser.add_argument("--lang", choices=("de", "zh"), help="override config language")
    parser.add_argument("--cache-dir", help="override config cache directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="filter a corpus and emit stats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--stats", help="write corpus stats JSON here")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="extract atomic edits per pair")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mode", choices=("rule", "llm"), default="rule")
    p.add_argument("--mock-transcript", help="JSONL of scripted provider replies")
    p.add_argument("--log", help="JSONL run log path")
    p.add_argument("--retry-delay", type=float, default=1.0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("explain", help="generate explanations for extracted edits")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mock-transcript", help="JSONL of scripted provider replies")
    p.add_argument("--log", help="JSONL run log path")
    p.add_argument("--retry-delay", type=float, default=1.0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("eval-edits", help="score predicted edits against gold")
    p.add_argument("predictions")
    p.add_argument("gold")
    p.add_argument("report")
    p.add_argument("--adjudications", help="JSONL of human verdicts")
    p.add_argument("--queue", help="write the review queue JSONL here")
    p.set_defaults(func=cmd_eval_edits)

    p = sub.add_parser("eval-coverage", help="check edit/explanation coverage")
    p.add_argument("input")
    p.add_argument("report")
    p.set_defaults(func=cmd_eval_coverage)

    p = sub.add_parser("report", help="aggregate human annotation records")
    p.add_argument("annotations")
    p.add_argument("report")
    p.add_argument("--dual-ids", help="file listing dually annotated pair ids")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        overrides = {}
        if args.lang:
            overrides["language"] = args.lang
        if args.cache_dir:
            overrides["cache_dir"] = args.cache_dir
        if overrides:
            from dataclasses import replace as dc_replace
            cfg = dc_replace(cfg, **overrides).validate()
        return args.func(args, cfg)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.code
    except llm.ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except llm.ProviderError as exc:
        print("provider error: %s" % exc, file=sys.stderr)
        return EXIT_PROVIDER
    except (corpus.CorpusError, atomic.EditError, evaluation.EvalError) as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
