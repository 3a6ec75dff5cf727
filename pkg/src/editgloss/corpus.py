"""Corpus loading, filtering, statistics, and fine-tune export.

Sentence pairs travel as JSONL (one object per line) or TSV.  Filtering
implements the language-specific cleaning rules; statistics summarize
pair and gold-edit counts for reporting.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from editgloss.atomic import AtomicEdit, EditError, apply_edits, parse_edit_lines, serialize_edits
from editgloss.tokenization import tokenize

CEFR_LEVELS = ("A1", "A2", "B1", "B2", "C1", "C2")

_TSV_COLUMNS = ("id", "lang", "source", "target", "gold_edits", "cefr")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class SentencePair:
    id: str
    lang: str
    source: str
    target: str
    gold_edits: tuple | None = None
    cefr: str | None = None

    def validate(self):
        if self.lang not in ("de", "zh"):
            raise CorpusError("pair %s: unknown lang %r" % (self.id, self.lang))
        if not self.source.strip() or not self.target.strip():
            raise CorpusError("pair %s: empty source or target" % self.id)
        if self.cefr is not None and self.cefr not in CEFR_LEVELS:
            raise CorpusError("pair %s: unknown CEFR level %r" % (self.id, self.cefr))
        return self


@dataclass(frozen=True)
class CorpusStats:
    pair_count: int
    edit_count: int
    mean_edits_per_pair: float
    token_length_histogram: dict


@dataclass(frozen=True)
class FilterConfig:
    min_tokens: int = 3
    bad_markers: tuple = ("incomp", "unreadable")
    zh_min_tokens: int = 5
    zh_max_tokens: int = 50
    lexicon: object = None
    abbreviations: object = None


def _edits_from_value(value, where):
    """Accept either a list of [op, orig, tgt] triples or serialized lines."""
    if value is None:
        return None
    edits = []
    if isinstance(value, str):
        if not value.strip():
            return None
        try:
            parsed, _ = parse_edit_lines(value.replace("|", "\n"))
        except EditError as exc:
            raise CorpusError("%s: bad gold_edits: %s" % (where, exc)) from exc
        edits = parsed
    else:
        for item in value:
            if not (isinstance(item, (list, tuple)) and len(item) == 3):
                raise CorpusError("%s: bad gold edit %r" % (where, item))
            try:
                edits.append(AtomicEdit(*item).validate())
            except EditError as exc:
                raise CorpusError("%s: bad gold edit: %s" % (where, exc)) from exc
    return tuple(edits)


def _pair_from_record(rec, where, default_id):
    try:
        source = rec["source"]
        target = rec["target"]
        lang = rec["lang"]
    except KeyError as exc:
        raise CorpusError("%s: missing field %s" % (where, exc)) from exc
    pair = SentencePair(
        id=str(rec.get("id") or default_id),
        lang=lang,
        source=source,
        target=target,
        gold_edits=_edits_from_value(rec.get("gold_edits"), where),
        cefr=rec.get("cefr") or None,
    )
    return pair.validate()


def load_pairs(path, format="jsonl"):
    """Load sentence pairs from a JSONL or TSV file."""
    if format not in ("jsonl", "tsv"):
        raise CorpusError("unknown corpus format %r" % (format,))
    pairs = []
    seen = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        where = "%s line %d" % (path, lineno)
        if format == "jsonl":
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError("%s: invalid JSON: %s" % (where, exc)) from exc
            if not isinstance(rec, dict):
                raise CorpusError("%s: expected an object" % where)
        else:
            cells = line.split("\t")
            if lineno == 1 and cells[0] == "id":
                continue  # header row
            if len(cells) < 4:
                raise CorpusError("%s: expected at least 4 TSV columns" % where)
            rec = dict(zip(_TSV_COLUMNS, cells))
            rec["cefr"] = rec.get("cefr") or None
            rec["gold_edits"] = rec.get("gold_edits") or None
        pair = _pair_from_record(rec, where, default_id=str(lineno))
        if pair.id in seen:
            raise CorpusError("%s: duplicate pair id %r" % (where, pair.id))
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


def _count_sentences_de(seq):
    return sum(1 for t in seq.texts if t in (".", "!", "?"))


def filter_german(pairs, cfg=None):
    """Drop too-short, marked-unusable, and sentence-count-mismatched pairs."""
    cfg = cfg or FilterConfig()
    kept = []
    for p in pairs:
        src = tokenize(p.source, "de", abbreviations=cfg.abbreviations)
        tgt = tokenize(p.target, "de", abbreviations=cfg.abbreviations)
        if len(src) < cfg.min_tokens or len(tgt) < cfg.min_tokens:
            continue
        texts = set(src.texts) | set(tgt.texts)
        if any(marker in texts for marker in cfg.bad_markers):
            continue
        if _count_sentences_de(src) != _count_sentences_de(tgt):
            continue
        kept.append(p)
    return kept


def filter_chinese(pairs, cfg=None):
    """Keep pairs whose source length is in range and that actually differ."""
    cfg = cfg or FilterConfig()
    kept = []
    for p in pairs:
        if p.source == p.target:
            continue
        n = len(tokenize(p.source, "zh", lexicon=cfg.lexicon))
        if not cfg.zh_min_tokens <= n <= cfg.zh_max_tokens:
            continue
        kept.append(p)
    return kept


_HIST_BUCKETS = ((1, 5), (6, 10), (11, 20), (21, 40), (41, None))


def _bucket(n):
    for lo, hi in _HIST_BUCKETS:
        if n >= lo and (hi is None or n <= hi):
            return "%d+" % lo if hi is None else "%d-%d" % (lo, hi)
    return "0"


def corpus_stats(pairs, lexicon=None):
    """Pair/edit counts, mean edits per pair, and a source-length histogram."""
    pair_count = len(pairs)
    edit_count = sum(len(p.gold_edits or ()) for p in pairs)
    hist = {}
    for p in pairs:
        n = len(tokenize(p.source, p.lang, lexicon=lexicon))
        key = _bucket(n)
        hist[key] = hist.get(key, 0) + 1
    mean = edit_count / pair_count if pair_count else 0.0
    return CorpusStats(pair_count, edit_count, mean, hist)


def export_finetune(pairs, template, path, lexicon=None):
    """Write chat-format fine-tuning records; returns the number written.

    Each record holds the rendered extraction prompt as the user turn and
    the serialized gold edits as the assistant turn.
    """
    from editgloss.diffs import coarse_edits
    from editgloss.llm import render_prompt

    records = []
    for p in pairs:
        if p.gold_edits is None:
            raise CorpusError("pair %s has no gold_edits; cannot export" % p.id)
        src = tokenize(p.source, p.lang, lexicon=lexicon)
        tgt = tokenize(p.target, p.lang, lexicon=lexicon)
        coarse = coarse_edits(src, tgt)
        prompt = render_prompt(template, src=p.source, trg=p.target, edits=coarse)
        records.append({
            "messages": [
                {"role": "user", "content": prompt},
                {"role": "assistant", "content": serialize_edits(p.gold_edits)},
            ],
        })
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return len(records)


def validate_gold(pairs, lexicon=None):
    """Check that every gold edit script reconstructs its target.

    Returns a list of (pair_id, status) for pairs whose script is not
    feasible; an empty list means the corpus is clean.
    """
    bad = []
    for p in pairs:
        if p.gold_edits is None:
            continue
        src = tokenize(p.source, p.lang, lexicon=lexicon)
        res = apply_edits(src, p.target, list(p.gold_edits))
        if not res.feasible:
            bad.append((p.id, res.status))
    return bad


def split_sentences(text, lang, extra_terminators=""):
    """Language-dispatching sentence splitter (currently Chinese rules only)."""
    from editgloss.tokenization import split_chinese_sentences

    if lang == "zh":
        return split_chinese_sentences(text, extra_terminators)
    raise CorpusError("sentence splitting implemented for zh only")


__all__ = [
    "CEFR_LEVELS",
    "CorpusError",
    "CorpusStats",
    "FilterConfig",
    "SentencePair",
    "corpus_stats",
    "export_finetune",
    "filter_chinese",
    "filter_german",
    "load_pairs",
    "split_sentences",
    "validate_gold",
]
