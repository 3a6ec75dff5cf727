"""Scoring: edit-extraction P/R/F1, explanation coverage, annotation rollups.

Automatic matching is exact on (op, orig, tgt) triples.  Predicted edits
that do not match gold but belong to a script that still reconstructs the
target are queued for human adjudication instead of being silently counted
wrong; an adjudication file can flip them to true positives.
"""
from __future__ import annotations

import csv
import html
import json
import re
from dataclasses import dataclass
from pathlib import Path

from editgloss.atomic import apply_edits
from editgloss.tokenization import tokenize


class EvalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Metric arithmetic
# ---------------------------------------------------------------------------

def prf(tp, fp, fn):
    """Precision, recall, F1 with the zero-denominator-is-zero convention."""
    if tp < 0 or fp < 0 or fn < 0:
        raise EvalError("counts must be non-negative")
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, f1_from_pr(p, r)


def f1_from_pr(p, r):
    if not 0 <= p <= 1 or not 0 <= r <= 1:
        raise EvalError("precision and recall must be in [0, 1]")
    return 2 * p * r / (p + r) if p + r else 0.0


def percentage(count, total):
    """Share of total as a percentage, rounded to one decimal."""
    return round(100.0 * count / total, 1) if total else 0.0


# ---------------------------------------------------------------------------
# Edit matching
# ---------------------------------------------------------------------------

EXACT_MATCH = "exact_match"
FEASIBLE_UNMATCHED = "feasible_unmatched"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class EditMatchReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    review_queue: tuple = ()

    def merged(self, other):
        """Component-wise combination of two reports (identity: zeroed report)."""
        tp, fp, fn = self.tp + other.tp, self.fp + other.fp, self.fn + other.fn
        p, r, f = prf(tp, fp, fn)
        return EditMatchReport(tp, fp, fn, p, r, f,
                               self.review_queue + other.review_queue)


def empty_match_report():
    return EditMatchReport(0, 0, 0, 0.0, 0.0, 0.0, ())


def match_edits(predicted, gold, pair, lexicon=None, adjudicated=None):
    """Score predicted edits against gold as multisets of (op, orig, tgt).

    `adjudicated` is a set of edit keys whose feasible-unmatched verdict a
    human has flipped to correct; they count as true positives.
    """
    src = tokenize(pair.source, pair.lang, lexicon=lexicon)
    gold_check = apply_edits(src, pair.target, list(gold))
    if not gold_check.feasible:
        raise EvalError(
            "pair %s: gold edits are %s; corrupt annotation" % (pair.id, gold_check.status))

    remaining = {}
    for g in gold:
        remaining[g.key()] = remaining.get(g.key(), 0) + 1
    tp = 0
    unmatched = []
    for e in predicted:
        if remaining.get(e.key(), 0) > 0:
            remaining[e.key()] -= 1
            tp += 1
        else:
            unmatched.append(e)
    fn = sum(remaining.values())

    queue = []
    fp = 0
    if unmatched:
        pred_check = apply_edits(src, pair.target, list(predicted))
        alt = FEASIBLE_UNMATCHED if pred_check.feasible else INFEASIBLE
        for e in unmatched:
            verdict = alt
            if adjudicated and e.key() in adjudicated and alt == FEASIBLE_UNMATCHED:
                tp += 1
                verdict = EXACT_MATCH
            else:
                fp += 1
            queue.append((e, verdict))
    p, r, f = prf(tp, fp, fn)
    return EditMatchReport(tp, fp, fn, p, r, f, tuple(queue))


def load_adjudications(path):
    """Read adjudication overrides: JSONL of {pair_id, edit, verdict}.

    Returns a map from pair_id to the set of accepted edit keys.
    """
    accepted = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            op, orig, tgt = rec["edit"]
            verdict = rec["verdict"]
            pair_id = str(rec["pair_id"])
        except (ValueError, KeyError) as exc:
            raise EvalError("%s line %d: bad adjudication record: %s" % (path, lineno, exc))
        if verdict not in ("correct", "incorrect"):
            raise EvalError("%s line %d: unknown verdict %r" % (path, lineno, verdict))
        if verdict == "correct":
            accepted.setdefault(pair_id, set()).add((op, orig, tgt))
    return accepted


# ---------------------------------------------------------------------------
# Explanation coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    matched: tuple          # (edit, explanation) pairs
    missing_edits: tuple
    hallucinated: tuple     # explanations with at least one unbacked claim
    hallucinated_claims: tuple  # (explanation, (op, orig, tgt))
    coverage_rate: float


_Q = "['‘’\"“”`]"
_CLAIM = re.compile(
    _Q + "(?P<x>[^'‘’\"“”`]*)" + _Q
    + r"\s+(?:is|are|was|were|should be)\s+"
    + r"(?:(?P<op>replaced)\s+(?:by|with)\s+"
    + _Q + "(?P<y>[^'‘’\"“”`]*)" + _Q
    + r"|(?P<simple>inserted|deleted|relocated|removed|added|moved))"
)


def explanation_claims(text):
    """Extract (op, orig, tgt) claims from an explanation sentence."""
    claims = []
    for m in _CLAIM.finditer(text):
        x = m.group("x").strip()
        if m.group("op"):
            y = m.group("y").strip()
            if not x:
                claims.append(("insert", "", y))
            elif not y:
                claims.append(("delete", x, ""))
            elif x != y:
                claims.append(("replace", x, y))
            else:
                claims.append(("relocate", x, x))
            continue
        word = m.group("simple")
        if word in ("inserted", "added"):
            claims.append(("insert", "", x))
        elif word in ("deleted", "removed"):
            claims.append(("delete", x, ""))
        else:
            claims.append(("relocate", x, x))
    return claims


def _overlap_score(desc, edit):
    """Fallback matcher: shared token count between description and edit text."""
    desc_tokens = set(re.findall(r"\w+", desc.lower()))
    edit_tokens = set(re.findall(r"\w+", (edit.orig + " " + edit.tgt).lower()))
    return len(desc_tokens & edit_tokens)


def coverage(edits, explanations, pair=None):
    """Match explanations to edits; partition into matched/missing/hallucinated."""
    keys = [e.key() for e in edits]
    taken = [False] * len(edits)
    matched = []
    hallucinated = []
    hallucinated_claims = []
    for x in explanations:
        claims = explanation_claims(x.edit_desc)
        matched_here = False
        bad_claims = []
        for claim in claims:
            if claim in keys:
                idx = next((i for i, k in enumerate(keys)
                            if k == claim and not taken[i]), None)
                if idx is not None and not matched_here:
                    taken[idx] = True
                    matched.append((edits[idx], x))
                    matched_here = True
            else:
                bad_claims.append(claim)
        if not claims and not matched_here:
            # no quoted tokens at all: fall back to plain token overlap
            best, best_score = None, 0
            for i, e in enumerate(edits):
                if taken[i]:
                    continue
                score = _overlap_score(x.edit_desc, e)
                if score > best_score:
                    best, best_score = i, score
            if best is not None:
                taken[best] = True
                matched.append((edits[best], x))
                matched_here = True
        if bad_claims:
            hallucinated.append(x)
            hallucinated_claims.extend((x, c) for c in bad_claims)
        elif claims and not matched_here:
            # all claims refer to real edits, but every one was already taken
            pass
    missing = tuple(e for i, e in enumerate(edits) if not taken[i])
    rate = len(matched) / len(edits) if edits else 1.0
    return CoverageReport(tuple(matched), missing, tuple(hallucinated),
                          tuple(hallucinated_claims), rate)


# ---------------------------------------------------------------------------
# Human annotation aggregation
# ---------------------------------------------------------------------------

MISTAKE_LABELS = (
    "correct",
    "wrong_edit_description",
    "wrong_edit_reason",
    "wrong_error_type",
    "hallucinated_error",
)


@dataclass(frozen=True)
class AnnotationSummary:
    counts: dict
    total_explanations: int
    missing_errors: int
    percentages: dict
    agreement: dict | None = None


def aggregate_annotations(records, dual_annotated_ids=None):
    """Tally per-explanation mistake labels and optional dual-annotator agreement.

    Each record: {pair_id, explanation_index, label} plus optional
    {annotator}; label "missing_error" records an uncovered gold edit and
    is tallied separately from the per-explanation categories.
    """
    counts = {label: 0 for label in MISTAKE_LABELS}
    missing_errors = 0
    by_item = {}
    for i, rec in enumerate(records):
        try:
            label = rec["label"]
            pair_id = str(rec["pair_id"])
        except (KeyError, TypeError) as exc:
            raise EvalError("record %d: missing field %s" % (i, exc))
        if label == "missing_error":
            missing_errors += 1
        elif label in MISTAKE_LABELS:
            counts[label] += 1
        else:
            raise EvalError("record %d (pair %s): unknown label %r" % (i, pair_id, label))
        if dual_annotated_ids and pair_id in dual_annotated_ids:
            item = (pair_id, rec.get("explanation_index", 0))
            by_item.setdefault(item, []).append(label)
    total = sum(counts.values())
    percentages = {label: percentage(n, total) for label, n in counts.items()}

    agreement = None
    if dual_annotated_ids is not None:
        fully = missing_dis = other_dis = 0
        for labels in by_item.values():
            if len(labels) < 2:
                continue
            a, b = labels[0], labels[1]
            if a == b:
                fully += 1
            elif "missing_error" in (a, b):
                missing_dis += 1
            else:
                other_dis += 1
        agreement = agreement_summary(fully, missing_dis, other_dis)
    return AnnotationSummary(counts, total, missing_errors, percentages, agreement)


def agreement_summary(fully_agree, disagree_missing, disagree_other):
    """Dual-annotation agreement; disagreements only on missing errors still count."""
    n = fully_agree + disagree_missing + disagree_other
    rate = percentage(fully_agree + disagree_missing, n)
    return {
        "fully_agree": fully_agree,
        "disagree_missing": disagree_missing,
        "disagree_other": disagree_other,
        "total": n,
        "rate": rate,
    }


# ---------------------------------------------------------------------------
# Report writers
# ---------------------------------------------------------------------------

def write_report_json(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    return str(obj)


def write_table_csv(rows, path, header):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_table_html(rows, path, header, title=""):
    parts = ["<table>"]
    if title:
        parts.append("<caption>%s</caption>" % html.escape(title))
    parts.append("<tr>" + "".join("<th>%s</th>" % html.escape(str(h)) for h in header) + "</tr>")
    for row in rows:
        parts.append(
            "<tr>" + "".join("<td>%s</td>" % html.escape(str(c)) for c in row) + "</tr>")
    parts.append("</table>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


__all__ = [
    "AnnotationSummary",
    "CoverageReport",
    "EXACT_MATCH",
    "EditMatchReport",
    "EvalError",
    "FEASIBLE_UNMATCHED",
    "INFEASIBLE",
    "MISTAKE_LABELS",
    "aggregate_annotations",
    "agreement_summary",
    "coverage",
    "empty_match_report",
    "explanation_claims",
    "f1_from_pr",
    "load_adjudications",
    "match_edits",
    "percentage",
    "prf",
    "write_report_json",
    "write_table_csv",
    "write_table_html",
]
