"""Atomic token edits: data model, refiner, feasibility checker, wire format.

The refiner turns coarse span edits into atomic insert/delete/replace/
relocate edits via similarity-driven alignment inside each edited region,
followed by relocation fusion of identical delete/insert pairs.  The
feasibility checker answers whether a positionless edit script can be
realized against a source sentence so that it reconstructs the target.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from editgloss import kernels
from editgloss.tokenization import edit_join, tokenize_german

OPS = ("insert", "delete", "replace", "relocate")


class EditError(ValueError):
    pass


class ParseError(EditError):
    def __init__(self, message, raw=""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class AtomicEdit:
    op: str
    orig: str
    tgt: str
    src_span: tuple | None = None
    tgt_span: tuple | None = None

    def key(self):
        """Identity used for multiset comparison and matching."""
        return (self.op, self.orig, self.tgt)

    def validate(self):
        if self.op not in OPS:
            raise EditError("unknown edit op: %r" % (self.op,))
        if self.op == "insert" and (self.orig or not self.tgt):
            raise EditError("insert must have empty orig and non-empty tgt: %r" % (self,))
        if self.op == "delete" and (self.tgt or not self.orig):
            raise EditError("delete must have empty tgt and non-empty orig: %r" % (self,))
        if self.op == "replace" and self.orig == self.tgt:
            raise EditError("replace must change the text: %r" % (self,))
        if self.op == "relocate" and (self.orig != self.tgt or not self.orig):
            raise EditError("relocate requires identical non-empty sides: %r" % (self,))
        return self


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # feasible | infeasible | undecided
    realized_target: str | None = None
    assignment: tuple = ()

    @property
    def feasible(self):
        return self.status == "feasible"


@dataclass(frozen=True)
class RefinerConfig:
    similarity_threshold: float = 0.5
    group_contiguous: bool = False
    zh_particle_merge: bool = True
    particle_list: frozenset = frozenset({"了", "过", "完", "到", "出", "成"})
    # refiner internals: how many equal tokens between two edited regions may
    # be absorbed into one alignment region, and the widest token span that a
    # single replace may cover on either side
    cluster_gap: int = 1
    max_span: int = 3

    def __post_init__(self):
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise EditError("similarity_threshold must be in [0, 1]")


def similarity(a, b):
    """Normalized character-level similarity in [0, 1]."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    return 1.0 - kernels.char_edit_distance(a, b) / max(len(a), len(b))


# ---------------------------------------------------------------------------
# Refiner
# ---------------------------------------------------------------------------

def _cluster(coarse, gap):
    clusters = []
    for ce in sorted(coarse, key=lambda c: (c.src_span, c.tgt_span)):
        if clusters and ce.src_span[0] - clusters[-1][-1].src_span[1] <= gap:
            clusters[-1].append(ce)
        else:
            clusters.append([ce])
    return clusters


def _align_region(src_texts, tgt_texts, s0, t0, lang, cfg):
    """Minimal-cost monotonic alignment of one edited region.

    Pairing two spans costs (1 - similarity) scaled by the total token
    count (plain 1 - similarity for single-token pairs); leaving a token
    unmatched costs the similarity threshold.  Pairs below the threshold
    are not allowed, so dissimilar tokens fall apart into delete+insert.
    """
    thr = cfg.similarity_threshold
    m, n = len(src_texts), len(tgt_texts)
    INF = float("inf")
    cost = [[INF] * (n + 1) for _ in range(m + 1)]
    back = [[None] * (n + 1) for _ in range(m + 1)]
    cost[0][0] = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            c = cost[i][j]
            if c == INF:
                continue
            for k in range(1, min(cfg.max_span, m - i) + 1):
                stext = edit_join(src_texts[i:i + k], lang)
                for l in range(1, min(cfg.max_span, n - j) + 1):
                    ttext = edit_join(tgt_texts[j:j + l], lang)
                    if (k, l) != (1, 1) and set(src_texts[i:i + k]) & set(tgt_texts[j:j + l]):
                        # a token shared by both spans aligns by itself for
                        # free; merging it into a changed span only hides it
                        continue
                    if stext == ttext:
                        step = 0.0
                    else:
                        s = similarity(stext, ttext)
                        if s <= thr:
                            continue
                        step = (1.0 - s) * (k + l) if (k, l) != (1, 1) else (1.0 - s)
                    if c + step < cost[i + k][j + l]:
                        cost[i + k][j + l] = c + step
                        back[i + k][j + l] = (k, l)
            if i < m and c + thr < cost[i + 1][j]:
                cost[i + 1][j] = c + thr
                back[i + 1][j] = (1, 0)
            if j < n and c + thr < cost[i][j + 1]:
                cost[i][j + 1] = c + thr
                back[i][j + 1] = (0, 1)
    steps = []
    i, j = m, n
    while i or j:
        k, l = back[i][j]
        steps.append((i - k, j - l, k, l))
        i, j = i - k, j - l
    edits = []
    for i, j, k, l in reversed(steps):
        stext = edit_join(src_texts[i:i + k], lang)
        ttext = edit_join(tgt_texts[j:j + l], lang)
        sspan = (s0 + i, s0 + i + k)
        tspan = (t0 + j, t0 + j + l)
        if k and l:
            if stext != ttext:
                edits.append(AtomicEdit("replace", stext, ttext, sspan, tspan))
        elif k:
            edits.append(AtomicEdit("delete", stext, "", sspan, (tspan[0], tspan[0])))
        else:
            edits.append(AtomicEdit("insert", "", ttext, (sspan[0], sspan[0]), tspan))
    return edits


def _fuse_relocations(edits):
    deletes = {}
    inserts = {}
    for e in edits:
        if e.op == "delete":
            deletes.setdefault(e.orig, []).append(e)
        elif e.op == "insert":
            inserts.setdefault(e.tgt, []).append(e)
    fused = []
    drop = set()
    for text, dels in deletes.items():
        ins = inserts.get(text, [])
        # unique-match constraint: ambiguous multi-occurrence cases stay apart
        if len(dels) == 1 and len(ins) == 1:
            d, i = dels[0], ins[0]
            drop.add(id(d))
            drop.add(id(i))
            fused.append(AtomicEdit("relocate", text, text, d.src_span, i.tgt_span))
    out = [e for e in edits if id(e) not in drop]
    out.extend(fused)
    return out


def _group_contiguous(edits, lang):
    out = []
    for e in sorted(edits, key=_sort_key):
        if out and e.op == out[-1].op and e.op in ("insert", "delete"):
            p = out[-1]
            if (e.op == "delete" and p.src_span and e.src_span
                    and p.src_span[1] == e.src_span[0]):
                out[-1] = AtomicEdit(
                    "delete", edit_join([p.orig, e.orig], lang), "",
                    (p.src_span[0], e.src_span[1]), p.tgt_span)
                continue
            if (e.op == "insert" and p.tgt_span and e.tgt_span
                    and p.tgt_span[1] == e.tgt_span[0]
                    and p.src_span == e.src_span):
                out[-1] = AtomicEdit(
                    "insert", "", edit_join([p.tgt, e.tgt], lang),
                    p.src_span, (p.tgt_span[0], e.tgt_span[1]))
                continue
        out.append(e)
    return out


def _pair_particle_swaps(edits, src_texts, tgt_texts, particles):
    """Rejoin a deleted particle with an inserted one behind the same verb.

    Two dissimilar particles (e.g. aspect markers) never pair up in the
    alignment, so a swapped particle surfaces as delete+insert; when both
    sit after the same unchanged verb they are one replace of verb+particle.
    """
    dels = [e for e in edits
            if e.op == "delete" and e.orig in particles and e.src_span
            and e.src_span[1] - e.src_span[0] == 1 and e.src_span[0] > 0]
    ins = [e for e in edits
           if e.op == "insert" and e.tgt in particles and e.tgt_span
           and e.tgt_span[1] - e.tgt_span[0] == 1 and e.tgt_span[0] > 0]
    if len(dels) != 1 or len(ins) != 1:
        return edits
    d, i = dels[0], ins[0]
    si, ti = d.src_span[0], i.tgt_span[0]
    if src_texts[si - 1] != tgt_texts[ti - 1]:
        return edits
    # the two edits must describe the same alignment spot, not a deletion
    # and an insertion at distant positions
    if not (d.src_span[0] - 1 <= i.src_span[0] <= d.src_span[1]
            and i.tgt_span[0] - 1 <= d.tgt_span[0] <= i.tgt_span[1]):
        return edits
    fused = AtomicEdit(
        "replace", src_texts[si - 1] + d.orig, tgt_texts[ti - 1] + i.tgt,
        (si - 1, si + 1), (ti - 1, ti + 1))
    return [e for e in edits if e is not d and e is not i] + [fused]


def _merge_particles(edits, src_texts, tgt_texts, cfg):
    particles = cfg.particle_list
    edits = _pair_particle_swaps(edits, src_texts, tgt_texts, particles)
    out = []
    for e in edits:
        if (e.op == "replace" and e.src_span and e.tgt_span
                and e.src_span[1] - e.src_span[0] == 1
                and e.tgt_span[1] - e.tgt_span[0] == 1):
            si, ti = e.src_span[0], e.tgt_span[0]
            if e.orig in particles and e.tgt in particles:
                # changed particle: pull in the unchanged verb before it
                if si > 0 and ti > 0 and src_texts[si - 1] == tgt_texts[ti - 1]:
                    out.append(AtomicEdit(
                        "replace", src_texts[si - 1] + e.orig,
                        tgt_texts[ti - 1] + e.tgt,
                        (si - 1, si + 1), (ti - 1, ti + 1)))
                    continue
            elif (si + 1 < len(src_texts) and ti + 1 < len(tgt_texts)
                    and src_texts[si + 1] == tgt_texts[ti + 1]
                    and src_texts[si + 1] in particles):
                # changed verb: pull in the unchanged particle after it
                out.append(AtomicEdit(
                    "replace", e.orig + src_texts[si + 1],
                    e.tgt + tgt_texts[ti + 1],
                    (si, si + 2), (ti, ti + 2)))
                continue
        out.append(e)
    return out


def _sort_key(e):
    anchor = e.src_span[0] if e.src_span else 0
    return (anchor, 0 if e.op == "insert" else 1,
            e.tgt_span[0] if e.tgt_span else 0, e.op, e.orig, e.tgt)


def refine(src, tgt, coarse, cfg=None):
    """Break coarse span edits down into atomic edits."""
    cfg = cfg or RefinerConfig()
    src_texts, tgt_texts = src.texts, tgt.texts
    for ce in coarse:
        if not (0 <= ce.src_span[0] <= ce.src_span[1] <= len(src_texts)
                and 0 <= ce.tgt_span[0] <= ce.tgt_span[1] <= len(tgt_texts)):
            raise EditError("coarse edit span out of bounds: %r" % (ce,))
    edits = []
    for cluster in _cluster(coarse, cfg.cluster_gap):
        s_lo, s_hi = cluster[0].src_span[0], cluster[-1].src_span[1]
        t_lo, t_hi = cluster[0].tgt_span[0], cluster[-1].tgt_span[1]
        edits.extend(_align_region(
            src_texts[s_lo:s_hi], tgt_texts[t_lo:t_hi], s_lo, t_lo, src.lang, cfg))
    edits = _fuse_relocations(edits)
    if cfg.group_contiguous:
        edits = _group_contiguous(edits, src.lang)
    if src.lang == "zh" and cfg.zh_particle_merge:
        edits = _merge_particles(edits, src_texts, tgt_texts, cfg)
    edits = postprocess(edits)
    return sorted(edits, key=_sort_key)


def postprocess(edits):
    """Drop no-op replaces, empty edits, and exact duplicates."""
    out = []
    seen = set()
    for e in edits:
        if e.op == "replace" and e.orig == e.tgt:
            continue
        if not e.orig and not e.tgt:
            continue
        if e.src_span is not None or e.tgt_span is not None:
            # positionless duplicates are legitimate (e.g. two identical
            # insertions at different places); only span-anchored copies
            # of the same edit are redundant
            dedup = (e.op, e.orig, e.tgt, e.src_span, e.tgt_span)
            if dedup in seen:
                continue
            seen.add(dedup)
        out.append(e)
    return out


# ---------------------------------------------------------------------------
# Feasibility (positionless edit application with backtracking)
# ---------------------------------------------------------------------------

def _canon_tokens(text, lang):
    if lang == "zh":
        return [c for c in text if not c.isspace()]
    return list(tokenize_german(text).texts)


def _occurrences(tokens, orig_tokens):
    n, k = len(tokens), len(orig_tokens)
    return [i for i in range(n - k + 1) if tokens[i:i + k] == orig_tokens]


def _is_subsequence(sub, seq):
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def apply_edits(src, tgt_text, edits, max_states=10000):
    """Search for concrete positions realizing a positionless edit script.

    Backtracks over occurrence choices and insertion points (leftmost
    first); the state budget guarantees termination on adversarial input.
    """
    lang = src.lang
    if lang == "zh":
        base = [c for t in src.texts for c in t]
    else:
        base = list(src.texts)
    target = _canon_tokens(tgt_text, lang)

    consumers = []  # (edit, orig_tokens, replacement_tokens or None)
    chunks = []     # (edit, tokens) placed in the insertion phase
    for e in edits:
        try:
            e.validate()
        except EditError:
            pass  # feasibility is judged on the texts regardless
        if e.op == "insert":
            chunks.append((e, _canon_tokens(e.tgt, lang)))
        elif e.op == "delete":
            consumers.append((e, _canon_tokens(e.orig, lang), None))
        elif e.op == "replace":
            consumers.append((e, _canon_tokens(e.orig, lang),
                              _canon_tokens(e.tgt, lang)))
        elif e.op == "relocate":
            consumers.append((e, _canon_tokens(e.orig, lang), None))
            chunks.append((e, _canon_tokens(e.orig, lang)))
        else:
            return FeasibilityResult("infeasible")

    budget = [max_states]
    assignment = []

    def place_chunks(tokens, idx, acc):
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        if idx == len(chunks):
            return list(acc) if tokens == target else None
        edit, chunk = chunks[idx]
        if not chunk:
            return place_chunks(tokens, idx + 1, acc + [(edit, None)])
        for pos in range(len(tokens) + 1):
            cand = tokens[:pos] + chunk + tokens[pos:]
            if not _is_subsequence(cand, target):
                continue
            res = place_chunks(cand, idx + 1, acc + [(edit, ("insert_at", pos))])
            if res is not None:
                return res
        return None

    def run_consumers(tokens, idx, acc):
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        if idx == len(consumers):
            expect = len(target) - sum(len(c) for _, c in chunks)
            if len(tokens) != expect:
                return None
            return place_chunks(tokens, 0, acc)
        edit, orig_tokens, repl = consumers[idx]
        if not orig_tokens:
            return None
        for pos in _occurrences(tokens, orig_tokens):
            cand = tokens[:pos] + (repl or []) + tokens[pos + len(orig_tokens):]
            res = run_consumers(cand, idx + 1, acc + [(edit, ("at", pos))])
            if res is not None:
                return res
        return None

    found = run_consumers(base, 0, [])
    if found is not None:
        return FeasibilityResult("feasible", tgt_text, tuple(found))
    if budget[0] <= 0:
        return FeasibilityResult("undecided")
    return FeasibilityResult("infeasible")


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

def serialize_edits(edits):
    return "\n".join('["%s", "%s", "%s"]' % e.key() for e in edits)


_EDIT_LINE = re.compile(
    r"""^\s*\[?\s*["']?(insert|delete|replace|relocate)["']?\s*,\s*"""
    r"""(["'])(.*?)\2\s*,\s*(["'])(.*?)\4\s*,?\s*\]?\s*[.,;]?\s*$"""
)


def parse_edit_lines(text):
    """Lenient parser for bracketed edit lines; returns (edits, warnings)."""
    edits = []
    warnings = []
    nonempty = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        nonempty += 1
        m = _EDIT_LINE.match(line)
        if not m:
            warnings.append("line %d: not an edit line: %r" % (lineno, line.strip()))
            continue
        op, orig, tgt = m.group(1), m.group(3), m.group(5)
        if op == "relocate" and orig != tgt:
            warnings.append(
                "line %d: relocate with differing sides demoted to delete+insert" % lineno)
            if orig:
                edits.append(AtomicEdit("delete", orig, ""))
            if tgt:
                edits.append(AtomicEdit("insert", "", tgt))
            continue
        # normalize ops that disagree with their filled sides
        if op == "insert" and orig:
            op = "replace" if tgt else "delete"
            warnings.append("line %d: insert with original text read as %s" % (lineno, op))
        elif op == "delete" and tgt:
            op = "replace" if orig else "insert"
            warnings.append("line %d: delete with target text read as %s" % (lineno, op))
        elif op == "replace" and not orig and tgt:
            op = "insert"
        elif op == "replace" and orig and not tgt:
            op = "delete"
        if not orig and not tgt:
            warnings.append("line %d: empty edit skipped" % lineno)
            continue
        if op == "relocate" and not orig:
            warnings.append("line %d: empty relocate skipped" % lineno)
            continue
        edits.append(AtomicEdit(op, orig, tgt))
    if nonempty and not edits and not any("demoted" in w for w in warnings):
        raise ParseError("no parseable edit lines", raw=text)
    return edits, warnings
