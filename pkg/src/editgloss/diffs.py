"""Span-level alignment of token sequences and coarse ("rough") edits.

The alignment recursively picks the longest common contiguous token run
(ties: leftmost in source, then leftmost in target), recursing into the
gaps on either side.  Non-matching gaps become insert/delete/replace
opcodes; maximal non-equal regions become CoarseEdit records whose text
is embedded verbatim into extraction prompts.
"""
from __future__ import annotations

from dataclasses import dataclass

from editgloss import kernels
from editgloss.tokenization import edit_join


@dataclass(frozen=True)
class Opcode:
    tag: str  # equal | insert | delete | replace
    src_lo: int
    src_hi: int
    tgt_lo: int
    tgt_hi: int


@dataclass(frozen=True)
class CoarseEdit:
    op: str  # insert | delete | replace
    orig_text: str
    tgt_text: str
    src_span: tuple
    tgt_span: tuple

    def as_tuple_text(self):
        """The ('op', 'orig', 'tgt') line format used in prompts."""
        return "('%s', '%s', '%s')" % (self.op, self.orig_text, self.tgt_text)


def _intern(src_texts, tgt_texts):
    ids = {}
    def enc(texts):
        out = []
        for t in texts:
            if t not in ids:
                ids[t] = len(ids)
            out.append(ids[t])
        return out
    return enc(src_texts), enc(tgt_texts)


def opcodes(src, tgt, match_fn=None):
    """Alignment opcodes between two TokenSeq (same language rules)."""
    a, b = _intern(src.texts, tgt.texts)
    find = match_fn or kernels.longest_match
    out = []

    def gap(alo, ahi, blo, bhi):
        if alo < ahi and blo < bhi:
            out.append(Opcode("replace", alo, ahi, blo, bhi))
        elif alo < ahi:
            out.append(Opcode("delete", alo, ahi, blo, blo))
        elif blo < bhi:
            out.append(Opcode("insert", alo, alo, blo, bhi))

    def recurse(alo, ahi, blo, bhi):
        i, j, size = find(a, b, alo, ahi, blo, bhi)
        if size == 0:
            gap(alo, ahi, blo, bhi)
            return
        recurse(alo, i, blo, j)
        out.append(Opcode("equal", i, i + size, j, j + size))
        recurse(i + size, ahi, j + size, bhi)

    recurse(0, len(a), 0, len(b))
    return _coalesce(out)


def _coalesce(ops):
    merged = []
    for op in ops:
        if merged and merged[-1].tag == op.tag:
            last = merged[-1]
            merged[-1] = Opcode(op.tag, last.src_lo, op.src_hi, last.tgt_lo, op.tgt_hi)
        else:
            merged.append(op)
    return merged


def coarse_edits(src, tgt):
    """Maximal edited spans: every run of non-equal opcodes becomes one edit."""
    lang = src.lang
    src_texts = src.texts
    tgt_texts = tgt.texts
    out = []
    run = []
    for op in opcodes(src, tgt) + [Opcode("equal", -1, -1, -1, -1)]:
        if op.tag == "equal":
            if run:
                s_lo, s_hi = run[0].src_lo, run[-1].src_hi
                t_lo, t_hi = run[0].tgt_lo, run[-1].tgt_hi
                if s_lo < s_hi and t_lo < t_hi:
                    tag = "replace"
                elif s_lo < s_hi:
                    tag = "delete"
                else:
                    tag = "insert"
                out.append(CoarseEdit(
                    tag,
                    edit_join(src_texts[s_lo:s_hi], lang),
                    edit_join(tgt_texts[t_lo:t_hi], lang),
                    (s_lo, s_hi),
                    (t_lo, t_hi),
                ))
                run = []
        else:
            run.append(op)
    return out
