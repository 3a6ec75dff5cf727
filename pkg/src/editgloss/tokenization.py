"""Tokenizers with character offsets for German and Chinese.

German: whitespace split plus punctuation detachment, with special care
for numbers/dates ("30.04.") and abbreviations ("ca.") that keep their
trailing period.  Chinese: forward maximum matching against a lexicon;
anything not in the lexicon falls back to single characters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

DETACH_PUNCT = set(".,!?;:\"'„“”‘’()—«»")

# Trailing period stays attached on numbers and dates like "30.04." or "5."
_NUMBERISH = re.compile(r"^\d+(?:[.,]\d+)*\.$")

DEFAULT_ABBREVIATIONS = {"ca.", "z.B.", "bzw.", "usw.", "Nr.", "Dr.", "evtl.", "ggf.", "u.a."}

ZH_TERMINATORS = "。！？"  # 。 ！ ？
_ZH_PUNCT = set("。！？，、；：“”‘’（）《》…．～—")


@dataclass(frozen=True)
class Token:
    text: str
    index: int
    char_start: int
    char_end: int


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple
    original: str
    lang: str

    @property
    def texts(self):
        return [t.text for t in self.tokens]

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Lexicon:
    entries: frozenset = frozenset()
    max_len: int = field(default=0)

    @staticmethod
    def from_words(words):
        entries = frozenset(w for w in words if w and not any(c.isspace() for c in w))
        max_len = max((len(w) for w in entries), default=0)
        return Lexicon(entries, max_len)

    @staticmethod
    def from_file(path):
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.append(line)
        return Lexicon.from_words(words)


def _split_german_token(chunk, start, abbreviations):
    """Split one whitespace-delimited chunk into (text, start, end) pieces."""
    lo, hi = 0, len(chunk)
    leading = []
    while lo < hi and chunk[lo] in DETACH_PUNCT:
        leading.append((chunk[lo], start + lo, start + lo + 1))
        lo += 1
    trailing = []
    while hi > lo:
        core = chunk[lo:hi]
        if core in abbreviations or _NUMBERISH.match(core):
            break
        if chunk[hi - 1] in DETACH_PUNCT:
            trailing.append((chunk[hi - 1], start + hi - 1, start + hi))
            hi -= 1
        else:
            break
    pieces = leading
    if hi > lo:
        pieces.append((chunk[lo:hi], start + lo, start + hi))
    pieces.extend(reversed(trailing))
    return pieces


def tokenize_german(text, abbreviations=None):
    abbreviations = DEFAULT_ABBREVIATIONS if abbreviations is None else abbreviations
    tokens = []
    for m in re.finditer(r"\S+", text):
        for piece, lo, hi in _split_german_token(m.group(), m.start(), abbreviations):
            tokens.append(Token(piece, len(tokens), lo, hi))
    return TokenSeq(tuple(tokens), text, "de")


def tokenize_chinese(text, lexicon=None):
    lexicon = lexicon or Lexicon()
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        end = pos + 1
        if ch not in _ZH_PUNCT and lexicon.max_len > 1:
            # forward maximum matching: longest lexicon entry starting here
            limit = min(n, pos + lexicon.max_len)
            for j in range(limit, pos + 1, -1):
                if text[pos:j] in lexicon.entries:
                    end = j
                    break
        tokens.append(Token(text[pos:end], len(tokens), pos, end))
        pos = end
    return TokenSeq(tuple(tokens), text, "zh")


def tokenize(text, lang, lexicon=None, abbreviations=None):
    if lang == "zh":
        return tokenize_chinese(text, lexicon)
    return tokenize_german(text, abbreviations)


def edit_join(texts, lang):
    """Join token texts for edit strings: spaces for German, nothing for Chinese."""
    return "".join(texts) if lang == "zh" else " ".join(texts)


_NO_SPACE_BEFORE = set(".,!?;:)”’")
_NO_SPACE_AFTER = set("(„‘")


def join_tokens(texts, lang):
    """Join token texts into a normalized sentence string."""
    if lang == "zh":
        return "".join(texts)
    out = []
    for t in texts:
        if out and t and t[0] not in _NO_SPACE_BEFORE and out[-1] not in _NO_SPACE_AFTER:
            out.append(" ")
        out.append(t)
    return "".join(out)


def detokenize(seq):
    """Reconstruct text from a TokenSeq.

    Exact inverse when offsets are intact (they always are for sequences
    produced by the tokenizers); falls back to join rules otherwise.
    """
    if seq.tokens and all(
        seq.original[t.char_start:t.char_end] == t.text for t in seq.tokens
    ):
        return seq.original
    if not seq.tokens:
        return seq.original
    return join_tokens(seq.texts, seq.lang)


def split_chinese_sentences(text, extra_terminators=""):
    """Split text after sentence-final punctuation; terminator stays attached."""
    terms = set(ZH_TERMINATORS + extra_terminators)
    out = []
    buf = []
    for ch in text:
        buf.append(ch)
        if ch in terms:
            seg = "".join(buf).strip()
            if seg:
                out.append(seg)
            buf = []
    seg = "".join(buf).strip()
    if seg:
        out.append(seg)
    return out
