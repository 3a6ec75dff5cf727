"""Token-level edit extraction and explanation toolkit for learner German and Chinese."""

from editgloss.atomic import (
    AtomicEdit,
    EditError,
    FeasibilityResult,
    ParseError,
    RefinerConfig,
    apply_edits,
    parse_edit_lines,
    refine,
    serialize_edits,
    similarity,
)
from editgloss.corpus import SentencePair, load_pairs
from editgloss.diffs import CoarseEdit, Opcode, coarse_edits, opcodes
from editgloss.tokenization import Lexicon, Token, TokenSeq, tokenize

__version__ = "0.1.0"

__all__ = [
    "AtomicEdit",
    "CoarseEdit",
    "EditError",
    "FeasibilityResult",
    "Lexicon",
    "Opcode",
    "ParseError",
    "RefinerConfig",
    "SentencePair",
    "Token",
    "TokenSeq",
    "apply_edits",
    "coarse_edits",
    "load_pairs",
    "opcodes",
    "parse_edit_lines",
    "refine",
    "serialize_edits",
    "similarity",
    "tokenize",
    "__version__",
]
