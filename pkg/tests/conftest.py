import pytest

from editgloss import corpus
from editgloss.llm import ASSET_DIR
from editgloss.tokenization import Lexicon

MINI_CORPUS = ASSET_DIR / "mini_corpus.jsonl"


@pytest.fixture(scope="session")
def zh_lexicon():
    return Lexicon.from_file(ASSET_DIR / "lexicon_zh.txt")


@pytest.fixture(scope="session")
def mini_pairs():
    return corpus.load_pairs(MINI_CORPUS)


@pytest.fixture(scope="session")
def mini_by_id(mini_pairs):
    return {p.id: p for p in mini_pairs}
