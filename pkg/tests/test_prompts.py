"""Prompt assets are pinned byte-for-byte; editing them must fail loudly."""
import hashlib

import pytest

from editgloss.llm import ASSET_DIR

PINNED = {
    "de_extract.txt": "87a5791382142f0cc35798e737406b5f861a6c25b6ca7b40ffbe4798c051485f",
    "zh_extract.txt": "b2f677b8b8cd80065926cb6cf1dbd4f500b38c7466653d2a8b7973bf4141921b",
    "de_explain.txt": "ddc9597f4e3045535b3a11a1f4e69e5c0341097e0b5487b4bca1f54ec2c00c4f",
    "zh_explain.txt": "1108f9b338c92f4c9391c3febf2b6c0496726c4f621ef09e6ad4d7e61ac97dca",
    "de_oneshot.txt": "6a570c34126d9d5bb4af02b5513a37b4dc9870665086861c011f14d4d38acaf6",
}


@pytest.mark.parametrize("name,digest", sorted(PINNED.items()))
def test_prompt_asset_checksum(name, digest):
    data = (ASSET_DIR / name).read_bytes()
    assert hashlib.sha256(data).hexdigest() == digest, (
        "%s changed; prompt wording is part of the pipeline contract" % name)


def test_all_placeholders_present():
    for name in PINNED:
        body = (ASSET_DIR / name).read_text(encoding="utf-8")
        assert "{src}" in body and "{trg}" in body
        if "extract" in name or "explain" in name:
            assert "{edits}" in body
