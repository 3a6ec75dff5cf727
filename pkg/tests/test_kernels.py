"""Compiled and pure kernel implementations must agree with brute-force oracles."""
import itertools
import random

import pytest

from editgloss import _kernels_py as pure
from editgloss import kernels


def oracle_edit_distance(a, b):
    """Textbook Levenshtein DP, quadratic memory."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return d[m][n]


def oracle_longest_match(a, b, alo, ahi, blo, bhi):
    """Exhaustive search for the longest common run, smallest (i, j) on ties."""
    best = (alo, blo, 0)
    for i in range(alo, ahi):
        for j in range(blo, bhi):
            size = 0
            while i + size < ahi and j + size < bhi and a[i + size] == b[j + size]:
                size += 1
            if size > best[2]:
                best = (i, j, size)
    return best


IMPLS = [pure, kernels]
if kernels.NATIVE:
    from editgloss import _kernels as native
    IMPLS.append(native)


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.__name__)
class TestCharEditDistance:
    def test_known_values(self, impl):
        assert impl.char_edit_distance("", "") == 0
        assert impl.char_edit_distance("abc", "abc") == 0
        assert impl.char_edit_distance("abc", "") == 3
        assert impl.char_edit_distance("", "xy") == 2
        assert impl.char_edit_distance("kitten", "sitting") == 3
        assert impl.char_edit_distance("haben", "habe") == 1
        assert impl.char_edit_distance("termin", "Termin") == 1

    def test_against_oracle_random(self, impl):
        rng = random.Random(7)
        for _ in range(300):
            a = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 10)))
            b = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 10)))
            assert impl.char_edit_distance(a, b) == oracle_edit_distance(a, b)

    def test_symmetry_and_bounds(self, impl):
        rng = random.Random(11)
        for _ in range(200):
            a = "".join(rng.choice("xyz") for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice("xyz") for _ in range(rng.randint(0, 8)))
            d = impl.char_edit_distance(a, b)
            assert d == impl.char_edit_distance(b, a)
            assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))

    def test_unicode(self, impl):
        assert impl.char_edit_distance("菜市场", "市菜场") == 2
        assert impl.char_edit_distance("早饭", "早饭") == 0


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.__name__)
class TestLongestMatch:
    def test_simple(self, impl):
        a = [1, 2, 3, 4]
        b = [9, 2, 3, 8]
        assert impl.longest_match(a, b, 0, 4, 0, 4) == (1, 1, 2)

    def test_no_match(self, impl):
        assert impl.longest_match([1, 2], [3, 4], 0, 2, 0, 2)[2] == 0

    def test_empty_window(self, impl):
        assert impl.longest_match([1, 2], [1, 2], 1, 1, 0, 2)[2] == 0

    def test_tie_break_smallest_indices(self, impl):
        # two equally long runs; the earliest source then target wins
        a = [1, 9, 1]
        b = [1, 8, 1]
        assert impl.longest_match(a, b, 0, 3, 0, 3) == (0, 0, 1)

    def test_against_oracle_random(self, impl):
        rng = random.Random(13)
        for _ in range(300):
            a = [rng.randrange(4) for _ in range(rng.randint(0, 8))]
            b = [rng.randrange(4) for _ in range(rng.randint(0, 8))]
            got = impl.longest_match(a, b, 0, len(a), 0, len(b))
            want = oracle_longest_match(a, b, 0, len(a), 0, len(b))
            assert got == want, (a, b)

    def test_subwindow_against_oracle(self, impl):
        rng = random.Random(17)
        for _ in range(200):
            a = [rng.randrange(3) for _ in range(6)]
            b = [rng.randrange(3) for _ in range(6)]
            alo, ahi = sorted(rng.sample(range(7), 2))
            blo, bhi = sorted(rng.sample(range(7), 2))
            got = impl.longest_match(a, b, alo, ahi, blo, bhi)
            want = oracle_longest_match(a, b, alo, ahi, blo, bhi)
            assert got == want


def test_exhaustive_small_alphabet_parity():
    """Every implementation agrees on all short sequences over {0,1}."""
    seqs = [list(t) for n in range(4) for t in itertools.product(range(2), repeat=n)]
    for a in seqs:
        for b in seqs:
            results = {
                impl.__name__: impl.longest_match(a, b, 0, len(a), 0, len(b))
                for impl in IMPLS
            }
            assert len(set(results.values())) == 1, (a, b, results)


def test_selector_env_override(tmp_path):
    """EDITGLOSS_PURE=1 must force the pure implementation."""
    import subprocess
    import sys

    code = "from editgloss import kernels; print(kernels.NATIVE)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True, env={"PATH": "/usr/bin:/bin", "EDITGLOSS_PURE": "1"},
    )
    assert out.stdout.strip() == "False"
