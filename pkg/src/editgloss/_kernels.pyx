# cython: language_level=3, boundscheck=False, wraparound=False
"""Cython implementations of the two hot kernels.

Must stay behaviourally identical to editgloss._kernels_py; the parity
test suite runs both against each other.
"""

import array as _array

from cpython.array cimport array


def char_edit_distance(str a, str b):
    """Levenshtein distance between two strings (unit costs)."""
    cdef Py_ssize_t la = len(a), lb = len(b)
    if a == b:
        return 0
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef array va = _array.array('i', [ord(c) for c in a])
    cdef array vb = _array.array('i', [ord(c) for c in b])
    cdef int[::1] xa = va
    cdef int[::1] xb = vb
    cdef array prev_arr = _array.array('i', range(lb + 1))
    cdef array cur_arr = _array.array('i', bytes(4 * (lb + 1)))
    cdef int[::1] prev = prev_arr
    cdef int[::1] cur = cur_arr
    cdef Py_ssize_t i, j
    cdef int ca, cost, d
    for i in range(1, la + 1):
        ca = xa[i - 1]
        cur[0] = i
        for j in range(1, lb + 1):
            cost = prev[j - 1] + (ca != xb[j - 1])
            d = prev[j] + 1
            if d < cost:
                cost = d
            d = cur[j - 1] + 1
            if d < cost:
                cost = d
            cur[j] = cost
        prev, cur = cur, prev
    return prev[lb]


def longest_match(a, b, Py_ssize_t alo, Py_ssize_t ahi, Py_ssize_t blo, Py_ssize_t bhi):
    """Longest common contiguous run of a[alo:ahi] and b[blo:bhi].

    a and b are sequences of integer token ids.  Returns (i, j, size);
    ties on size are broken by smallest i, then smallest j.
    """
    cdef Py_ssize_t na = ahi - alo, nb = bhi - blo
    cdef Py_ssize_t best_i = alo, best_j = blo, best_size = 0
    if na <= 0 or nb <= 0:
        return best_i, best_j, best_size
    cdef array va = _array.array('l', [a[i] for i in range(alo, ahi)])
    cdef array vb = _array.array('l', [b[j] for j in range(blo, bhi)])
    cdef long[::1] xa = va
    cdef long[::1] xb = vb
    cdef array prev_arr = _array.array('l', bytes(8 * nb))
    cdef array cur_arr = _array.array('l', bytes(8 * nb))
    cdef long[::1] prev = prev_arr
    cdef long[::1] cur = cur_arr
    cdef Py_ssize_t i, j
    cdef long ai, k
    for i in range(na):
        ai = xa[i]
        for j in range(nb):
            if xb[j] == ai:
                k = (prev[j - 1] if j > 0 else 0) + 1
                cur[j] = k
                if k > best_size:
                    best_i = alo + i - k + 1
                    best_j = blo + j - k + 1
                    best_size = k
            else:
                cur[j] = 0
        prev, cur = cur, prev
    return best_i, best_j, best_size
