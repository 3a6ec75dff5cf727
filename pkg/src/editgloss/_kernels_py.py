"""Pure-Python implementations of the two hot kernels.

These mirror editgloss._kernels (the Cython extension) exactly; the
selector in editgloss.kernels picks whichever is available.
"""


def char_edit_distance(a, b):
    """Levenshtein distance between two strings (unit costs)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        ca = a[i - 1]
        cur = [i]
        append = cur.append
        for j in range(1, lb + 1):
            cost = prev[j - 1] + (ca != b[j - 1])
            d = prev[j] + 1
            if d < cost:
                cost = d
            d = cur[j - 1] + 1
            if d < cost:
                cost = d
            append(cost)
        prev = cur
    return prev[lb]


def longest_match(a, b, alo, ahi, blo, bhi):
    """Longest common contiguous run of a[alo:ahi] and b[blo:bhi].

    a and b are sequences of hashable items (token ids).  Returns
    (i, j, size); ties on size are broken by smallest i, then smallest j.
    Size 0 means no common item.
    """
    best_i, best_j, best_size = alo, blo, 0
    j2len = {}
    for i in range(alo, ahi):
        new = {}
        ai = a[i]
        for j in range(blo, bhi):
            if b[j] == ai:
                k = j2len.get(j - 1, 0) + 1
                new[j] = k
                if k > best_size:
                    best_i, best_j, best_size = i - k + 1, j - k + 1, k
        j2len = new
    return best_i, best_j, best_size
