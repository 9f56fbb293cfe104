# cython: language_level=3
"""Compiled kernels: unit-cost edit distance and clipped n-gram overlap.

Same contracts as csmt.kernels._pure.
"""

from libc.stdlib cimport free, malloc


def levenshtein(int[::1] a, int[::1] b):
    """Unit-cost edit distance between two int32 id arrays."""
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    if lb > la:
        a, b = b, a
        la, lb = lb, la
    if lb == 0:
        return la
    cdef Py_ssize_t i, j
    cdef int cost, best, tmp, prev_diag
    cdef int *row = <int *> malloc((lb + 1) * sizeof(int))
    if row == NULL:
        raise MemoryError()
    try:
        for j in range(lb + 1):
            row[j] = <int> j
        for i in range(1, la + 1):
            prev_diag = row[0]
            row[0] = <int> i
            for j in range(1, lb + 1):
                tmp = row[j]
                cost = 0 if a[i - 1] == b[j - 1] else 1
                best = prev_diag + cost
                if row[j] + 1 < best:
                    best = row[j] + 1
                if row[j - 1] + 1 < best:
                    best = row[j - 1] + 1
                row[j] = best
                prev_diag = tmp
        return row[lb]
    finally:
        free(row)


def ngram_overlap(int[::1] a, int[::1] b, int n):
    """Clipped n-gram matches between int32 id arrays.

    Returns (matches, total_a, total_b); each distinct gram contributes
    min(count_a, count_b) to matches.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    cdef Py_ssize_t total_a = la - n + 1 if la >= n else 0
    cdef Py_ssize_t total_b = lb - n + 1 if lb >= n else 0
    if total_a == 0 or total_b == 0:
        return 0, total_a, total_b

    # Ids are dense (callers remap); grams pack into one int64 when the
    # id base allows, otherwise fall back to tuple keys.
    cdef long long base = 1
    cdef Py_ssize_t i, k
    cdef int v
    for i in range(la):
        v = a[i]
        if <long long> v >= base:
            base = <long long> v + 1
    for i in range(lb):
        v = b[i]
        if <long long> v >= base:
            base = <long long> v + 1

    cdef bint packable = True
    cdef long long cap = 1
    for k in range(n):
        if cap > (<long long> 1 << 62) // base:
            packable = False
            break
        cap *= base

    counts = {}
    cdef long long code
    cdef Py_ssize_t matches = 0
    cdef object key
    if packable:
        for i in range(total_a):
            code = 0
            for k in range(n):
                code = code * base + a[i + k]
            counts[code] = counts.get(code, 0) + 1
        for i in range(total_b):
            code = 0
            for k in range(n):
                code = code * base + b[i + k]
            left = counts.get(code, 0)
            if left:
                counts[code] = left - 1
                matches += 1
    else:
        for i in range(total_a):
            key = tuple(a[i + k] for k in range(n))
            counts[key] = counts.get(key, 0) + 1
        for i in range(total_b):
            key = tuple(b[i + k] for k in range(n))
            left = counts.get(key, 0)
            if left:
                counts[key] = left - 1
                matches += 1
    return matches, total_a, total_b
