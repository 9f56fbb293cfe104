"""Pure-Python kernel implementations.

Reference semantics for csmt.kernels._speed; selected when the compiled
extension is unavailable or CSMT_PURE_KERNELS=1 is set.  Both kernels
take sequences of int ids; callers densify arbitrary items first.
"""

from __future__ import annotations

from typing import Sequence


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Unit-cost edit distance between two id sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev = cur
    return prev[-1]


def ngram_overlap(a: Sequence[int], b: Sequence[int], n: int) -> tuple[int, int, int]:
    """Clipped n-gram matches between id sequences.

    Returns (matches, total_a, total_b); each distinct gram contributes
    min(count_a, count_b) to matches.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    total_a = max(len(a) - n + 1, 0)
    total_b = max(len(b) - n + 1, 0)
    if total_a == 0 or total_b == 0:
        return 0, total_a, total_b
    counts: dict[tuple[int, ...], int] = {}
    for i in range(total_a):
        g = tuple(a[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    matches = 0
    for i in range(total_b):
        g = tuple(b[i : i + n])
        left = counts.get(g, 0)
        if left:
            counts[g] = left - 1
            matches += 1
    return matches, total_a, total_b
