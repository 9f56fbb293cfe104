"""Sequence kernels with a compiled core and a pure-Python fallback.

The compiled extension (csmt.kernels._speed) is picked at import time
when present; CSMT_PURE_KERNELS=1 forces the fallback.  BACKEND names
the active implementation.  Public entry points accept sequences of any
hashable items and densify them to int ids before dispatching.
"""

from __future__ import annotations

import importlib
import os
from typing import Hashable, Sequence

from . import _pure

_speed = None
if not os.environ.get("CSMT_PURE_KERNELS"):
    try:
        _speed = importlib.import_module("csmt.kernels._speed")
    except ImportError:
        _speed = None

_impl = _speed if _speed is not None else _pure
BACKEND = "compiled" if _speed is not None else "pure"

if BACKEND == "compiled":
    import numpy as _np

__all__ = ["BACKEND", "edit_distance", "ngram_overlap", "implementations"]


def _encode(a: Sequence[Hashable], b: Sequence[Hashable]):
    ids: dict[Hashable, int] = {}
    xa = [ids.setdefault(x, len(ids)) for x in a]
    xb = [ids.setdefault(x, len(ids)) for x in b]
    if BACKEND == "compiled":
        return _np.asarray(xa, dtype=_np.int32), _np.asarray(xb, dtype=_np.int32)
    return xa, xb


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unit-cost edit distance between two sequences."""
    xa, xb = _encode(a, b)
    return int(_impl.levenshtein(xa, xb))


def ngram_overlap(a: Sequence[Hashable], b: Sequence[Hashable], n: int) -> tuple[int, int, int]:
    """Clipped n-gram matches and gram totals for order n.

    Returns (matches, total_a, total_b); each distinct gram contributes
    min(count_a, count_b) to matches.
    """
    xa, xb = _encode(a, b)
    m, ta, tb = _impl.ngram_overlap(xa, xb, n)
    return int(m), int(ta), int(tb)


def implementations() -> dict[str, object]:
    """Importable kernel modules keyed by backend name."""
    out: dict[str, object] = {"pure": _pure}
    if _speed is not None:
        out["compiled"] = _speed
    return out
