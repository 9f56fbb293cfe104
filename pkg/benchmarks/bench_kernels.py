"""Compare the compiled kernels against the pure-Python fallback.

Run:  python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import random
import statistics
import time

import numpy as np

from csmt.kernels import BACKEND, implementations


def _bench(fn, args_list, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.mean(times)


def _encode_for(name, seq):
    if name == "compiled":
        return np.asarray(seq, dtype=np.int32)
    return list(seq)


def main():
    rng = random.Random(1234)
    impls = implementations()
    print(f"active backend: {BACKEND}")
    if len(impls) < 2:
        print("compiled extension unavailable; showing pure timings only")

    edit_raw = [
        ([rng.randrange(50) for _ in range(200)], [rng.randrange(50) for _ in range(200)])
        for _ in range(50)
    ]
    ngram_raw = [
        ([rng.randrange(200) for _ in range(2000)], [rng.randrange(200) for _ in range(2000)], n)
        for n in (1, 2, 3, 4)
        for _ in range(25)
    ]

    print(f"\n{'kernel':<16} {'backend':<10} {'best (s)':>10} {'mean (s)':>10}")
    results: dict[tuple[str, str], float] = {}
    for name, mod in sorted(impls.items()):
        edit_cases = [(_encode_for(name, a), _encode_for(name, b)) for a, b in edit_raw]
        ngram_cases = [
            (_encode_for(name, a), _encode_for(name, b), n) for a, b, n in ngram_raw
        ]
        for label, fn, cases in (
            ("edit_distance", mod.levenshtein, edit_cases),
            ("ngram_overlap", mod.ngram_overlap, ngram_cases),
        ):
            best, mean = _bench(fn, cases)
            results[(label, name)] = best
            print(f"{label:<16} {name:<10} {best:>10.4f} {mean:>10.4f}")

    if len(impls) == 2:
        for label in ("edit_distance", "ngram_overlap"):
            speedup = results[(label, "pure")] / results[(label, "compiled")]
            print(f"{label}: compiled is {speedup:.1f}x the pure backend")
        for a, b in edit_raw[:5]:
            got = {
                name: mod.levenshtein(_encode_for(name, a), _encode_for(name, b))
                for name, mod in impls.items()
            }
            assert len(set(got.values())) == 1, got
        print("agreement check passed on sampled inputs")


if __name__ == "__main__":
    main()
