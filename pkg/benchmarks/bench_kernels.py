"""Time the compiled kernels against the pure-Python fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and input size with the best-of-N wall time of
each backend and the speedup.  Inputs are seeded, so runs are comparable.
"""

import argparse
import time

import numpy as np

from memext import _kernels_py

try:
    from memext import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def edited_copy(rng, a, vocab, n_edits):
    b = a.copy()
    idx = rng.integers(0, len(a), size=n_edits)
    b[idx] = rng.integers(0, vocab, size=n_edits)
    return b


def blocks_inputs(rng, n, vocab):
    a = rng.integers(0, vocab, size=n)
    return a, edited_copy(rng, a, vocab, max(1, n // 50))


def heatmap_inputs(rng, n_chars, n_examples, width):
    starts = rng.integers(0, n_chars, size=n_examples)
    ends = starts + width
    probs = rng.uniform(size=n_examples)
    return n_chars, starts, ends, probs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for n, vocab in ((1_000, 500), (10_000, 2_000), (50_000, 5_000)):
        a, b = blocks_inputs(rng, n, vocab)
        cases.append((f"matching_blocks n={n}", "matching_blocks", (a, b)))
    for n_chars, n_ex in ((50_000, 5_000), (500_000, 50_000)):
        cases.append((f"heatmap_max chars={n_chars} examples={n_ex}", "heatmap_max",
                      heatmap_inputs(rng, n_chars, n_ex, 250)))

    print(f"{'case':45s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for label, name, inputs in cases:
        py = best_of(lambda: getattr(_kernels_py, name)(*inputs), args.repeat)
        if _kernels is None:
            print(f"{label:45s} {py:10.4f} {'n/a':>10s} {'':>8s}")
            continue
        fast = getattr(_kernels, name)
        ref = getattr(_kernels_py, name)(*inputs)
        assert np.array_equal(np.asarray(fast(*inputs)), np.asarray(ref)), label
        cy = best_of(lambda: fast(*inputs), args.repeat)
        print(f"{label:45s} {py:10.4f} {cy:10.4f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
