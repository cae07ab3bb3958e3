import difflib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memext import _kernels_py, kernels

BACKENDS = [pytest.param(_kernels_py, id="python")]
try:
    from memext import _kernels

    BACKENDS.append(pytest.param(_kernels, id="cython"))
except ImportError:
    BACKENDS.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))

seqs = st.lists(st.integers(0, 5), max_size=60)


def merged(blocks):
    """Collapse adjacent blocks the way difflib reports them."""
    out = []
    for i, j, k in blocks:
        if out and out[-1][0] + out[-1][2] == i and out[-1][1] + out[-1][2] == j:
            out[-1] = (out[-1][0], out[-1][1], out[-1][2] + k)
        else:
            out.append((i, j, k))
    return out


def difflib_blocks(a, b):
    sm = difflib.SequenceMatcher(None, a, b, autojunk=False)
    return [tuple(m) for m in sm.get_matching_blocks() if m.size]


def brute_heatmap(n, starts, ends, probs):
    out = [0.0] * n
    for c in range(n):
        for s, e, p in zip(starts, ends, probs):
            if s <= c < e:
                out[c] = max(out[c], p)
    return np.array(out)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("impl", BACKENDS)
class TestKernels:
    def test_simple_blocks(self, impl):
        a = np.array([1, 2, 3, 4])
        b = np.array([2, 3, 4, 5])
        assert impl.matching_blocks(a, b) == [(1, 0, 3)]

    def test_empty(self, impl):
        empty = np.array([], dtype=np.int64)
        assert impl.matching_blocks(empty, np.array([1])) == []
        assert impl.heatmap_max(0, empty, empty, np.array([], dtype=float)).shape == (0,)

    @settings(max_examples=300, deadline=None)
    @given(a=seqs, b=seqs)
    def test_blocks_match_difflib(self, impl, a, b):
        got = impl.matching_blocks(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64))
        assert merged(got) == difflib_blocks(a, b)
        for i, j, k in got:
            assert a[i:i + k] == b[j:j + k]

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(0, 40),
        spans=st.lists(st.tuples(st.integers(-5, 45), st.integers(0, 20), st.floats(0, 1)), max_size=15),
    )
    def test_heatmap_matches_brute_force(self, impl, n, spans):
        starts = np.array([s for s, _, _ in spans], dtype=np.int64)
        ends = np.array([s + w for s, w, _ in spans], dtype=np.int64)
        probs = np.array([p for _, _, p in spans], dtype=np.float64)
        got = impl.heatmap_max(n, starts, ends, probs)
        np.testing.assert_array_equal(got, brute_heatmap(n, starts, ends, probs))


def test_backends_agree_on_large_input():
    if kernels.BACKEND != "cython":
        pytest.skip("extension not built")
    from memext import _kernels

    rng = np.random.default_rng(4)
    a = rng.integers(0, 30, size=3000)
    b = a.copy()
    b[rng.integers(0, 3000, size=200)] = rng.integers(0, 30, size=200)
    assert _kernels.matching_blocks(a, b) == _kernels_py.matching_blocks(a, b)
    starts = rng.integers(0, 5000, size=500)
    ends = starts + rng.integers(1, 400, size=500)
    probs = rng.uniform(size=500)
    np.testing.assert_array_equal(
        _kernels.heatmap_max(5000, starts, ends, probs),
        _kernels_py.heatmap_max(5000, starts, ends, probs),
    )
