import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memext.analysis import (
    MemorizedSpan,
    ScoredExample,
    coverage,
    coverage_report,
    heatmap,
    location_series,
    merge_spans,
    spans_to_json,
)
from memext.corpus import BookDocument
from memext.errors import DataError

DOC = BookDocument("b", "x" * 200)


def se(start, end, prob, doc="b", suffix=None):
    return ScoredExample(doc, start, end, start if suffix is None else suffix, prob)


class TestMergeSpans:
    def test_overlap_and_touch_merge(self):
        spans = merge_spans([se(0, 10, 0.5), se(10, 20, 0.9), se(30, 40, 0.2), se(35, 50, 0.3)], 0.1)
        assert [(s.char_start, s.char_end, s.max_prob, s.example_count) for s in spans] == [
            (0, 20, 0.9, 2),
            (30, 50, 0.3, 2),
        ]

    def test_threshold_inclusive(self):
        assert len(merge_spans([se(0, 5, 0.5)], 0.5)) == 1
        assert merge_spans([se(0, 5, 0.4)], 0.5) == []

    def test_documents_kept_apart(self):
        spans = merge_spans([se(0, 10, 1.0, "a"), se(5, 15, 1.0, "b")], 0.5)
        assert [(s.doc_id, s.char_start) for s in spans] == [("a", 0), ("b", 5)]

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.integers(0, 190), st.integers(1, 10), st.floats(0, 1)), max_size=30),
           st.floats(0, 1))
    def test_union_matches_bitmap(self, items, t):
        scores = [se(s, s + w, p) for s, w, p in items]
        spans = merge_spans(scores, t)
        mask = np.zeros(200, dtype=bool)
        for s in scores:
            if s.prob >= t:
                mask[s.char_start:s.char_end] = True
        assert coverage(spans, DOC) == pytest.approx(mask.mean())
        for a, b in zip(spans, spans[1:]):
            assert a.char_end < b.char_start


class TestCoverage:
    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(1)
        scores = [se(int(s), int(s) + 20, float(p)) for s, p in zip(rng.integers(0, 180, 40), rng.uniform(size=40))]
        rep = coverage_report(scores, DOC, [0.0, 0.1, 0.5, 0.9, 1.0])
        vals = list(rep.values())
        assert vals == sorted(vals, reverse=True)

    def test_out_of_bounds(self):
        with pytest.raises(DataError):
            coverage([MemorizedSpan("b", 190, 210, 1.0, 1)], DOC)

    def test_empty_doc(self):
        with pytest.raises(DataError):
            coverage([], BookDocument("e", ""))


class TestHeatmap:
    def test_max_over_suffix_spans(self):
        scores = [se(0, 50, 0.2, suffix=25), se(40, 90, 0.7, suffix=60), se(0, 10, 0.9, doc="other")]
        hm = heatmap(scores, DOC)
        dense = hm.to_dense()
        assert dense.shape == (200,)
        assert (dense[:25] == 0).all()
        assert (dense[25:50] == 0.2).all()
        assert (dense[50:60] == 0).all()
        assert (dense[60:90] == 0.7).all()
        assert (dense[90:] == 0).all()
        assert hm.runs == ((0, 0.0), (25, 0.2), (50, 0.0), (60, 0.7), (90, 0.0))

    def test_csv(self):
        hm = heatmap([se(0, 10, 0.5)], BookDocument("b", "y" * 20))
        rows = list(csv.reader(io.StringIO(hm.to_csv())))
        assert rows == [["char_pos", "max_prob"], ["0", "0.5"], ["10", "0.0"]]


def test_location_series_sorted():
    pts = location_series([se(50, 60, 0.1), se(5, 10, 0.3)])
    assert pts == [("b", 5, 0.3), ("b", 50, 0.1)]


def test_spans_json():
    data = json.loads(spans_to_json([MemorizedSpan("b", 0, 5, 0.5, 2)]))
    assert data == [{"doc_id": "b", "char_start": 0, "char_end": 5, "max_prob": 0.5, "example_count": 2}]


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 190), st.integers(1, 10), st.floats(0, 1)), max_size=20), st.randoms())
def test_merge_spans_order_independent(items, rnd):
    scores = [se(s, s + w, p) for s, w, p in items]
    shuffled = list(scores)
    rnd.shuffle(shuffled)
    assert merge_spans(shuffled, 0.3) == merge_spans(scores, 0.3)


def test_heatmap_dominates_contributors():
    rng = np.random.default_rng(8)
    scores = [se(int(s), int(s) + 30, float(p), suffix=int(s) + 10)
              for s, p in zip(rng.integers(0, 170, 25), rng.uniform(size=25))]
    dense = heatmap(scores, DOC).to_dense()
    for c in range(200):
        covering = [s.prob for s in scores if s.suffix_char_start <= c < s.char_end]
        if covering:
            assert dense[c] == max(covering)
        else:
            assert dense[c] == 0.0
