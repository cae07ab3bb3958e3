"""Memorized spans, whole-document coverage, and per-character heatmaps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Sequence

import numpy as np

from memext import kernels
from memext.corpus import BookDocument, Example
from memext.errors import DataError
from memext.logit_math import SuffixScore


@dataclass(frozen=True)
class ScoredExample:
    """Location of an example in its document plus its extraction probability."""

    doc_id: str
    char_start: int
    char_end: int
    suffix_char_start: int
    prob: float

    @classmethod
    def from_example(cls, example: Example, score):
        prob = score.prob if isinstance(score, SuffixScore) else float(score)
        return cls(example.doc_id, example.char_start, example.char_end,
                   example.suffix_span[0], prob)


@dataclass(frozen=True)
class MemorizedSpan:
    doc_id: str
    char_start: int
    char_end: int
    max_prob: float
    example_count: int


@dataclass(frozen=True)
class HeatmapSeries:
    """Per-character maxima stored as runs: ``runs[i] = (start, value)``.

    Run ``i`` covers ``[runs[i][0], runs[i+1][0])``; the last run ends at
    ``char_len``.
    """

    doc_id: str
    char_len: int
    runs: tuple

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.char_len)
        bounds = [s for s, _ in self.runs] + [self.char_len]
        for (start, value), end in zip(self.runs, bounds[1:]):
            out[start:end] = value
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["char_pos", "max_prob"])
        for start, value in self.runs:
            w.writerow([start, repr(float(value))])
        return buf.getvalue()


def merge_spans(scores: Iterable[ScoredExample], threshold: float) -> List[MemorizedSpan]:
    """Union the character spans of examples with ``prob >= threshold``.

    Overlapping or touching intervals merge.  Output is sorted by
    ``(doc_id, char_start)`` and pairwise disjoint within a document.
    """
    kept = sorted(
        (s for s in scores if s.prob >= threshold),
        key=lambda s: (s.doc_id, s.char_start, s.char_end),
    )
    spans: List[MemorizedSpan] = []
    cur = None
    for s in kept:
        if cur is not None and s.doc_id == cur[0] and s.char_start <= cur[2]:
            cur[2] = max(cur[2], s.char_end)
            cur[3] = max(cur[3], s.prob)
            cur[4] += 1
            continue
        if cur is not None:
            spans.append(MemorizedSpan(*cur))
        cur = [s.doc_id, s.char_start, s.char_end, s.prob, 1]
    if cur is not None:
        spans.append(MemorizedSpan(*cur))
    return spans


def coverage(spans: Sequence[MemorizedSpan], doc: BookDocument) -> float:
    """Fraction of ``doc``'s characters inside ``spans``."""
    if doc.char_len == 0:
        raise DataError(f"document {doc.doc_id!r} is empty")
    total = 0
    for sp in spans:
        if sp.doc_id != doc.doc_id:
            continue
        if not 0 <= sp.char_start < sp.char_end <= doc.char_len:
            raise DataError(
                f"span [{sp.char_start}, {sp.char_end}) outside document "
                f"{doc.doc_id!r} of {doc.char_len} characters"
            )
        total += sp.char_end - sp.char_start
    return total / doc.char_len


def coverage_report(scores: Sequence[ScoredExample], doc: BookDocument, thresholds: Iterable[float]) -> Dict[float, float]:
    mine = [s for s in scores if s.doc_id == doc.doc_id]
    return {t: coverage(merge_spans(mine, t), doc) for t in thresholds}


def heatmap(scores: Iterable[ScoredExample], doc: BookDocument) -> HeatmapSeries:
    """Highest extraction probability of any suffix covering each character."""
    mine = [s for s in scores if s.doc_id == doc.doc_id]
    dense = kernels.heatmap_max(
        doc.char_len,
        np.array([s.suffix_char_start for s in mine], dtype=np.int64),
        np.array([s.char_end for s in mine], dtype=np.int64),
        np.array([s.prob for s in mine], dtype=np.float64),
    )
    return HeatmapSeries(doc.doc_id, doc.char_len, run_length_encode(dense))


def run_length_encode(values: np.ndarray) -> tuple:
    if values.shape[0] == 0:
        return ()
    change = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate(([0], change))
    return tuple((int(s), float(values[s])) for s in starts)


def location_series(scores: Iterable[ScoredExample]) -> List[tuple]:
    """Raw ``(doc_id, char_start, prob)`` points for location plots."""
    return [(s.doc_id, s.char_start, s.prob) for s in sorted(scores, key=lambda s: (s.doc_id, s.char_start))]


def spans_to_json(spans: Sequence[MemorizedSpan]) -> str:
    return json.dumps([asdict(s) for s in spans], indent=2)
