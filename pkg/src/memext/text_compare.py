"""Similarity between a reconstructed document and its ground truth."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, List, Sequence

import numpy as np

from memext import kernels

_SPACED_DOTS = re.compile(r"\.(?: \.)+")
_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class NormalizationRules:
    strip_underscores: bool = True
    unify_ellipses: bool = True


def normalize(text: str, rules: NormalizationRules = NormalizationRules()) -> str:
    """Remove underscores and collapse spaced ellipses (``. . .`` -> ``...``)."""
    if rules.strip_underscores:
        text = text.replace("_", "")
    if rules.unify_ellipses:
        text = _SPACED_DOTS.sub(lambda m: "." * m.group(0).count("."), text)
    return text


def words(text: str) -> List[str]:
    return text.split()


def sentences(text: str) -> List[str]:
    text = text.strip()
    if not text:
        return []
    return _SENTENCE_END.split(text)


def tfidf_cosine(a: str, b: str, smooth_idf: bool = True) -> float:
    """Cosine of bag-of-words TF-IDF vectors over the two-document corpus.

    TF is the raw count; IDF is ``ln(2 / df)``, plus one when ``smooth_idf``
    so terms shared by both documents keep a nonzero weight.
    """
    ca, cb = Counter(words(a)), Counter(words(b))
    if not ca or not cb:
        raise ValueError("tfidf_cosine needs two texts with at least one word each")
    shift = 1.0 if smooth_idf else 0.0
    idf = {1: math.log(2 / 1) + shift, 2: math.log(2 / 2) + shift}

    def weights(c, other):
        return {t: n * idf[2 if t in other else 1] for t, n in c.items()}

    wa, wb = weights(ca, cb), weights(cb, ca)
    dot = math.fsum(w * wb[t] for t, w in wa.items() if t in wb)
    na2 = math.fsum(w * w for w in wa.values())
    nb2 = math.fsum(w * w for w in wb.values())
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    return min(1.0, dot / math.sqrt(na2 * nb2))


def _encode(a: Sequence[Hashable], b: Sequence[Hashable]):
    ids = {}
    ea = np.fromiter((ids.setdefault(x, len(ids)) for x in a), dtype=np.int64, count=len(a))
    eb = np.fromiter((ids.setdefault(x, len(ids)) for x in b), dtype=np.int64, count=len(b))
    return ea, eb


def matching_blocks(a: Sequence[Hashable], b: Sequence[Hashable]) -> List[tuple]:
    """``(i, j, size)`` blocks of the recursive longest-match decomposition."""
    if not a or not b:
        return []
    ea, eb = _encode(a, b)
    return kernels.matching_blocks(ea, eb)


def gestalt_ratio(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """``2 * matched / (len(a) + len(b))``; two empty sequences score 1."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    matched = sum(k for _, _, k in matching_blocks(a, b))
    return 2.0 * matched / total


def compare(a: str, b: str, rules: NormalizationRules = NormalizationRules(), smooth_idf: bool = True) -> dict:
    """TF-IDF cosine plus word- and sentence-level gestalt ratios after normalization."""
    na, nb = normalize(a, rules), normalize(b, rules)
    return {
        "tfidf_cosine": tfidf_cosine(na, nb, smooth_idf=smooth_idf),
        "word_ratio": gestalt_ratio(words(na), words(nb)),
        "sentence_ratio": gestalt_ratio(sentences(na), sentences(nb)),
    }
