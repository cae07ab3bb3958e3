"""(n, p)-discoverable extraction algebra and extraction-rate reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from memext.errors import UnextractableError
from memext.logit_math import SuffixScore

DEFAULT_THRESHOLDS = (0.75, 0.5, 0.1, 0.01, 1e-4)


@dataclass(frozen=True)
class NPQuery:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


@dataclass
class RateReport:
    total_examples: int
    greedy_rate: float
    rate_at_thresholds: dict = field(default_factory=dict)
    max_rate: float = 0.0

    def to_dict(self):
        return {
            "total_examples": self.total_examples,
            "greedy_rate": self.greedy_rate,
            "rate_at_thresholds": {repr(t): r for t, r in self.rate_at_thresholds.items()},
            "max_rate": self.max_rate,
        }


def prob_at_n(p_z: float, n: int) -> float:
    """Probability of at least one verbatim hit in ``n`` independent prompts."""
    if not 0.0 <= p_z <= 1.0:
        raise ValueError(f"p_z must lie in [0, 1], got {p_z}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if p_z == 0.0:
        return 0.0
    if p_z == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p_z))


def n_for_p(p_z: float, p: float) -> int:
    """Smallest number of prompts ``n`` with ``prob_at_n(p_z, n) >= p``."""
    if not 0.0 <= p_z <= 1.0:
        raise ValueError(f"p_z must lie in [0, 1], got {p_z}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p_z == 0.0:
        raise UnextractableError("unextractable: no finite n reaches p when p_z == 0")
    if p_z == 1.0:
        return 1
    n = max(1, math.ceil(math.log1p(-p) / math.log1p(-p_z)))
    # the closed form can land one off near integer boundaries
    while n > 1 and prob_at_n(p_z, n - 1) >= p:
        n -= 1
    while prob_at_n(p_z, n) < p:
        n += 1
    return n


def expected_queries(p_z: float) -> float:
    """Mean number of prompts until the first verbatim hit."""
    if p_z <= 0.0:
        raise UnextractableError("unextractable: p_z == 0 needs infinitely many queries")
    if p_z > 1.0:
        raise ValueError(f"p_z must be <= 1, got {p_z}")
    return 1.0 / p_z


def aggregate_rates(
    scores: Sequence[tuple],
    thresholds: Iterable[float] = DEFAULT_THRESHOLDS,
) -> RateReport:
    """Fold ``(sampling_score, greedy_score)`` pairs into a :class:`RateReport`.

    Sampling scores may be :class:`SuffixScore` objects or bare probabilities.
    """
    if not scores:
        raise ValueError("cannot aggregate rates over zero examples")
    thresholds = list(thresholds)
    total = len(scores)
    greedy_hits = 0
    max_hits = 0
    hits = {t: 0 for t in thresholds}
    for sampling, greedy in scores:
        ps = _prob(sampling)
        if _prob(greedy) == 1.0:
            greedy_hits += 1
        if ps > 0.0:
            max_hits += 1
        for t in thresholds:
            if ps >= t:
                hits[t] += 1
    return RateReport(
        total_examples=total,
        greedy_rate=greedy_hits / total,
        rate_at_thresholds={t: hits[t] / total for t in thresholds},
        max_rate=max_hits / total,
    )


def rate_curve(probs: Sequence[float], ns: Iterable[int], p: float) -> list:
    """``(n, rate)`` pairs: fraction of examples that are (n, p)-extractable."""
    probs = list(probs)
    if not probs:
        raise ValueError("cannot compute rates over zero examples")
    out = []
    for n in ns:
        hits = sum(1 for pz in probs if pz > 0.0 and prob_at_n(pz, n) >= p)
        out.append((n, hits / len(probs)))
    return out


def _prob(score) -> float:
    if isinstance(score, SuffixScore):
        return score.prob
    return float(score)
