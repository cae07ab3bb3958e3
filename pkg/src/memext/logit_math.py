"""Decoding-distribution transforms and exact-suffix probabilities.

Everything here works on sparse :class:`LogitRow` objects: the top-M raw
logits of one position plus the target token, its rank, and the
full-vocabulary logsumexp.  That is enough to evaluate temperature scaling
and top-k truncation with renormalization exactly for any ``k <= M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from memext.errors import InsufficientWidthError

NEG_INF = float("-inf")


@dataclass(frozen=True)
class DecodingConfig:
    """Sampling scheme being audited.

    ``top_k=None`` means no truncation.  ``prepend_bos`` is honored by the
    scoring driver, not by the math in this module.
    """

    temperature: float = 1.0
    top_k: Optional[int] = 40
    prepend_bos: bool = True

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError(f"top_k must be >= 1 or None, got {self.top_k}")

    @classmethod
    def greedy(cls, prepend_bos=True):
        return cls(temperature=1.0, top_k=1, prepend_bos=prepend_bos)

    def effective_top_k(self, vocab_size):
        """``top_k`` with truncation at or above the vocabulary size dropped."""
        if self.top_k is None or self.top_k >= vocab_size:
            return None
        return self.top_k

    def to_dict(self):
        return {
            "temperature": self.temperature,
            "top_k": self.top_k,
            "prepend_bos": self.prepend_bos,
        }


@dataclass(frozen=True)
class LogitRow:
    """Sparse view of the next-token distribution at one position.

    ``entries`` holds ``(token_id, raw_logit)`` pairs sorted by logit
    descending, ties by ascending token id.  ``logsumexp_full`` is
    ``log(sum(exp(logit / temperature)))`` over the whole vocabulary,
    computed by the provider at ``temperature``.
    """

    entries: tuple
    target_token: int
    target_logit: float
    target_rank: int
    logsumexp_full: float
    temperature: float = 1.0

    def __post_init__(self):
        if self.target_rank < 1:
            raise ValueError("target_rank is 1-based")
        if self.target_rank <= len(self.entries):
            tok, logit = self.entries[self.target_rank - 1]
            if tok != self.target_token or logit != self.target_logit:
                raise ValueError(
                    f"entry at rank {self.target_rank} is {tok}, expected target "
                    f"{self.target_token} with logit {self.target_logit}"
                )


@dataclass(frozen=True)
class SuffixScore:
    logprob: float
    prob: float
    impossible: bool
    per_token_logprobs: tuple = field(default=())

    @classmethod
    def from_logprob(cls, logprob, per_token=()):
        if logprob == NEG_INF:
            return cls(NEG_INF, 0.0, True, tuple(per_token))
        # exp may underflow to 0.0 here; logprob keeps the information.
        return cls(logprob, math.exp(logprob), False, tuple(per_token))


def logsumexp(values: Sequence[float]) -> float:
    if not values:
        return NEG_INF
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


def conditional_token_logprob(row: LogitRow, cfg: DecodingConfig) -> float:
    """Log-probability of ``row.target_token`` under temperature and top-k.

    Returns ``-inf`` when the target falls outside the top-k.
    """
    t = cfg.temperature
    k = cfg.top_k
    if k is None:
        if row.temperature != t:
            raise ValueError(
                f"row normalizer was computed at temperature {row.temperature}, "
                f"config asks for {t}"
            )
        return row.target_logit / t - row.logsumexp_full
    if k > len(row.entries):
        raise InsufficientWidthError(
            f"insufficient top-M width: top_k={k} but row carries {len(row.entries)} entries"
        )
    if row.target_rank > k:
        return NEG_INF
    if k == 1:
        return 0.0
    kept = [logit / t for _, logit in row.entries[:k]]
    return row.target_logit / t - logsumexp(kept)


def sequence_score(rows: Sequence[LogitRow], cfg: DecodingConfig) -> SuffixScore:
    """Probability of generating every target in ``rows`` in order."""
    total = 0.0
    per_token = []
    for row in rows:
        lp = conditional_token_logprob(row, cfg)
        per_token.append(lp)
        if lp == NEG_INF:
            return SuffixScore.from_logprob(NEG_INF, per_token)
        total += lp
    return SuffixScore.from_logprob(total, per_token)


def greedy_match_score(rows: Sequence[LogitRow], cfg: Optional[DecodingConfig] = None) -> SuffixScore:
    """Greedy (T=k=1) discoverable extraction: 1 if every target is the argmax."""
    if cfg is None:
        cfg = DecodingConfig.greedy()
    if cfg.top_k != 1:
        raise ValueError(f"greedy scoring needs top_k == 1, got {cfg.top_k}")
    return sequence_score(rows, cfg)


def naive_product(probs: Sequence[float]) -> float:
    """Plain product of per-token probabilities (underflows; for comparison only)."""
    out = 1.0
    for p in probs:
        out *= p
    return out


def entry_logprobs(row: LogitRow, cfg: DecodingConfig) -> list:
    """Log-probabilities of ``row.entries`` in order; entries past top-k get ``-inf``."""
    t = cfg.temperature
    k = cfg.top_k
    scaled = [logit / t for _, logit in row.entries]
    if k is None:
        if row.temperature != t:
            raise ValueError(
                f"row normalizer was computed at temperature {row.temperature}, "
                f"config asks for {t}"
            )
        return [s - row.logsumexp_full for s in scaled]
    if k > len(row.entries):
        raise InsufficientWidthError(
            f"insufficient top-M width: top_k={k} but row carries {len(row.entries)} entries"
        )
    norm = logsumexp(scaled[:k])
    return [s - norm if i < k else NEG_INF for i, s in enumerate(scaled)]
