"""Deterministic in-process reference model: an add-alpha smoothed n-gram."""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from memext.errors import ContextLengthError
from memext.logit_math import LogitRow
from memext.provider.base import ScoreRequest, Tokenizer, row_from_logits


class ReferenceModel:
    """Order-``order`` n-gram over a fixed vocabulary.

    The next-token distribution for a context is ``(w + alpha) / (W + alpha*V)``
    where ``w`` are the stored weights for the last ``order - 1`` tokens and
    ``W`` their sum.  Unseen contexts are uniform.  Contexts shorter than
    ``order - 1`` (sequence starts) are keyed by what is available.
    """

    def __init__(self, vocab_size: int, order: int = 3, alpha: float = 1e-6, max_context: Optional[int] = None):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        self.vocab_size = vocab_size
        self.order = order
        self.alpha = alpha
        self.max_context = max_context
        self.table: Dict[tuple, np.ndarray] = {}
        self._cache: Dict[tuple, np.ndarray] = {}

    def context_key(self, context: Sequence[int]) -> tuple:
        n = self.order - 1
        if n == 0:
            return ()
        return tuple(context[-n:])

    def fit(self, sequences: Iterable[Sequence[int]]) -> "ReferenceModel":
        n = self.order - 1
        counts = defaultdict(lambda: defaultdict(float))
        for seq in sequences:
            seq = list(seq)
            for i, tok in enumerate(seq):
                counts[self.context_key(seq[max(0, i - n):i])][tok] += 1.0
        for key, row in counts.items():
            w = np.zeros(self.vocab_size)
            for tok, c in row.items():
                w[tok] += c
            self.set_weights(key, w)
        return self

    def set_weights(self, key: tuple, weights) -> None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (self.vocab_size,) or (w < 0).any():
            raise ValueError("weights must be a non-negative vector of vocab_size entries")
        self.table[tuple(key)] = w
        self._cache.pop(tuple(key), None)

    def next_token_probs(self, context: Sequence[int]) -> np.ndarray:
        key = self.context_key(context)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        w = self.table.get(key)
        if w is None:
            probs = np.full(self.vocab_size, 1.0 / self.vocab_size)
        else:
            probs = (w + self.alpha) / (w.sum() + self.alpha * self.vocab_size)
        probs.setflags(write=False)
        self._cache[key] = probs
        return probs

    def logits(self, context: Sequence[int]) -> np.ndarray:
        return np.log(self.next_token_probs(context))

    def sequence_logprob(self, tokens: Sequence[int], start: int) -> float:
        """Chain-rule log-probability of ``tokens[start:]`` given ``tokens[:start]`` (T=1, no truncation)."""
        n = self.order - 1
        total = 0.0
        for i in range(start, len(tokens)):
            total += float(np.log(self.next_token_probs(tokens[max(0, i - n):i])[tokens[i]]))
        return total


class ReferenceProvider:
    """In-process provider wrapping a :class:`ReferenceModel` and a tokenizer."""

    def __init__(self, model: ReferenceModel, tokenizer: Tokenizer):
        if model.vocab_size != tokenizer.vocab_size:
            raise ValueError(
                f"model vocab {model.vocab_size} != tokenizer vocab {tokenizer.vocab_size}"
            )
        self.model = model
        self.tokenizer = tokenizer

    def tokenize(self, text: str) -> List[int]:
        return self.tokenizer.tokenize(text)

    def detokenize(self, tokens: Sequence[int]) -> str:
        return self.tokenizer.detokenize(tokens)

    def score_positions(self, req: ScoreRequest) -> List[LogitRow]:
        tokens = req.tokens
        limit = self.model.max_context
        if limit is not None and len(tokens) > limit:
            raise ContextLengthError(
                f"context of {len(tokens)} tokens exceeds maximum {limit}", limit=limit
            )
        n = self.model.order - 1
        rows = []
        for i in range(req.suffix_start - 1, len(tokens)):
            logits = self.model.logits(tokens[max(0, i - n):i])
            rows.append(row_from_logits(logits, tokens[i], req.temperature, req.top_m))
        return rows

    def info(self):
        t = self.tokenizer
        return {
            "vocab_size": t.vocab_size,
            "bos_token": t.bos_token,
            "eos_token": t.eos_token,
            "max_context": self.model.max_context,
        }
