"""Client-side deterministic beam search over a provider's next-token rows."""

from __future__ import annotations

from typing import List, Optional, Sequence

from memext.logit_math import NEG_INF, DecodingConfig, entry_logprobs
from memext.provider.base import next_token_row


def _normalized(logprob, length, length_penalty):
    return logprob / (length ** length_penalty)


def generate_step(
    provider,
    context: Sequence[int],
    width: int,
    new_tokens: int,
    cfg: Optional[DecodingConfig] = None,
    length_penalty: float = 1.0,
    eos_token: Optional[int] = None,
) -> List[int]:
    """Beam search for ``new_tokens`` tokens after ``context``.

    Each live hypothesis proposes its top-``width`` continuations.  The pool
    is ranked by (higher cumulative logprob, lower token id, lower parent
    index).  A candidate ending in EOS is retired as finished when it ranks
    within the first ``width``; otherwise live candidates fill the next beam.
    When the budget is spent, live beams join the finished pool and the
    winner maximizes ``logprob / length ** length_penalty``.  The returned
    tokens may end in EOS.
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if new_tokens < 1:
        raise ValueError("new_tokens must be >= 1")
    tok = provider.tokenizer
    if width > tok.vocab_size:
        raise ValueError(f"beam width {width} exceeds vocabulary size {tok.vocab_size}")
    if cfg is None:
        cfg = DecodingConfig(temperature=1.0, top_k=None, prepend_bos=False)
    if eos_token is None:
        eos_token = tok.eos_token
    top_k = cfg.effective_top_k(tok.vocab_size)
    cfg = DecodingConfig(cfg.temperature, top_k, cfg.prepend_bos)
    top_m = max(width, top_k or 0)
    context = tuple(context)

    alive = [((), 0.0)]
    finished = []
    for _ in range(new_tokens):
        pool = []
        for parent, (toks, lp) in enumerate(alive):
            row = next_token_row(provider, context + toks, cfg.temperature, top_m)
            lps = entry_logprobs(row, cfg)
            for (token, _), clp in zip(row.entries[:width], lps[:width]):
                if clp == NEG_INF:
                    continue
                pool.append((lp + clp, token, parent))
        pool.sort(key=lambda c: (-c[0], c[1], c[2]))
        nxt = []
        for rank, (lp, token, parent) in enumerate(pool):
            toks = alive[parent][0] + (token,)
            if token == eos_token:
                if rank < width:
                    finished.append((toks, lp))
                continue
            nxt.append((toks, lp))
            if len(nxt) == width:
                break
        alive = nxt
        if not alive:
            break
    finished.extend(alive)
    if not finished:
        return []
    best_toks, _ = max(
        finished, key=lambda h: _normalized(h[1], len(h[0]), length_penalty)
    )
    return list(best_toks)
