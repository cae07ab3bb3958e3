"""Rebuild a long document from a single seed prompt with windowed beam search."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from memext.errors import DataError, MemextError
from memext.logit_math import DecodingConfig
from memext.provider.beam import generate_step

logger = logging.getLogger(__name__)

CHAPTER_WORDS = (
    "One", "Two", "Three", "Four", "Five", "Six", "Seven", "Eight", "Nine",
    "Ten", "Eleven", "Twelve", "Thirteen", "Fourteen", "Fifteen", "Sixteen",
    "Seventeen",
)


@dataclass
class ReconstructionConfig:
    max_context_tokens: int = 3000
    step_tokens: int = 50
    beams: int = 8
    length_penalty: float = 1.2
    max_story_tokens: int = 113000
    chapter_words: tuple = CHAPTER_WORDS
    missed_chapter_gap: int = 10000
    temperature: float = 1.0
    prepend_bos: bool = True

    def __post_init__(self):
        if self.step_tokens < 1 or self.step_tokens >= self.max_context_tokens:
            raise ValueError("need 1 <= step_tokens < max_context_tokens")
        if self.beams < 1:
            raise ValueError("beams must be >= 1")
        self.chapter_words = tuple(self.chapter_words)

    @property
    def window(self) -> int:
        return self.max_context_tokens - self.step_tokens


@dataclass
class ChapterState:
    chapter_count: int = 1
    tokens_since_last_eos: int = 0


@dataclass
class LogEntry:
    generation: int
    prompt_text: str
    generated_text: str
    total_generated_tokens: int
    prompt_token_start: int
    prompt_token_count: int
    chapter_break: Optional[str] = None


@dataclass
class ReconstructionLog:
    seed_text: str
    seed_token_count: int
    generated_ids: List[int]
    entries: List[LogEntry] = field(default_factory=list)
    state: ChapterState = field(default_factory=ChapterState)

    @property
    def text(self) -> str:
        return self.seed_text + "".join(e.generated_text for e in self.entries)


class ReconstructionInterrupted(MemextError):
    """The provider failed mid-run; ``log`` holds everything up to the last step."""

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


def chapter_header(chapter_count: int, chapter_words: Sequence[str]) -> str:
    if 1 <= chapter_count <= len(chapter_words):
        return f"\n\nChapter {chapter_words[chapter_count - 1]}\n".upper()
    return "\n"


def handle_eos(chunk: Sequence[int], state: ChapterState, eos_token, tokenize: Callable, cfg: ReconstructionConfig):
    """Swap EOS tokens in ``chunk`` for a spelled-out chapter header.

    Mutates ``state``.  Returns ``(tokens, header_text_or_None)``.  When more
    than ``missed_chapter_gap`` tokens passed since the previous EOS, one
    chapter is assumed missed and the counter skips ahead by one extra.
    """
    chunk = list(chunk)
    state.tokens_since_last_eos += len(chunk)
    if eos_token is None or eos_token not in chunk:
        return chunk, None
    if state.tokens_since_last_eos >= cfg.missed_chapter_gap:
        logger.info("%d tokens since last EOS; assuming a missed chapter break",
                    state.tokens_since_last_eos)
        state.chapter_count += 1
    chunk = [t for t in chunk if t != eos_token]
    state.chapter_count += 1
    header = chapter_header(state.chapter_count, cfg.chapter_words)
    chunk.extend(tokenize(header))
    state.tokens_since_last_eos = 0
    return chunk, header


def start(seed_text: str, provider, cfg: ReconstructionConfig) -> ReconstructionLog:
    if not seed_text:
        raise DataError("seed text is empty")
    ids = list(provider.tokenize(seed_text))
    bos = provider.tokenizer.bos_token
    if cfg.prepend_bos and bos is not None:
        ids.insert(0, bos)
    return ReconstructionLog(seed_text=seed_text, seed_token_count=len(ids), generated_ids=ids)


def reconstruct(
    seed_text: str,
    provider,
    cfg: ReconstructionConfig,
    resume: Optional[ReconstructionLog] = None,
    on_step: Optional[Callable[[ReconstructionLog], None]] = None,
) -> ReconstructionLog:
    """Generate ``step_tokens`` at a time from a sliding window until the story is long enough.

    The prompt is the last ``max_context_tokens - step_tokens`` tokens
    produced so far (seed included until it slides out).  ``on_step`` is
    called after every step, e.g. to flush artifacts to disk.
    """
    log = resume if resume is not None else start(seed_text, provider, cfg)
    tok = provider.tokenizer
    decoding = DecodingConfig(temperature=cfg.temperature, top_k=None, prepend_bos=False)
    ids = log.generated_ids
    while len(ids) < cfg.max_story_tokens:
        lo = max(0, len(ids) - cfg.window)
        window = ids[lo:]
        try:
            new = generate_step(provider, window, cfg.beams, cfg.step_tokens, decoding,
                                cfg.length_penalty, eos_token=tok.eos_token)
            new, header = handle_eos(new, log.state, tok.eos_token, provider.tokenize, cfg)
            prompt_text = provider.detokenize(window)
            chunk_text = provider.detokenize(new)
        except MemextError as e:
            raise ReconstructionInterrupted(
                f"generation {len(log.entries) + 1} failed: {e}", log
            ) from e
        if not new:
            logger.warning("generation produced no tokens; stopping")
            break
        ids.extend(new)
        log.entries.append(LogEntry(
            generation=len(log.entries) + 1,
            prompt_text=prompt_text,
            generated_text=chunk_text,
            total_generated_tokens=len(ids),
            prompt_token_start=lo,
            prompt_token_count=len(window),
            chapter_break=header,
        ))
        if on_step is not None:
            on_step(log)
    return log


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        f.write(data)
    os.replace(tmp, path)


def write_artifacts(log: ReconstructionLog, out_dir, cfg: Optional[ReconstructionConfig] = None) -> None:
    """Write ``generation_log.json``, ``generated_ids.json``, ``generated_story.txt`` and resume state."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "generation_log.json",
                  json.dumps([asdict(e) for e in log.entries], indent=2))
    _atomic_write(out / "generated_ids.json", json.dumps(log.generated_ids))
    _atomic_write(out / "generated_story.txt", log.text)
    state = {
        "seed_text": log.seed_text,
        "seed_token_count": log.seed_token_count,
        "state": asdict(log.state),
        "config": None if cfg is None else asdict(cfg),
    }
    _atomic_write(out / "reconstruction_state.json", json.dumps(state, indent=2))


def load_artifacts(out_dir) -> ReconstructionLog:
    out = Path(out_dir)
    try:
        state = json.loads((out / "reconstruction_state.json").read_text(encoding="utf-8"))
        entries = json.loads((out / "generation_log.json").read_text(encoding="utf-8"))
        ids = json.loads((out / "generated_ids.json").read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise DataError(f"cannot resume from {out}: {e}") from e
    return ReconstructionLog(
        seed_text=state["seed_text"],
        seed_token_count=state["seed_token_count"],
        generated_ids=[int(t) for t in ids],
        entries=[LogEntry(**e) for e in entries],
        state=ChapterState(**state["state"]),
    )
