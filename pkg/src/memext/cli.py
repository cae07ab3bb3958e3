"""``memext`` command line.

Exit codes: 0 success, 1 usage error, 2 backend error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from memext import analysis, audit, corpus, np_metric, reconstruct, text_compare
from memext.corpus import BookDocument, SamplingStats
from memext.errors import DataError, ProviderError
from memext.logit_math import DecodingConfig
from memext.provider import (
    ByteTokenizer,
    HTTPProvider,
    ReferenceModel,
    ReferenceProvider,
    ServerThread,
    WordTokenizer,
)

logger = logging.getLogger("memext")

EXIT_OK, EXIT_USAGE, EXIT_BACKEND, EXIT_DATA = 0, 1, 2, 3
ENV_URL = "MEMEXT_BACKEND_URL"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _top_k(value):
    if value.lower() in ("none", "0", "unlimited"):
        return None
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("top-k must be >= 1 or 'none'")
    return k


def _floats(value):
    return [float(v) for v in value.split(",") if v.strip()]


def _ints(value):
    return [int(v) for v in value.split(",") if v.strip()]


def _emit(payload: str, out):
    if out is None or out == "-":
        sys.stdout.write(payload if payload.endswith("\n") else payload + "\n")
    else:
        Path(out).write_text(payload if payload.endswith("\n") else payload + "\n", encoding="utf-8")


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


# -- backends ---------------------------------------------------------------

def _add_backend_flags(p):
    p.add_argument("--backend", default=os.environ.get(ENV_URL, "reference"),
                   help="'reference' or the base URL of an inference server "
                        f"(default: ${ENV_URL} or 'reference')")
    p.add_argument("--reference-train", nargs="*", default=None, metavar="FILE",
                   help="text files the reference n-gram memorizes")
    p.add_argument("--tokenizer", choices=("byte", "word"), default="byte",
                   help="reference backend tokenizer")
    p.add_argument("--order", type=int, default=3, help="reference n-gram order")
    p.add_argument("--alpha", type=float, default=1e-6, help="reference add-alpha smoothing")
    p.add_argument("--max-context", type=int, default=None, help="reference context limit")


def build_reference_provider(texts, tokenizer="byte", order=3, alpha=1e-6, max_context=None, extra_texts=()):
    if tokenizer == "byte":
        tok = ByteTokenizer()
    else:
        tok = WordTokenizer.from_texts(list(texts) + list(extra_texts))
    model = ReferenceModel(tok.vocab_size, order=order, alpha=alpha, max_context=max_context)
    model.fit([tok.bos_token] + tok.tokenize(t) + [tok.eos_token] for t in texts)
    return ReferenceProvider(model, tok)


def _provider(args, default_texts=(), extra_texts=()):
    if args.backend != "reference":
        return HTTPProvider(args.backend)
    texts = default_texts
    if args.reference_train:
        texts = [BookDocument.from_file(p).text for p in args.reference_train]
    return build_reference_provider(texts, args.tokenizer, args.order, args.alpha,
                                    args.max_context, extra_texts)


# -- commands ---------------------------------------------------------------

def cmd_audit(args):
    docs = corpus.load_manifest(args.manifest)
    provider = _provider(args, [d.text for d in docs])
    tok = provider.tokenizer
    cfg = DecodingConfig(args.temperature, args.top_k, args.prepend_bos)
    example_tokens = args.prefix_tokens + args.suffix_tokens
    settings = {
        "decoding": cfg.to_dict(),
        "top_m": args.top_m,
        "sampling": args.sampling,
        "prefix_tokens": args.prefix_tokens,
        "suffix_tokens": args.suffix_tokens,
        "stride_chars": args.stride_chars,
        "chunk_chars": args.chunk_chars,
        "n_docs": args.n_docs,
        "per_doc": args.per_doc,
        "seed": args.seed,
        "backend": args.backend,
    }
    fp = audit.config_fingerprint(settings)

    start = 0
    if args.resume:
        start, old_fp = audit.prepare_resume(args.out)
        if old_fp is not None and old_fp != fp:
            raise DataError(f"{args.out} was written with config {old_fp}, current run is {fp}")

    stats = SamplingStats()
    if args.sampling == "sliding":
        examples = (
            ex
            for d in docs
            for ex in corpus.slide_windows(d, tok, args.stride_chars, args.chunk_chars,
                                           example_tokens, args.prefix_tokens, stats)
        )
    else:
        n_docs = len(docs) if args.n_docs is None else args.n_docs
        examples = corpus.sample_random_examples(docs, tok, n_docs, args.per_doc, example_tokens,
                                                 args.prefix_tokens, args.seed, args.chunk_chars, stats)

    n = 0
    with audit.AuditWriter(args.out, append=args.resume) as w:
        for rec in audit.score_stream(provider, examples, cfg, fp, args.top_m, args.jobs, start):
            w.write(rec)
            n += 1
    print(
        f"audit: scored {n} examples (resumed after {start}); offsets attempted {stats.attempted}, "
        f"short chunks skipped {stats.skipped_short}, shortfall docs {len(stats.shortfall)}; "
        f"config {fp}",
        file=sys.stderr,
    )
    return EXIT_OK


def _load_all(paths):
    records = []
    for p in paths:
        records.extend(audit.read_records(p))
    if not records:
        raise DataError("no audit records found")
    return records


def cmd_rates(args):
    records = _load_all(args.audit)
    pairs = [(r.prob, r.greedy_prob) for r in records]
    report = np_metric.aggregate_rates(pairs, args.thresholds)
    out = report.to_dict()
    if args.curve_p is not None:
        out["curve"] = {
            "p": args.curve_p,
            "points": [[n, r] for n, r in np_metric.rate_curve([r.prob for r in records], args.curve_n, args.curve_p)],
        }
    _emit(_dumps(out), args.out)
    return EXIT_OK


def _doc_lookup(args):
    docs = {d.doc_id: d for d in corpus.load_manifest(args.manifest)}
    return docs


def cmd_heatmap(args):
    docs = _doc_lookup(args)
    if args.doc_id not in docs:
        raise DataError(f"doc_id {args.doc_id!r} not in manifest")
    scored = [r.to_scored() for r in _load_all(args.audit)]
    series = analysis.heatmap(scored, docs[args.doc_id])
    _emit(series.to_csv(), args.out)
    return EXIT_OK


def cmd_spans(args):
    scored = [r.to_scored() for r in _load_all(args.audit)]
    spans = analysis.merge_spans(scored, args.threshold)
    _emit(analysis.spans_to_json(spans), args.out)
    return EXIT_OK


def cmd_coverage(args):
    docs = _doc_lookup(args)
    scored = [r.to_scored() for r in _load_all(args.audit)]
    ids = sorted({s.doc_id for s in scored})
    missing = [i for i in ids if i not in docs]
    if missing:
        raise DataError(f"audit references documents not in manifest: {missing}")
    out = {}
    for doc_id in ids:
        rep = analysis.coverage_report(scored, docs[doc_id], args.thresholds)
        out[doc_id] = {repr(t): f for t, f in rep.items()}
    _emit(_dumps(out), args.out)
    return EXIT_OK


def cmd_reconstruct(args):
    seed = Path(args.seed).read_text(encoding="utf-8").strip()
    cfg = reconstruct.ReconstructionConfig(
        max_context_tokens=args.max_context_tokens,
        step_tokens=args.step_tokens,
        beams=args.beams,
        length_penalty=args.length_penalty,
        max_story_tokens=args.max_story_tokens,
        chapter_words=tuple(args.chapter_words.split(",")) if args.chapter_words else reconstruct.CHAPTER_WORDS,
        missed_chapter_gap=args.missed_chapter_gap,
        temperature=args.temperature,
        prepend_bos=args.prepend_bos,
    )
    headers = [reconstruct.chapter_header(i, cfg.chapter_words) for i in range(1, len(cfg.chapter_words) + 2)]
    provider = _provider(args, [seed], extra_texts=headers)
    resume = reconstruct.load_artifacts(args.out_dir) if args.resume else None

    def flush(log):
        reconstruct.write_artifacts(log, args.out_dir, cfg)

    try:
        log = reconstruct.reconstruct(seed, provider, cfg, resume=resume, on_step=flush)
    except reconstruct.ReconstructionInterrupted as e:
        flush(e.log)
        raise ProviderError(f"{e}; rerun with --resume to continue from {args.out_dir}") from e
    flush(log)
    print(f"reconstruct: {len(log.entries)} generations, {len(log.generated_ids)} tokens", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args):
    try:
        a = Path(args.a).read_text(encoding="utf-8")
        b = Path(args.b).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(str(e)) from e
    rules = text_compare.NormalizationRules(not args.no_strip_underscores, not args.no_unify_ellipses)
    try:
        result = text_compare.compare(a, b, rules, smooth_idf=not args.no_smooth_idf)
    except ValueError as e:
        raise DataError(str(e)) from e
    _emit(_dumps(result), args.out)
    return EXIT_OK


def cmd_serve(args):
    texts = [BookDocument.from_file(p).text for p in (args.reference_train or [])]
    provider = build_reference_provider(texts, args.tokenizer, args.order, args.alpha, args.max_context)
    srv = ServerThread(provider, args.host, args.port)
    print(f"serving reference model at {srv.url}", file=sys.stderr, flush=True)
    try:
        srv.server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        srv.server.server_close()
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="memext", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("audit", help="score examples from a corpus manifest to JSONL")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    _add_backend_flags(p)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--top-k", type=_top_k, default=40)
    p.add_argument("--top-m", type=int, default=128)
    p.add_argument("--prepend-bos", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--prefix-tokens", type=int, default=50)
    p.add_argument("--suffix-tokens", type=int, default=50)
    p.add_argument("--sampling", choices=("sliding", "random"), default="sliding")
    p.add_argument("--stride-chars", type=int, default=10)
    p.add_argument("--chunk-chars", type=int, default=800)
    p.add_argument("--n-docs", type=int, default=None)
    p.add_argument("--per-doc", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("rates", help="extraction-rate report from audit files")
    p.add_argument("audit", nargs="+")
    p.add_argument("--thresholds", type=_floats, default=list(np_metric.DEFAULT_THRESHOLDS))
    p.add_argument("--curve-p", type=float, default=None, help="also emit rate-vs-n for this p")
    p.add_argument("--curve-n", type=_ints, default=[1, 10, 100, 1000, 10000, 100000, 1000000])
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("heatmap", help="per-character maxima as run-length CSV")
    p.add_argument("audit", nargs="+")
    p.add_argument("--manifest", required=True)
    p.add_argument("--doc-id", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("spans", help="merged memorized spans as JSON")
    p.add_argument("audit", nargs="+")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spans)

    p = sub.add_parser("coverage", help="fraction of each document inside memorized spans")
    p.add_argument("audit", nargs="+")
    p.add_argument("--manifest", required=True)
    p.add_argument("--thresholds", type=_floats, default=[0.75, 0.5, 0.1, 0.01])
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("reconstruct", help="rebuild a document from a seed prompt")
    p.add_argument("seed")
    p.add_argument("--out-dir", required=True)
    _add_backend_flags(p)
    p.add_argument("--beams", type=int, default=8)
    p.add_argument("--length-penalty", type=float, default=1.2)
    p.add_argument("--max-context-tokens", type=int, default=3000)
    p.add_argument("--step-tokens", type=int, default=50)
    p.add_argument("--max-story-tokens", type=int, default=113000)
    p.add_argument("--missed-chapter-gap", type=int, default=10000)
    p.add_argument("--chapter-words", default=None, help="comma-separated spelled-out numerals")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--prepend-bos", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="similarity of two text files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--no-strip-underscores", action="store_true")
    p.add_argument("--no-unify-ellipses", action="store_true")
    p.add_argument("--no-smooth-idf", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="serve a reference model over the HTTP protocol")
    p.add_argument("--reference-train", nargs="*", default=None, metavar="FILE")
    p.add_argument("--tokenizer", choices=("byte", "word"), default="byte")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--alpha", type=float, default=1e-6)
    p.add_argument("--max-context", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ProviderError as e:
        print(f"memext: backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except DataError as e:
        print(f"memext: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"memext: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
