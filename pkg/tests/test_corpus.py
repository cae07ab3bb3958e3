import pytest

from memext.corpus import (
    BookDocument,
    Example,
    SamplingStats,
    load_manifest,
    sample_random_examples,
    slide_windows,
)
from memext.errors import DataError, SamplingError
from memext.provider import ByteTokenizer

from synth import pseudo_words


def ascii_doc(n_words=400, doc_id="book", seed=0):
    words = pseudo_words(60, seed)
    text = " ".join(words[i * 7 % len(words)] for i in range(n_words))
    return BookDocument(doc_id, text)


class TestSlidingWindows:
    def test_byte_oracle(self):
        doc = ascii_doc()
        tok = ByteTokenizer()
        exs = list(slide_windows(doc, tok, stride_chars=10, chunk_chars=800, example_tokens=100, prefix_tokens=50))
        starts = [s for s in range(0, doc.char_len, 10) if doc.char_len - s >= 100]
        assert [e.char_start for e in exs] == starts
        for e in exs:
            s = e.char_start
            assert bytes(e.tokens) == doc.text[s:s + 100].encode()
            assert e.char_end == s + 100
            assert e.suffix_span == (s + 50, s + 100)
            assert e.prefix_len == 50 and e.suffix_len == 50

    def test_stats_count_short_chunks(self):
        doc = ascii_doc(50)
        stats = SamplingStats()
        exs = list(slide_windows(doc, ByteTokenizer(), 10, 800, 100, 50, stats))
        assert stats.attempted == len(range(0, doc.char_len, 10))
        assert stats.emitted == len(exs)
        assert stats.skipped_short == stats.attempted - stats.emitted

    def test_chunk_shorter_than_example_yields_nothing(self):
        doc = ascii_doc()
        assert list(slide_windows(doc, ByteTokenizer(), 10, 60, 100, 50)) == []

    @pytest.mark.parametrize("prefix, total", [(0, 100), (100, 100), (60, 50)])
    def test_bad_lengths(self, prefix, total):
        with pytest.raises(ValueError):
            list(slide_windows(ascii_doc(), ByteTokenizer(), 10, 800, total, prefix))

    def test_tokenizer_failure_names_offset(self):
        class Broken(ByteTokenizer):
            def tokenize(self, text):
                raise RuntimeError("boom")

        with pytest.raises(SamplingError, match="offset 0"):
            list(slide_windows(ascii_doc(), Broken()))


class TestRandomSampling:
    def corpus(self):
        return [ascii_doc(600, f"d{i}", seed=i) for i in range(5)]

    def test_deterministic(self):
        a = sample_random_examples(self.corpus(), ByteTokenizer(), 3, 6, rng_seed=42)
        b = sample_random_examples(self.corpus(), ByteTokenizer(), 3, 6, rng_seed=42)
        c = sample_random_examples(self.corpus(), ByteTokenizer(), 3, 6, rng_seed=43)
        assert a == b
        assert a != c

    def test_space_start_and_no_overlap(self):
        corpus = self.corpus()
        by_id = {d.doc_id: d for d in corpus}
        exs = sample_random_examples(corpus, ByteTokenizer(), 4, 8, rng_seed=1)
        assert len(exs) == 32
        assert len({e.doc_id for e in exs}) == 4
        for e in exs:
            assert by_id[e.doc_id].text[e.char_start] == " "
        for doc_id in {e.doc_id for e in exs}:
            spans = sorted((e.char_start, e.char_end) for e in exs if e.doc_id == doc_id)
            for (s0, e0), (s1, _) in zip(spans, spans[1:]):
                assert e0 <= s1

    def test_too_many_docs(self):
        with pytest.raises(DataError, match="only 5 documents"):
            sample_random_examples(self.corpus(), ByteTokenizer(), 6, 1)

    def test_shortfall_recorded(self):
        doc = ascii_doc(60)
        stats = SamplingStats()
        exs = sample_random_examples([doc], ByteTokenizer(), 1, 50, rng_seed=0, stats=stats)
        assert 0 < len(exs) < 50
        assert stats.shortfall == {"book": 50 - len(exs)}

    def test_zero_requested(self):
        assert sample_random_examples(self.corpus(), ByteTokenizer(), 2, 0) == []


def test_example_validation():
    with pytest.raises(ValueError):
        Example("d", 0, 10, (1, 2, 3), 0)
    with pytest.raises(ValueError):
        Example("d", 5, 5, (1, 2, 3), 1)


def test_manifest(tmp_path):
    (tmp_path / "a.txt").write_text("alpha text", encoding="utf-8")
    sub = tmp_path / "sub"
    sub.mkdir()
    (sub / "b.txt").write_text("beta", encoding="utf-8")
    m = tmp_path / "corpus.txt"
    m.write_text("# comment\na.txt\n\nsub/b.txt\tsecond book\n", encoding="utf-8")
    docs = load_manifest(m)
    assert [(d.doc_id, d.text) for d in docs] == [("a", "alpha text"), ("second book", "beta")]


def test_manifest_errors(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("missing.txt\n")
    with pytest.raises(DataError):
        load_manifest(m)
    (tmp_path / "x.txt").write_text("x")
    m.write_text("x.txt dup\nx.txt dup\n")
    with pytest.raises(DataError, match="duplicate"):
        load_manifest(m)
    with pytest.raises(DataError):
        load_manifest(tmp_path / "nope.txt")
