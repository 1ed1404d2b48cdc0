import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragforge.corpus import StudyProgramDoc, TopicSection
from ragforge.embed import HashingEmbeddingProvider
from ragforge.errors import IndexFormatError
from ragforge.index import (
    Bm25Index,
    bm25_score,
    bm25_search,
    build_bm25,
    build_index,
    build_vector_store,
    chunk_document,
    load_index,
    save_index,
    split_text,
    tokenize,
    vector_search,
)

from .oracles import oracle_bm25_scores, oracle_rank, oracle_split, oracle_tokenize

provider = HashingEmbeddingProvider()


def _doc(sections, program_id="p-en"):
    return StudyProgramDoc(
        program_id=program_id, name="P", language="en",
        sections=tuple(TopicSection(f"t{i}", f"T{i}", body) for i, body in enumerate(sections)),
    )


class TestTokenize:
    def test_strips_punctuation(self):
        assert tokenize("Data Science!") == ["data", "science"]

    def test_german_umlauts_kept(self):
        assert tokenize("Fakultät für Informatik") == ["fakultät", "für", "informatik"]

    def test_empty(self):
        assert tokenize("") == []

    def test_underscore_is_not_a_word_character_here(self):
        assert tokenize("a_b") == ["a", "b"]

    @given(st.text(max_size=80))
    @settings(max_examples=50)
    def test_matches_oracle(self, text):
        assert tokenize(text) == oracle_tokenize(text)


class TestSplitText:
    def test_short_text_untouched(self):
        assert split_text("short", 100) == ["short"]

    def test_long_unbroken_token_hard_split(self):
        text = "x" * 2000
        pieces = split_text(text, 1500)
        assert pieces == ["x" * 1500, "x" * 500]
        assert "".join(pieces) == text

    def test_splits_at_whitespace(self):
        text = "aaa bbb"
        assert split_text(text, 5) == ["aaa ", "bbb"]

    def test_3100_char_text_gives_three_pieces(self):
        rng = random.Random(0)
        words = []
        while sum(len(w) + 1 for w in words) < 3100:
            words.append("".join(rng.choice("abcdefg") for _ in range(rng.randint(2, 9))))
        text = " ".join(words)[:3100]
        engine = split_text(text, 1500)
        assert engine == oracle_split(text, 1500)
        assert len(engine) == 3
        assert "".join(engine) == text
        assert all(len(p) <= 1500 for p in engine)

    @given(st.text(min_size=1, max_size=400), st.integers(min_value=1, max_value=50))
    @settings(max_examples=120)
    def test_lossless_and_bounded(self, text, limit):
        pieces = split_text(text, limit)
        assert "".join(pieces) == text
        assert all(0 < len(p) <= limit for p in pieces)
        assert pieces == oracle_split(text, limit)


class TestChunkDocument:
    def test_small_section_is_single_parent_and_child(self):
        doc = _doc(["tiny section body under both limits."])
        parents, children = chunk_document(doc)
        assert len(parents) == 1 and len(children) == 1
        assert parents[0].text == doc.sections[0].body
        assert children[0].text == parents[0].text
        assert parents[0].child_ids == (children[0].child_id,)

    def test_losslessness_both_levels(self):
        rng = random.Random(1)
        bodies = []
        for _ in range(4):
            n = rng.randint(100, 4000)
            words = []
            while sum(len(w) + 1 for w in words) < n:
                words.append("".join(rng.choice("abcdefgh") for _ in range(rng.randint(1, 12))))
            bodies.append(" ".join(words))
        doc = _doc(bodies)
        parents, children = chunk_document(doc)
        by_parent = {}
        for c in children:
            by_parent.setdefault(c.parent_id, []).append(c)
        for sec in doc.sections:
            sec_parents = [p for p in parents if p.topic_id == sec.topic_id]
            assert "".join(p.text for p in sec_parents) == sec.body
        for p in parents:
            assert "".join(c.text for c in by_parent[p.parent_id]) == p.text
            assert len(p.text) <= 1500
        assert all(len(c.text) <= 300 for c in children)

    def test_unbroken_token_section(self):
        doc = _doc(["y" * 2000])
        parents, _children = chunk_document(doc)
        assert len(parents) == 2
        assert "".join(p.text for p in parents) == "y" * 2000

    def test_linkage_bijection(self):
        doc = _doc(["hello world " * 400])
        parents, children = chunk_document(doc)
        parent_by_id = {p.parent_id: p for p in parents}
        for c in children:
            assert c.child_id in parent_by_id[c.parent_id].child_ids
        for p in parents:
            for cid in p.child_ids:
                assert any(c.child_id == cid and c.parent_id == p.parent_id for c in children)

    def test_bad_limits_rejected(self):
        doc = _doc(["text"])
        with pytest.raises(ValueError):
            chunk_document(doc, parent_limit=0)
        with pytest.raises(ValueError):
            chunk_document(doc, parent_limit=100, child_limit=200)


_corpus_strategy = st.dictionaries(
    keys=st.sampled_from([f"c{i}" for i in range(10)]),
    values=st.lists(st.sampled_from(["cat", "dog", "fish", "bird", "tree", "haus", "tür"]), min_size=1, max_size=12),
    min_size=1,
    max_size=10,
)


class TestBm25:
    def test_absent_terms_score_zero(self):
        index = build_bm25({"a": "cat dog", "b": "dog bird"})
        assert bm25_score(index, ["zebra"], "a") == 0.0
        assert bm25_search(index, "zebra lion", top_k=5).entries == ()

    def test_toy_corpus_matches_oracle(self):
        texts = {"d1": "cat sat on the mat", "d2": "dog and cat play", "d3": "birds fly south"}
        index = build_bm25(texts)
        doc_tokens = {k: oracle_tokenize(v) for k, v in texts.items()}
        expected = oracle_bm25_scores(doc_tokens, ["cat"])
        for cid in texts:
            assert bm25_score(index, ["cat"], cid) == pytest.approx(expected[cid], abs=1e-9)

    def test_duplicate_query_term_doubles_contribution(self):
        index = build_bm25({"a": "cat dog", "b": "dog"})
        single = bm25_score(index, ["cat"], "a")
        assert single > 0
        assert bm25_score(index, ["cat", "cat"], "a") == pytest.approx(2 * single, abs=1e-12)

    def test_unknown_chunk_rejected(self):
        index = build_bm25({"a": "cat"})
        with pytest.raises(ValueError, match="not indexed"):
            bm25_score(index, ["cat"], "missing")

    @given(_corpus_strategy, st.lists(st.sampled_from(["cat", "dog", "haus", "zebra"]), min_size=1, max_size=5))
    @settings(max_examples=100)
    def test_property_oracle_equivalence(self, token_docs, query):
        texts = {cid: " ".join(toks) for cid, toks in token_docs.items()}
        index = build_bm25(texts)
        expected = oracle_bm25_scores({k: list(v) for k, v in token_docs.items()}, query)
        for cid in texts:
            assert bm25_score(index, query, cid) == pytest.approx(expected[cid], abs=1e-9)

    def test_search_ranking_matches_full_sort(self):
        texts = {f"c{i}": body for i, body in enumerate([
            "cat cat dog", "cat mouse", "dog dog dog", "mouse trap cheese", "cat dog mouse",
        ])}
        index = build_bm25(texts)
        result = bm25_search(index, "cat dog", top_k=3)
        expected = oracle_bm25_scores({k: oracle_tokenize(v) for k, v in texts.items()}, ["cat", "dog"])
        expected_ids = oracle_rank({k: v for k, v in expected.items() if v > 0}, 3)
        assert result.ids() == expected_ids

    def test_scores_non_increasing_and_bounded_length(self):
        index = build_bm25({f"c{i}": "cat " * (i + 1) for i in range(6)})
        result = bm25_search(index, "cat", top_k=4)
        scores = [s for _, s in result.entries]
        assert scores == sorted(scores, reverse=True)
        assert len(result) <= 4


class TestVectorSearch:
    def test_stored_vector_ranks_first_with_unit_score(self):
        texts = {f"c{i}": t for i, t in enumerate(["alpha beta", "gamma delta", "epsilon zeta"])}
        store = build_vector_store(provider, texts)
        query = store.vector("c1").astype(np.float64)
        result = vector_search(store, query, top_k=2)
        assert result.ids()[0] == "c1"
        assert result.entries[0][1] == pytest.approx(1.0, abs=1e-6)

    def test_empty_store(self):
        store = build_vector_store(provider, {})
        assert vector_search(store, np.ones(provider.dim), top_k=3).entries == ()

    def test_five_chunk_ranking_matches_full_sort_oracle(self):
        from .oracles import oracle_cosine, oracle_hash_embed

        texts = {f"c{i}": t for i, t in enumerate(
            ["tuition fees", "application deadline", "language tests", "semester dates", "campus map"]
        )}
        store = build_vector_store(provider, texts)
        (qvec,) = provider.embed(["deadline for the application"])
        sims = {
            cid: oracle_cosine(list(store.vector(cid).astype(float)), list(qvec))
            for cid in texts
        }
        assert vector_search(store, qvec, top_k=5).ids() == oracle_rank(sims, 5)
        assert oracle_hash_embed("deadline for the application") == pytest.approx(list(qvec), abs=1e-9)

    def test_allowed_filter(self):
        texts = {f"c{i}": f"text {i}" for i in range(4)}
        store = build_vector_store(provider, texts)
        (qvec,) = provider.embed(["text"])
        result = vector_search(store, qvec, top_k=4, allowed=frozenset({"c1", "c3"}))
        assert set(result.ids()) <= {"c1", "c3"}


class TestPersistence:
    def test_round_trip_search_identity(self, tmp_path, small_corpus):
        bundle = build_index(small_corpus.for_language("en"), provider, "en")
        save_index(bundle, tmp_path / "idx")
        loaded = load_index(tmp_path / "idx")
        for query in ["tuition fees", "bewerbung", "semester"]:
            a = bm25_search(bundle.bm25_parents, query, 5)
            b = bm25_search(loaded.bm25_parents, query, 5)
            assert a == b
            (qvec,) = provider.embed([query])
            va = vector_search(bundle.parent_vectors, qvec, 5)
            vb = vector_search(loaded.parent_vectors, qvec, 5)
            assert va == vb
        assert loaded.parents == bundle.parents
        assert loaded.children == bundle.children

    def test_wrong_magic_rejected(self, tmp_path, small_corpus):
        bundle = build_index(small_corpus.for_language("en"), provider, "en")
        save_index(bundle, tmp_path / "idx")
        (tmp_path / "idx" / "postings.bin").write_bytes(b"BADMAGIC" + b"\x00" * 16)
        with pytest.raises(IndexFormatError, match="magic"):
            load_index(tmp_path / "idx")

    def test_version_mismatch_refused(self, tmp_path, small_corpus):
        import json

        bundle = build_index(small_corpus.for_language("en"), provider, "en")
        save_index(bundle, tmp_path / "idx")
        meta_path = tmp_path / "idx" / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta["version"] = 99
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(IndexFormatError, match="version"):
            load_index(tmp_path / "idx")

    def test_provider_id_is_recorded(self, tmp_path, small_corpus):
        bundle = build_index(small_corpus.for_language("en"), provider, "en")
        save_index(bundle, tmp_path / "idx")
        loaded = load_index(tmp_path / "idx")
        assert loaded.provider_id == provider.provider_id
