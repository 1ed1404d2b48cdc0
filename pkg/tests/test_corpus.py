import json

import pytest

from ragforge.corpus import (
    Corpus,
    QAItem,
    StudyProgramDoc,
    TopicSection,
    load_corpus,
    load_qa_set,
    parse_corpus,
    save_corpus,
    save_qa_set,
    serialize_corpus,
)
from ragforge.datagen import make_corpus, make_qa
from ragforge.errors import CorpusValidationError, SchemaError


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _program(program_id="msc-math-en", name="Master of Science in Mathematics", language="en", sections=None):
    if sections is None:
        sections = [{"topic_id": "costs", "title": "Costs", "body": "There are no tuition fees."}]
    return {"program_id": program_id, "name": name, "language": language, "sections": sections}


class TestLoadCorpus:
    def test_loads_72_programs(self, tmp_path):
        corpus = make_corpus(n_programs=36, languages=("en", "de"))
        path = tmp_path / "corpus.json"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert len(loaded) == 72

    def test_empty_program_list_is_fine(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": []})
        assert len(load_corpus(path)) == 0

    def test_duplicate_program_id_rejected(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": [_program("msc-math"), _program("msc-math")]})
        with pytest.raises(CorpusValidationError, match="msc-math"):
            load_corpus(path)

    def test_ordering_is_by_program_id(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": [_program("b-en"), _program("a-en")]})
        assert [d.program_id for d in load_corpus(path)] == ["a-en", "b-en"]

    def test_schema_error_names_offending_record(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": [_program(), {"name": "broken"}]})
        with pytest.raises(SchemaError, match=r"programs\[1\]"):
            load_corpus(path)

    def test_invalid_json_is_schema_error(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_corpus(path)

    def test_empty_section_body_rejected(self, tmp_path):
        bad = _program(sections=[{"topic_id": "t", "title": "T", "body": "   \n"}])
        path = _write(tmp_path, "c.json", {"programs": [bad]})
        with pytest.raises(CorpusValidationError, match="empty"):
            load_corpus(path)

    def test_program_without_sections_rejected(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": [_program(sections=[])]})
        with pytest.raises(CorpusValidationError, match="at least one section"):
            load_corpus(path)

    def test_duplicate_topic_id_within_program_rejected(self, tmp_path):
        sections = [
            {"topic_id": "costs", "title": "Costs", "body": "a"},
            {"topic_id": "costs", "title": "Costs again", "body": "b"},
        ]
        path = _write(tmp_path, "c.json", {"programs": [_program(sections=sections)]})
        with pytest.raises(CorpusValidationError, match="duplicate topic_id"):
            load_corpus(path)

    def test_bad_language_rejected(self, tmp_path):
        path = _write(tmp_path, "c.json", {"programs": [_program(language="fr")]})
        with pytest.raises(SchemaError, match="language"):
            load_corpus(path)

    def test_round_trip_identity(self, tmp_path):
        corpus = make_corpus(n_programs=5)
        once = parse_corpus(serialize_corpus(corpus))
        twice = parse_corpus(serialize_corpus(once))
        assert once == twice == corpus


class TestLoadQaSet:
    def test_items_resolve_and_keep_file_order(self, tmp_path, small_corpus):
        items = make_qa(small_corpus, n_items=12)
        qa_path = tmp_path / "qa.json"
        save_qa_set(items, qa_path)
        loaded = load_qa_set(qa_path, small_corpus)
        assert loaded == items

    def test_dangling_program_listed(self, tmp_path, small_corpus):
        items = [
            QAItem("q1", "q?", "a.", "no-such-program", "costs", "en"),
            QAItem("q2", "q?", "a.", "also-missing", "costs", "en"),
        ]
        qa_path = tmp_path / "qa.json"
        save_qa_set(items, qa_path)
        with pytest.raises(CorpusValidationError) as err:
            load_qa_set(qa_path, small_corpus)
        assert "q1" in str(err.value) and "q2" in str(err.value)

    def test_dangling_topic_rejected(self, tmp_path, small_corpus):
        doc = small_corpus.programs[0]
        items = [QAItem("q1", "q?", "a.", doc.program_id, "no-such-topic", doc.language)]
        qa_path = tmp_path / "qa.json"
        save_qa_set(items, qa_path)
        with pytest.raises(CorpusValidationError, match="no-such-topic"):
            load_qa_set(qa_path, small_corpus)

    def test_subset_file_loads(self, tmp_path, small_corpus):
        items = make_qa(small_corpus, n_items=82)
        qa_path = tmp_path / "qa.json"
        save_qa_set(items, qa_path)
        assert len(load_qa_set(qa_path, small_corpus)) == 82


class TestCorpusApi:
    def test_for_language_partitions(self, small_corpus):
        en = small_corpus.for_language("en")
        de = small_corpus.for_language("de")
        assert len(en) + len(de) == len(small_corpus)
        assert all(d.language == "en" for d in en)

    def test_get_unknown_program_raises(self, small_corpus):
        with pytest.raises(KeyError):
            small_corpus.get("missing")

    def test_section_lookup(self):
        doc = StudyProgramDoc(
            program_id="p-en", name="P", language="en",
            sections=(TopicSection("costs", "Costs", "body"),),
        )
        assert doc.section("costs").title == "Costs"
        with pytest.raises(KeyError):
            doc.section("other")
