"""Bilingual study-program corpus and QA evaluation set.

A corpus file is a JSON document:

    {"programs": [{"program_id": str, "name": str, "language": "en"|"de",
                   "sections": [{"topic_id": str, "title": str, "body": str}]}]}

A QA set file:

    {"items": [{"qa_id": str, "question": str, "reference_answer": str,
                "gold_program_id": str, "gold_topic_id": str,
                "language": "en"|"de"}]}

Both loaders validate all invariants up front; everything downstream may
assume a well-formed, immutable corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import CorpusValidationError, SchemaError

LANGUAGES = ("en", "de")


@dataclass(frozen=True)
class TopicSection:
    topic_id: str
    title: str
    body: str


@dataclass(frozen=True)
class StudyProgramDoc:
    program_id: str
    name: str
    language: str
    sections: tuple[TopicSection, ...]

    def section(self, topic_id: str) -> TopicSection:
        for sec in self.sections:
            if sec.topic_id == topic_id:
                return sec
        raise KeyError(f"program {self.program_id!r} has no topic {topic_id!r}")


@dataclass(frozen=True)
class QAItem:
    qa_id: str
    question: str
    reference_answer: str
    gold_program_id: str
    gold_topic_id: str
    language: str


@dataclass(frozen=True)
class Corpus:
    """Immutable list of study programs, ordered by program_id."""

    programs: tuple[StudyProgramDoc, ...]

    def __len__(self) -> int:
        return len(self.programs)

    def __iter__(self):
        return iter(self.programs)

    def get(self, program_id: str) -> StudyProgramDoc:
        doc = self.by_id().get(program_id)
        if doc is None:
            raise KeyError(f"unknown program_id {program_id!r}")
        return doc

    def by_id(self) -> dict[str, StudyProgramDoc]:
        return {doc.program_id: doc for doc in self.programs}

    def for_language(self, language: str) -> "Corpus":
        return Corpus(tuple(d for d in self.programs if d.language == language))


def _require(record: dict, key: str, kind: type, where: str):
    if key not in record:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = record[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: field {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_program(record, position: int) -> StudyProgramDoc:
    where = f"programs[{position}]"
    if not isinstance(record, dict):
        raise SchemaError(f"{where}: expected an object")
    program_id = _require(record, "program_id", str, where)
    where = f"programs[{position}] (program_id={program_id!r})"
    name = _require(record, "name", str, where)
    language = _require(record, "language", str, where)
    if language not in LANGUAGES:
        raise SchemaError(f"{where}: language must be one of {LANGUAGES}, got {language!r}")
    raw_sections = _require(record, "sections", list, where)
    if not raw_sections:
        raise CorpusValidationError(f"{where}: a program needs at least one section")
    sections = []
    seen_topics: set[str] = set()
    for j, raw in enumerate(raw_sections):
        sec_where = f"{where} sections[{j}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{sec_where}: expected an object")
        topic_id = _require(raw, "topic_id", str, sec_where)
        title = _require(raw, "title", str, sec_where)
        body = _require(raw, "body", str, sec_where)
        if not body.strip():
            raise CorpusValidationError(f"{sec_where}: section body is empty after trim")
        if topic_id in seen_topics:
            raise CorpusValidationError(f"{where}: duplicate topic_id {topic_id!r}")
        seen_topics.add(topic_id)
        sections.append(TopicSection(topic_id=topic_id, title=title, body=body))
    return StudyProgramDoc(program_id=program_id, name=name, language=language, sections=tuple(sections))


def parse_corpus(data) -> Corpus:
    """Validate an already-decoded corpus document and return the Corpus."""
    if not isinstance(data, dict) or not isinstance(data.get("programs"), list):
        raise SchemaError("corpus: top level must be an object with a 'programs' list")
    programs = [_parse_program(rec, i) for i, rec in enumerate(data["programs"])]
    seen: set[str] = set()
    for doc in programs:
        if doc.program_id in seen:
            raise CorpusValidationError(f"duplicate program_id {doc.program_id!r}")
        seen.add(doc.program_id)
    programs.sort(key=lambda d: d.program_id)
    return Corpus(tuple(programs))


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus file. Ordering is deterministic (by program_id)."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"corpus file {path}: invalid JSON: {exc}") from exc
    return parse_corpus(data)


def serialize_corpus(corpus: Corpus) -> dict:
    """Inverse of parse_corpus; load_corpus(serialize_corpus(c)) round-trips."""
    return {
        "programs": [
            {
                "program_id": doc.program_id,
                "name": doc.name,
                "language": doc.language,
                "sections": [
                    {"topic_id": s.topic_id, "title": s.title, "body": s.body}
                    for s in doc.sections
                ],
            }
            for doc in corpus.programs
        ]
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_corpus(corpus), ensure_ascii=False, indent=2), encoding="utf-8")


def _parse_qa_item(record, position: int) -> QAItem:
    where = f"items[{position}]"
    if not isinstance(record, dict):
        raise SchemaError(f"{where}: expected an object")
    qa_id = _require(record, "qa_id", str, where)
    where = f"items[{position}] (qa_id={qa_id!r})"
    language = _require(record, "language", str, where)
    if language not in LANGUAGES:
        raise SchemaError(f"{where}: language must be one of {LANGUAGES}, got {language!r}")
    return QAItem(
        qa_id=qa_id,
        question=_require(record, "question", str, where),
        reference_answer=_require(record, "reference_answer", str, where),
        gold_program_id=_require(record, "gold_program_id", str, where),
        gold_topic_id=_require(record, "gold_topic_id", str, where),
        language=language,
    )


def load_qa_set(path: str | Path, corpus: Corpus) -> list[QAItem]:
    """Load the QA evaluation set and check every gold label against the corpus.

    Items are returned in file order. All dangling gold labels are collected
    and reported together, not just the first one.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"QA file {path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("items"), list):
        raise SchemaError("QA set: top level must be an object with an 'items' list")
    items = [_parse_qa_item(rec, i) for i, rec in enumerate(data["items"])]

    by_id = corpus.by_id()
    dangling: list[str] = []
    seen_ids: set[str] = set()
    for item in items:
        if item.qa_id in seen_ids:
            raise CorpusValidationError(f"duplicate qa_id {item.qa_id!r}")
        seen_ids.add(item.qa_id)
        doc = by_id.get(item.gold_program_id)
        if doc is None:
            dangling.append(f"{item.qa_id}: unknown program {item.gold_program_id!r}")
            continue
        if all(sec.topic_id != item.gold_topic_id for sec in doc.sections):
            dangling.append(
                f"{item.qa_id}: program {item.gold_program_id!r} has no topic {item.gold_topic_id!r}"
            )
    if dangling:
        raise CorpusValidationError("dangling gold labels:\n  " + "\n  ".join(dangling))
    return items


def save_qa_set(items: Iterable[QAItem], path: str | Path) -> None:
    data = {
        "items": [
            {
                "qa_id": it.qa_id,
                "question": it.question,
                "reference_answer": it.reference_answer,
                "gold_program_id": it.gold_program_id,
                "gold_topic_id": it.gold_topic_id,
                "language": it.language,
            }
            for it in items
        ]
    }
    Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=2), encoding="utf-8")
