"""Deterministic mock chat endpoint for offline runs and tests.

The mock recognizes the engine's own prompt templates by their frozen marker
phrases and answers as a pure function of the prompt text:

* program prediction ("Only output the study program"): returns the listed
  program name with the greatest word overlap with the question (ties go to
  the earlier listed name); without a list (free prediction) it echoes the
  question, which the caller then matches by embedding similarity.
* topic prediction ("Only output the topic"): same rule over listed topics.
* multi-query ("alternative phrasings"): emits the requested number of
  deterministic rephrasings, one per line; a ``rephrase_hook`` can override
  the lines (used by tests to steer retrieval).
* judge rubrics ("Respond with a single integer"): scores
  1 + round(4 * rougeL_f1(answer, context)) clamped to [1, 5].
* anything else is treated as answer generation: the first sentence of every
  context block, concatenated; without context blocks it reports that the
  information is not available.

This behavior is a frozen contract: tests pin it, and benchmark runs with
``model_id == "mock:deterministic"`` must be byte-reproducible.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

from .evaluate import rouge_l
from .generate import ChatMessage
from .index import tokenize

PROGRAM_MARKER = "Only output the study program"
TOPIC_MARKER = "Only output the topic"
MULTI_QUERY_MARKER = "alternative phrasings"
JUDGE_MARKER = "Respond with a single integer"

PROGRAM_LIST_PREFIX = "Here are the possible study programs: "
TOPIC_LIST_PREFIX = "Here are the possible topics: "
NO_CONTEXT_ANSWER = "The requested study-program information is not available."

_MQ_N_RE = re.compile(r"Generate (\d+) alternative phrasings")
_QUESTION_LINE_RE = re.compile(r"^Question: (.*)$", re.MULTILINE)
_CONTEXT_HEADER_RE = re.compile(r"^\[\d+\] [^\n]*$", re.MULTILINE)
_JUDGE_CONTEXT_RE = re.compile(r"\nContext:\n(.*?)\n\nAnswer:\n", re.DOTALL)
_JUDGE_ANSWER_RE = re.compile(r"\nAnswer:\n(.*?)\n\nRespond with a single integer", re.DOTALL)
_FIRST_SENTENCE_RE = re.compile(r"^\s*(.*?[.!?])(?:\s|$)", re.DOTALL)


def first_sentence(text: str) -> str:
    m = _FIRST_SENTENCE_RE.match(text)
    return m.group(1) if m else text.strip()


def _word_overlap(name: str, question: str) -> int:
    return len(set(tokenize(name)) & set(tokenize(question)))


def _pick_by_overlap(listed: list[str], question: str) -> str:
    best = listed[0]
    best_overlap = _word_overlap(best, question)
    for name in listed[1:]:
        overlap = _word_overlap(name, question)
        if overlap > best_overlap:
            best, best_overlap = name, overlap
    return best


def default_rephrasings(question: str, n: int) -> list[str]:
    base = question.strip().rstrip("?!. ").strip()
    stock = [
        f"{base} requirements and details",
        f"Information about {base}",
        f"{base} overview for students",
        f"{base} key facts",
    ]
    while len(stock) < n:
        stock.append(f"{base} aspect {len(stock) + 1}")
    return stock[:n]


class MockChatEndpoint:
    """Offline stand-in for a chat model; see the module docstring for the
    frozen behavior table."""

    def __init__(self, rephrase_hook: Callable[[str, int], list[str]] | None = None):
        self.rephrase_hook = rephrase_hook

    def chat(self, messages: Sequence[ChatMessage], model_id: str, temperature: float) -> str:
        full = "\n".join(m.content for m in messages)
        user_messages = [m.content for m in messages if m.role == "user"]
        last_user = user_messages[-1] if user_messages else ""

        if PROGRAM_MARKER in full:
            return self._predict_from_list(full, last_user, PROGRAM_LIST_PREFIX)
        if TOPIC_MARKER in full:
            return self._predict_from_list(full, last_user, TOPIC_LIST_PREFIX)
        if MULTI_QUERY_MARKER in full:
            return self._rephrase(last_user)
        if JUDGE_MARKER in full:
            return self._judge(last_user)
        return self._generate(last_user)

    def _predict_from_list(self, full: str, question: str, prefix: str) -> str:
        for m in full.splitlines():
            if prefix in m:
                listed = [n.strip() for n in m.split(prefix, 1)[1].split(";") if n.strip()]
                if listed:
                    return _pick_by_overlap(listed, question)
        return question  # free prediction: echo, the embedding argmax resolves it

    def _rephrase(self, prompt: str) -> str:
        m = _MQ_N_RE.search(prompt)
        n = int(m.group(1)) if m else 3
        qm = _QUESTION_LINE_RE.search(prompt)
        question = qm.group(1) if qm else prompt
        lines = self.rephrase_hook(question, n) if self.rephrase_hook else default_rephrasings(question, n)
        return "\n".join(lines)

    def _judge(self, prompt: str) -> str:
        cm = _JUDGE_CONTEXT_RE.search(prompt)
        am = _JUDGE_ANSWER_RE.search(prompt)
        context = cm.group(1) if cm else ""
        answer = am.group(1) if am else ""
        f1 = rouge_l(answer, context).f1
        score = max(1, min(5, 1 + round(4 * f1)))
        return str(score)

    def _generate(self, prompt: str) -> str:
        headers = list(_CONTEXT_HEADER_RE.finditer(prompt))
        if not headers:
            return NO_CONTEXT_ANSWER
        tail_marker = prompt.rfind("\n\nQuestion: ")
        end_of_context = tail_marker if tail_marker >= 0 else len(prompt)
        sentences = []
        for i, header in enumerate(headers):
            start = header.end() + 1
            stop = headers[i + 1].start() if i + 1 < len(headers) else end_of_context
            block = prompt[start:stop].strip()
            if block:
                sentences.append(first_sentence(block))
        return " ".join(sentences) if sentences else NO_CONTEXT_ANSWER
