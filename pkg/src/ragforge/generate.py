"""Answer generation: prompt assembly and chat-completion transport.

Prompt templates are versioned assets (see ``ragforge.assets``) so that any
benchmark run can be reproduced from its config fingerprint. The context
block format produced by :func:`build_prompt` is part of the frozen contract
with the deterministic mock endpoint in :mod:`ragforge.mockllm`: chunks are
rendered in retrieval rank order as ``[i] <program> / <title>`` header lines
followed by the chunk text.

Endpoint kinds: OpenAI-compatible (``POST /v1/chat/completions``, bearer
token from ``RAGFORGE_API_KEY``), Ollama-compatible (``POST /api/chat``),
and the in-process mock. ``complete`` retries transient transport failures
twice with exponential backoff before giving up.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol, Sequence

import requests

from .assets_util import asset_versions, load_asset
from .errors import GenerationError, ProtocolError, TransportError

if TYPE_CHECKING:
    from .index import RankedList

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
MOCK_MODEL_ID = "mock:deterministic"
API_KEY_ENV = "RAGFORGE_API_KEY"
ICL_SHOTS = 3


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class Exemplar:
    """One worked question/answer pair for in-context learning."""

    question: str
    answer: str


@dataclass(frozen=True)
class GenerationConfig:
    model_id: str
    use_icl: bool = False
    icl_exemplars: tuple[Exemplar, ...] = ()
    temperature: float = 0.0
    max_context_chunks: int = 5

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_context_chunks < 1:
            raise ValueError("max_context_chunks must be >= 1")
        if self.use_icl and len(self.icl_exemplars) != ICL_SHOTS:
            raise ValueError(f"in-context learning needs exactly {ICL_SHOTS} exemplars, got {len(self.icl_exemplars)}")


@dataclass(frozen=True)
class ContextChunk:
    """A retrieved chunk resolved with its display metadata."""

    chunk_id: str
    program_name: str
    topic_title: str
    text: str


def default_exemplars() -> tuple[Exemplar, ...]:
    pairs = json.loads(load_asset("exemplars_default"))
    return tuple(Exemplar(question=p["question"], answer=p["answer"]) for p in pairs)


def render_context_blocks(chunks: Sequence[ContextChunk]) -> str:
    blocks = []
    for i, chunk in enumerate(chunks, start=1):
        blocks.append(f"[{i}] {chunk.program_name} / {chunk.topic_title}\n{chunk.text}")
    return "\n\n".join(blocks)


def build_prompt(question: str, context_chunks: Sequence[ContextChunk], cfg: GenerationConfig) -> list[ChatMessage]:
    """Assemble the chat messages for one answer. Pure function of its inputs."""
    if len(context_chunks) > cfg.max_context_chunks:
        raise ValueError(f"{len(context_chunks)} context chunks exceed the cap of {cfg.max_context_chunks}")
    messages = [ChatMessage("system", load_asset("generation_system").strip())]
    if cfg.use_icl:
        for ex in cfg.icl_exemplars:
            messages.append(ChatMessage("user", ex.question))
            messages.append(ChatMessage("assistant", ex.answer))
    if context_chunks:
        body = f"Context:\n\n{render_context_blocks(context_chunks)}\n\nQuestion: {question}"
    else:
        body = (
            "Context:\n\n(no study-program information was retrieved for this question; "
            "state that the information is not available)\n\n"
            f"Question: {question}"
        )
    messages.append(ChatMessage("user", body))
    return messages


class ChatEndpoint(Protocol):
    def chat(self, messages: Sequence[ChatMessage], model_id: str, temperature: float) -> str: ...


class OpenAIChatEndpoint:
    """OpenAI-compatible chat completions endpoint."""

    def __init__(self, base_url: str, api_key_env: str = API_KEY_ENV, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout

    def chat(self, messages: Sequence[ChatMessage], model_id: str, temperature: float) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": model_id,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": temperature,
        }
        try:
            resp = requests.post(
                f"{self.base_url}/v1/chat/completions", json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"chat endpoint unreachable at {self.base_url}: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(f"chat endpoint returned HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProtocolError(f"chat endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed chat completion response: {exc}") from exc


class OllamaChatEndpoint:
    """Ollama-compatible local chat endpoint."""

    def __init__(self, base_url: str = "http://127.0.0.1:11434", timeout: float = 300.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def chat(self, messages: Sequence[ChatMessage], model_id: str, temperature: float) -> str:
        payload = {
            "model": model_id,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "options": {"temperature": temperature},
            "stream": False,
        }
        try:
            resp = requests.post(f"{self.base_url}/api/chat", json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"ollama endpoint unreachable at {self.base_url}: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(f"ollama endpoint returned HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProtocolError(f"ollama endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["message"]["content"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed ollama response: {exc}") from exc


def complete(
    endpoint: ChatEndpoint,
    messages: Sequence[ChatMessage],
    cfg: GenerationConfig,
    max_retries: int = 2,
    backoff_base: float = 0.5,
    sleep=time.sleep,
) -> str:
    """Run one chat completion, retrying transient transport failures."""
    last: Exception | None = None
    for attempt in range(max_retries + 1):
        try:
            return endpoint.chat(messages, cfg.model_id, cfg.temperature)
        except TransportError as exc:
            last = exc
            if attempt < max_retries:
                delay = backoff_base * (2 ** attempt)
                logger.warning("transport failure (attempt %d/%d), retrying in %.1fs: %s",
                               attempt + 1, max_retries + 1, delay, exc)
                sleep(delay)
    raise GenerationError(f"completion failed after {max_retries + 1} attempts: {last}") from last


@dataclass(frozen=True)
class LlmClient:
    """A chat endpoint bound to its model and sampling settings."""

    endpoint: ChatEndpoint
    model_id: str
    temperature: float = 0.0

    def complete(self, messages: Sequence[ChatMessage], **kwargs) -> str:
        cfg = GenerationConfig(model_id=self.model_id, temperature=self.temperature)
        return complete(self.endpoint, messages, cfg, **kwargs)


@dataclass
class GeneratedAnswer:
    """One generated answer plus everything needed to evaluate it later."""

    qa_id: str
    answer_text: str  # empty string marks a generation failure
    retrieved: "RankedList"
    match: bool
    model_id: str
    config_fingerprint: str
    latency_ms: int
    error: str | None = None


def config_fingerprint(generation_cfg: GenerationConfig, retriever_cfg=None) -> str:
    """Short stable hash of everything that shapes an experiment's outputs."""
    blob = {
        "assets": asset_versions(),
        "generation": {
            "model_id": generation_cfg.model_id,
            "use_icl": generation_cfg.use_icl,
            "exemplars": [(e.question, e.answer) for e in generation_cfg.icl_exemplars],
            "temperature": generation_cfg.temperature,
            "max_context_chunks": generation_cfg.max_context_chunks,
        },
        "retriever": None if retriever_cfg is None else retriever_cfg.as_dict(),
    }
    digest = hashlib.sha256(json.dumps(blob, sort_keys=True).encode("utf-8")).hexdigest()
    return digest[:16]
