"""Retriever family: sparse, dense, ensemble fusion, child-parent resolution,
multi-query expansion, and the two-step LLM pre-retrieval filter.

Score fusion is weighted Reciprocal Rank Fusion (raw BM25 and cosine scores
are not commensurable, so lists are fused by rank):

    fused(d) = sum over lists i containing d of  w_i / (k + rank_i(d))

with 1-based ranks and k = 60 by default. Entries whose fused score is zero
(only reachable through zero-weight lists) are dropped, so a degenerate
weighting like (1, 0) reproduces the nonzero list exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .assets_util import load_asset
from .corpus import Corpus, StudyProgramDoc
from .embed import EmbeddingProvider, cosine_similarity
from .errors import ConfigError, GenerationError, IntegrityError, PipelineStageError, TransportError
from .generate import ChatMessage, LlmClient
from .index import IndexBundle, RankedList, bm25_search, vector_search

logger = logging.getLogger(__name__)

PREFILTER_MODES = ("list_constrained", "free_predict", "off")
DEFAULT_RRF_K = 60
DEFAULT_TOP_K = 5
DEFAULT_NUM_REPHRASINGS = 3

_WEIGHT_EPS = 1e-9


@dataclass(frozen=True)
class RetrieverConfig:
    use_multi_query: bool = False
    use_child_parent: bool = False
    use_ensemble: bool = False
    ensemble_weights: tuple[float, float] = (0.5, 0.5)
    rrf_k: int = DEFAULT_RRF_K
    top_k: int = DEFAULT_TOP_K
    num_rephrasings: int = DEFAULT_NUM_REPHRASINGS
    prefilter_mode: str = "list_constrained"

    def __post_init__(self):
        w_bm25, w_dense = self.ensemble_weights
        if w_bm25 < 0 or w_dense < 0:
            raise ValueError("ensemble weights must be nonnegative")
        if abs(w_bm25 + w_dense - 1.0) > _WEIGHT_EPS:
            raise ValueError(f"ensemble weights must sum to 1, got {self.ensemble_weights}")
        if self.rrf_k < 1:
            raise ValueError("rrf_k must be positive")
        if self.top_k < 1:
            raise ValueError("top_k must be positive")
        if self.num_rephrasings < 1:
            raise ValueError("num_rephrasings must be positive")
        if self.prefilter_mode not in PREFILTER_MODES:
            raise ValueError(f"prefilter_mode must be one of {PREFILTER_MODES}")
        if self.use_ensemble and self.use_child_parent:
            raise ValueError("use_ensemble and use_child_parent are mutually exclusive")

    def as_dict(self) -> dict:
        return {
            "use_multi_query": self.use_multi_query,
            "use_child_parent": self.use_child_parent,
            "use_ensemble": self.use_ensemble,
            "ensemble_weights": list(self.ensemble_weights),
            "rrf_k": self.rrf_k,
            "top_k": self.top_k,
            "num_rephrasings": self.num_rephrasings,
            "prefilter_mode": self.prefilter_mode,
        }


def rrf_fuse(lists: Sequence[RankedList], weights: Sequence[float], k: int = DEFAULT_RRF_K) -> RankedList:
    """Weighted reciprocal rank fusion; ties broken by ascending chunk_id."""
    if k <= 0:
        raise ValueError("rrf k must be positive")
    if len(lists) != len(weights) or not lists:
        raise ValueError("need one weight per ranked list, at least one list")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    contributions: dict[str, list[float]] = {}
    for ranked, weight in zip(lists, weights):
        for rank, (chunk_id, _score) in enumerate(ranked.entries, start=1):
            contributions.setdefault(chunk_id, []).append(weight / (k + rank))
    # fsum is order-independent, so equally-weighted lists fuse identically
    # under any permutation of the inputs.
    fused = {cid: math.fsum(parts) for cid, parts in contributions.items()}
    ordered = sorted(((cid, s) for cid, s in fused.items() if s > 0.0), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(entries=tuple(ordered), source="fused")


def ensemble_retrieve(
    query: str,
    bundle: IndexBundle,
    provider: EmbeddingProvider,
    cfg: RetrieverConfig,
    allowed: frozenset[str] | None = None,
) -> RankedList:
    """BM25 and dense retrieval over parent chunks, fused with RRF."""
    if provider.provider_id != bundle.provider_id:
        raise ConfigError(
            f"index was built with provider {bundle.provider_id!r} "
            f"but the pipeline embeds with {provider.provider_id!r}"
        )
    sparse = bm25_search(bundle.bm25_parents, query, cfg.top_k, allowed)
    query_vec = provider.embed([query])[0]
    dense = vector_search(bundle.parent_vectors, query_vec, cfg.top_k, allowed)
    fused = rrf_fuse([sparse, dense], list(cfg.ensemble_weights), cfg.rrf_k)
    return RankedList(entries=fused.entries[: cfg.top_k], source="fused")


def child_parent_retrieve(
    query: str,
    bundle: IndexBundle,
    provider: EmbeddingProvider,
    top_k: int,
    allowed: frozenset[str] | None = None,
) -> RankedList:
    """Dense search over child chunks, resolved to their parents.

    Every child is scored, each hit maps to its parent, and a parent keeps
    the best score among its children.
    """
    if provider.provider_id != bundle.provider_id:
        raise ConfigError(
            f"index was built with provider {bundle.provider_id!r} "
            f"but the pipeline embeds with {provider.provider_id!r}"
        )
    if not bundle.child_vectors.ids:
        return RankedList(entries=(), source="dense")
    query_vec = provider.embed([query])[0]
    all_children = vector_search(bundle.child_vectors, query_vec, len(bundle.child_vectors.ids), allowed)
    best: dict[str, float] = {}
    for child_id, score in all_children.entries:
        child = bundle.children.get(child_id)
        if child is None or child.parent_id not in bundle.parents:
            raise IntegrityError(f"child chunk {child_id!r} has no resolvable parent")
        parent_id = child.parent_id
        if parent_id not in best or score > best[parent_id]:
            best[parent_id] = score
    ordered = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(entries=tuple(ordered[:top_k]), source="dense")


def dense_retrieve(
    query: str,
    bundle: IndexBundle,
    provider: EmbeddingProvider,
    top_k: int,
    allowed: frozenset[str] | None = None,
) -> RankedList:
    """Plain cosine retrieval over parent chunks."""
    if provider.provider_id != bundle.provider_id:
        raise ConfigError(
            f"index was built with provider {bundle.provider_id!r} "
            f"but the pipeline embeds with {provider.provider_id!r}"
        )
    query_vec = provider.embed([query])[0]
    return vector_search(bundle.parent_vectors, query_vec, top_k, allowed)


# ---------------------------------------------------------------------------
# Multi-query expansion
# ---------------------------------------------------------------------------

def _parse_rephrasings(completion: str, original: str) -> list[str]:
    lines = [ln.strip() for ln in completion.splitlines()]
    return [ln for ln in lines if ln and ln != original.strip()]


def multi_query_expand(question: str, llm: LlmClient, n: int = DEFAULT_NUM_REPHRASINGS) -> list[str]:
    """Return ``[question] + n rephrasings``. Degrades to ``[question]`` if the
    LLM is unreachable; never aborts the pipeline."""
    if n < 1:
        raise ValueError("n must be >= 1")
    template = load_asset("multi_query")
    prompt = template.replace("{n}", str(n)).replace("{question}", question)
    messages = [ChatMessage("user", prompt)]
    rephrasings: list[str] = []
    for _attempt in range(3):  # one ask plus up to two re-asks
        try:
            completion = llm.complete(messages)
        except (GenerationError, TransportError) as exc:
            logger.warning("multi-query expansion failed, using the original question only: %s", exc)
            return [question]
        rephrasings = _parse_rephrasings(completion, question)[:n]
        if len(rephrasings) >= n:
            break
    while len(rephrasings) < n:
        rephrasings.append(question)
    return [question] + rephrasings


def multi_query_retrieve(
    queries: Sequence[str],
    base_retriever: Callable[[str], RankedList],
    cfg: RetrieverConfig,
) -> RankedList:
    """Fuse per-query results of the base retriever with equal RRF weights."""
    if not queries:
        raise ValueError("need at least one query")
    lists = [base_retriever(q) for q in queries]
    weights = [1.0 / len(lists)] * len(lists)
    fused = rrf_fuse(lists, weights, cfg.rrf_k)
    return RankedList(entries=fused.entries[: cfg.top_k], source="multi-query")


# ---------------------------------------------------------------------------
# Pre-retrieval LLM filter
# ---------------------------------------------------------------------------

def _template_to_messages(filled: str) -> list[ChatMessage]:
    """Map the System/Context/Human template lines onto chat roles."""
    messages = []
    for line in filled.splitlines():
        if line.startswith("System: "):
            messages.append(ChatMessage("system", line[len("System: "):]))
        elif line.startswith("Context: "):
            messages.append(ChatMessage("system", line[len("Context: "):]))
        elif line.startswith("Human: "):
            messages.append(ChatMessage("user", line[len("Human: "):]))
    return messages


def _argmax_by_name(prediction: str, names: Sequence[tuple[str, str]], provider: EmbeddingProvider) -> str:
    """Embed the prediction and every candidate name; return the id whose name
    has the highest cosine similarity (ties: ascending id)."""
    if not names:
        raise ValueError("no candidates to match against")
    vectors = provider.embed([prediction] + [name for _ident, name in names])
    pred_vec, name_vecs = vectors[0], vectors[1:]
    best_id: str | None = None
    best_sim = -math.inf
    for (ident, _name), vec in sorted(zip(names, name_vecs), key=lambda pair: pair[0][0]):
        sim = cosine_similarity(pred_vec, vec)
        if sim > best_sim:
            best_sim, best_id = sim, ident
    assert best_id is not None
    return best_id


def prefilter_program(
    question: str,
    corpus: Corpus,
    provider: EmbeddingProvider,
    llm: LlmClient,
    mode: str = "list_constrained",
) -> tuple[str, str]:
    """Predict the study program for a question; returns (program_id, raw prediction).

    In ``list_constrained`` mode the prompt enumerates the known program
    names; in ``free_predict`` the list is omitted and the model answers
    freely. Either way the prediction is matched to a program by embedding
    cosine argmax, so off-list answers still resolve.
    """
    if mode not in ("list_constrained", "free_predict"):
        raise ValueError(f"unsupported prefilter mode {mode!r}")
    if not len(corpus):
        raise ValueError("corpus is empty")
    if mode == "list_constrained":
        names = "; ".join(doc.name for doc in corpus)
        template = load_asset("program_prediction").replace("{listed_root_level_keys}", names)
    else:
        template = load_asset("program_prediction_free")
    filled = template.replace("{question}", question)
    prediction = llm.complete(_template_to_messages(filled)).strip()
    candidates = [(doc.program_id, doc.name) for doc in corpus]
    return _argmax_by_name(prediction, candidates, provider), prediction


def prefilter_topic(
    question: str,
    program: StudyProgramDoc,
    provider: EmbeddingProvider,
    llm: LlmClient,
) -> tuple[str, str]:
    """Predict the topic within a program; returns (topic_id, raw prediction)."""
    topics = "; ".join(sec.title for sec in program.sections)
    filled = (
        load_asset("topic_prediction")
        .replace("{program_name}", program.name)
        .replace("{listed_topics}", topics)
        .replace("{question}", question)
    )
    prediction = llm.complete(_template_to_messages(filled)).strip()
    candidates = [(sec.topic_id, sec.title) for sec in program.sections]
    return _argmax_by_name(prediction, candidates, provider), prediction


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    ranked: RankedList
    stages: list[str]
    queries: list[str]
    predicted_program_id: str | None
    predicted_topic_id: str | None


def retrieve_pipeline(
    question: str,
    cfg: RetrieverConfig,
    bundle: IndexBundle,
    provider: EmbeddingProvider,
    llm: LlmClient,
    corpus: Corpus,
) -> PipelineResult:
    """Compose the full retrieval pass for one question.

    Order: program prefilter (restricts the candidate chunks; the topic
    prediction is recorded only), multi-query expansion, base retrieval
    (ensemble, child-parent, or plain dense), fusion, truncation to top_k.
    """
    stages: list[str] = []
    allowed: frozenset[str] | None = None
    predicted_program: str | None = None
    predicted_topic: str | None = None

    if cfg.prefilter_mode != "off":
        try:
            predicted_program, _raw = prefilter_program(question, corpus, provider, llm, cfg.prefilter_mode)
            allowed = bundle.chunks_of_program(predicted_program)
            stages.append(f"prefilter:{cfg.prefilter_mode}")
        except (GenerationError, TransportError) as exc:
            logger.warning("program prefilter failed, retrieving over the full corpus: %s", exc)
            stages.append("prefilter:disabled")
        if predicted_program is not None:
            try:
                predicted_topic, _raw = prefilter_topic(
                    question, corpus.get(predicted_program), provider, llm
                )
            except (GenerationError, TransportError) as exc:
                logger.warning("topic prefilter failed, no topic recorded: %s", exc)

    queries = [question]
    if cfg.use_multi_query:
        queries = multi_query_expand(question, llm, cfg.num_rephrasings)
        stages.append("multi-query")

    if cfg.use_ensemble:
        base_name = "ensemble"
        base = lambda q: ensemble_retrieve(q, bundle, provider, cfg, allowed)  # noqa: E731
    elif cfg.use_child_parent:
        base_name = "child-parent"
        base = lambda q: child_parent_retrieve(q, bundle, provider, cfg.top_k, allowed)  # noqa: E731
    else:
        base_name = "dense"
        base = lambda q: dense_retrieve(q, bundle, provider, cfg.top_k, allowed)  # noqa: E731
    stages.append(base_name)

    try:
        if len(queries) > 1:
            ranked = multi_query_retrieve(queries, base, cfg)
            stages.append("fusion")
        else:
            ranked = base(queries[0])
    except (GenerationError, TransportError):
        raise
    except Exception as exc:  # label the failing stage for the caller
        raise PipelineStageError(base_name, exc) from exc

    ranked = RankedList(entries=ranked.entries[: cfg.top_k], source=ranked.source)
    return PipelineResult(
        ranked=ranked,
        stages=stages,
        queries=queries,
        predicted_program_id=predicted_program,
        predicted_topic_id=predicted_topic,
    )
