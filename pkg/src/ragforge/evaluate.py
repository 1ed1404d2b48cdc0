"""Evaluation stack: Hit Rate@k, ROUGE-L, greedy-matching BERTScore, the
four-feature 1-5 LLM judge, and the RAG confusion matrix.

Conventions pinned here:
* ROUGE is the LCS-based ROUGE-L with P = LCS/|candidate|, R = LCS/|reference|
  and F1 their harmonic mean; the empty-vs-anything case is (0, 0, 0).
* BERTScore uses plain greedy cosine matching over per-token embeddings,
  without idf weighting or baseline rescaling.
* An answer is "acceptable" at a threshold t when its judge score is >= t
  (a strict ">" on a 1-5 scale with threshold 5 could never accept).
* Group means are rounded half-up to one decimal, spreadsheet-style.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import QAItem
from .embed import EmbeddingProvider
from .errors import JudgeParseError, MetricUnavailableError, ProtocolError, SchemaError, TransportError
from .generate import ChatMessage, GeneratedAnswer, LlmClient
from .assets_util import load_asset
from .index import tokenize

FEATURES = ("relevance", "coherence", "fluency", "faithfulness")
RATERS = ("llm", "human")
HIT_RATE_K = 5


@dataclass(frozen=True)
class JudgeScore:
    qa_id: str
    feature: str
    score: int
    rater: str = "llm"
    match: bool = False

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"score must be an integer 1..5, got {self.score!r}")
        if self.rater not in RATERS:
            raise ValueError(f"rater must be one of {RATERS}")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int
    feature: str | None
    threshold: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class HitRateReport:
    hits: int
    total: int
    rate: float  # percentage, 100 * hits / total
    flags: tuple[tuple[str, bool], ...]  # (qa_id, hit) in input order


def hit_rate(
    answers: Sequence[GeneratedAnswer],
    qa: Sequence[QAItem],
    chunk_labels: Mapping[str, tuple[str, str]],
    k: int = HIT_RATE_K,
) -> HitRateReport:
    """An item is a hit iff a top-k retrieved chunk carries the gold
    (program_id, topic_id). ``chunk_labels`` resolves chunk ids to labels."""
    by_id = {a.qa_id: a for a in answers}
    if len(by_id) != len(answers):
        raise ValueError("duplicate qa_id among answers")
    flags = []
    hits = 0
    for item in qa:
        answer = by_id.get(item.qa_id)
        if answer is None:
            raise ValueError(f"no answer recorded for qa_id {item.qa_id!r}")
        gold = (item.gold_program_id, item.gold_topic_id)
        hit = any(
            chunk_labels.get(chunk_id) == gold
            for chunk_id, _score in answer.retrieved.entries[:k]
        )
        flags.append((item.qa_id, hit))
        hits += int(hit)
    total = len(qa)
    rate = 100.0 * hits / total if total else 0.0
    return HitRateReport(hits=hits, total=total, rate=rate, flags=tuple(flags))


# ---------------------------------------------------------------------------
# Reference-based metrics
# ---------------------------------------------------------------------------

class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Classic O(len(a) * len(b)) dynamic program, one rolling row.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> PRF:
    """Token-level ROUGE-L; tokenization is the index module's tokenizer."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    # Tokens absent from the other sequence can never join a common
    # subsequence; dropping them shrinks the DP without changing the LCS.
    cand_set, ref_set = set(cand), set(ref)
    lcs = _lcs_length([t for t in cand if t in ref_set], [t for t in ref if t in cand_set])
    p = lcs / len(cand)
    r = lcs / len(ref)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f1)


def bertscore_greedy(candidate: str, reference: str, provider: EmbeddingProvider) -> PRF:
    """Greedy token-matching similarity under the given embedding provider.

    P averages, over candidate tokens, the best cosine against any reference
    token; R is symmetric; F1 is their harmonic mean. No idf weighting, no
    baseline rescaling.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    vocab = sorted(set(cand) | set(ref))
    try:
        vectors = provider.embed(vocab)
    except (TransportError, ProtocolError) as exc:
        raise MetricUnavailableError(f"embedding provider failed, bertscore unavailable: {exc}") from exc
    by_token = dict(zip(vocab, vectors))
    cmat = np.stack([by_token[t] for t in cand]).astype(np.float64)
    rmat = np.stack([by_token[t] for t in ref]).astype(np.float64)
    cnorm = np.linalg.norm(cmat, axis=1, keepdims=True)
    rnorm = np.linalg.norm(rmat, axis=1, keepdims=True)
    sims = (cmat / cnorm) @ (rmat / rnorm).T
    p = float(sims.max(axis=1).mean())
    r = float(sims.max(axis=0).mean())
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f1)


# ---------------------------------------------------------------------------
# LLM judge
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"\d+")


def parse_judge_score(completion: str) -> int:
    """First integer token of the completion, required to be 1..5."""
    m = _INT_RE.search(completion)
    if not m:
        raise JudgeParseError(f"no integer in judge completion: {completion[:80]!r}")
    value = int(m.group())
    if value not in (1, 2, 3, 4, 5):
        raise JudgeParseError(f"judge score {value} outside 1..5")
    return value


def judge_answer(
    question: str,
    answer: str,
    context: str,
    feature: str,
    judge: LlmClient,
    qa_id: str = "",
    match: bool = False,
) -> JudgeScore:
    """Rate one answer on one feature with the rubric prompt for that feature.

    A completion without a parseable 1-5 score is re-asked once; a second
    failure raises JudgeParseError (callers record and exclude the item).
    """
    if feature not in FEATURES:
        raise ValueError(f"unknown feature {feature!r}")
    rubric = load_asset(f"judge_{feature}")
    prompt = (
        rubric
        .replace("{question}", question)
        .replace("{context}", context if context else "(no context retrieved)")
        .replace("{answer}", answer if answer else "(no answer produced)")
    )
    messages = [ChatMessage("user", prompt)]
    last: JudgeParseError | None = None
    for _attempt in range(2):
        completion = judge.complete(messages)
        try:
            score = parse_judge_score(completion)
            return JudgeScore(qa_id=qa_id, feature=feature, score=score, rater="llm", match=match)
        except JudgeParseError as exc:
            last = exc
    assert last is not None
    raise last


# ---------------------------------------------------------------------------
# Confusion matrix and aggregation
# ---------------------------------------------------------------------------

def confusion_matrix(scores: Sequence[JudgeScore], threshold: int) -> ConfusionMatrix:
    """RAG confusion matrix: retrieval match crossed with answer acceptability
    (score >= threshold)."""
    if threshold not in (1, 2, 3, 4, 5):
        raise ValueError("threshold must be an integer 1..5")
    features = {s.feature for s in scores}
    if len(features) > 1:
        raise ValueError(f"scores mix features: {sorted(features)}")
    feature = next(iter(features)) if features else None
    tp = fn = fp = tn = 0
    for s in scores:
        acceptable = s.score >= threshold
        if s.match and acceptable:
            tp += 1
        elif s.match:
            fn += 1
        elif acceptable:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn, feature=feature, threshold=threshold)


def round_half_up(value: float, decimals: int = 1) -> float:
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def aggregate_scores(
    rows: Iterable[Mapping],
    group_by: Sequence[str],
    value_key: str = "score",
    decimals: int = 1,
) -> dict[tuple, float]:
    """Arithmetic means of ``value_key`` grouped by the given fields, rounded
    half-up. Row keys beyond ``group_by`` and ``value_key`` are ignored."""
    sums: dict[tuple, float] = {}
    counts: dict[tuple, int] = {}
    for row in rows:
        key = tuple(row[field] for field in group_by)
        sums[key] = sums.get(key, 0.0) + float(row[value_key])
        counts[key] = counts.get(key, 0) + 1
    return {key: round_half_up(sums[key] / counts[key], decimals) for key in sums}


# ---------------------------------------------------------------------------
# Human ratings
# ---------------------------------------------------------------------------

def load_human_ratings(path: str | Path, match_by_qa: Mapping[str, bool] | None = None) -> list[JudgeScore]:
    """Read a JSONL ratings file of {"qa_id", "feature", "score", "rater": "human"}.

    ``match_by_qa`` fills the match flag from an experiment's records so human
    scores flow through the same aggregation and confusion-matrix code.
    """
    scores = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            scores.append(
                JudgeScore(
                    qa_id=rec["qa_id"],
                    feature=rec["feature"],
                    score=int(rec["score"]),
                    rater=rec.get("rater", "human"),
                    match=bool(match_by_qa.get(rec["qa_id"], False)) if match_by_qa else False,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}:{lineno}: bad rating record: {exc}") from exc
    return scores
