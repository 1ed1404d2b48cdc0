"""Experiment orchestration: configs, single runs, grids, persisted records,
and report tables.

Results are an append-only JSONL file, one record per (experiment, model,
language, qa item). With mock endpoints and a fixed seed the whole grid is a
pure function of its inputs: records use a frozen clock, so two runs of the
same grid produce byte-identical files.

Experiment names follow the toggle vocabulary used throughout the reports:
``er`` = ensemble retriever, ``cpr`` = child-parent retriever, ``icl`` =
in-context learning, ``mq`` = multi-query, joined with dashes (``mq-icl-er``);
``baseline`` turns everything off.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, QAItem, load_corpus, load_qa_set
from .embed import FALLBACK_DIM, EmbeddingProvider, HashingEmbeddingProvider, HttpEmbeddingProvider
from .errors import ConfigError, GenerationError, JudgeParseError, MetricUnavailableError, PipelineStageError, TransportError
from .evaluate import FEATURES, PRF, JudgeScore, bertscore_greedy, confusion_matrix, hit_rate, judge_answer, round_half_up, rouge_l
from .generate import (
    MOCK_MODEL_ID,
    ChatEndpoint,
    ContextChunk,
    Exemplar,
    GeneratedAnswer,
    GenerationConfig,
    LlmClient,
    OllamaChatEndpoint,
    OpenAIChatEndpoint,
    build_prompt,
    complete,
    config_fingerprint,
    default_exemplars,
)
from .index import IndexBundle, RankedList, build_index, load_index, save_index
from .mockllm import MockChatEndpoint
from .retrieve import RetrieverConfig, retrieve_pipeline

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

GRID_CONFIG_NAMES = ("er", "cpr", "icl", "icl-er", "mq-er", "mq-cpr", "mq-cpr-icl", "mq-icl-er")
_TOGGLE_TOKENS = {"er", "cpr", "icl", "mq"}


# ---------------------------------------------------------------------------
# Clocks: real for live runs, frozen for reproducible mock runs
# ---------------------------------------------------------------------------

class SystemClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")

    def timer(self) -> float:
        return time.perf_counter()


class FixedClock:
    """Frozen clock for byte-reproducible results files."""

    def __init__(self, instant: str = "1970-01-01T00:00:00+00:00"):
        self.instant = instant

    def now(self) -> str:
        return self.instant

    def timer(self) -> float:
        return 0.0


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointSpec:
    kind: str  # mock | openai | ollama
    model: str
    base_url: str = ""

    def build(self) -> ChatEndpoint:
        if self.kind == "mock" or self.model == MOCK_MODEL_ID:
            return MockChatEndpoint()
        if self.kind == "openai":
            return OpenAIChatEndpoint(self.base_url or "https://api.openai.com")
        if self.kind == "ollama":
            return OllamaChatEndpoint(self.base_url or "http://127.0.0.1:11434")
        raise ConfigError(f"unknown endpoint kind {self.kind!r}")


MOCK_ENDPOINT = EndpointSpec(kind="mock", model=MOCK_MODEL_ID)


@dataclass
class HarnessConfig:
    corpus_path: str = ""
    qa_path: str = ""
    embedding_provider: str = "fallback"  # fallback | http
    embedding_dim: int = FALLBACK_DIM
    embedding_base_url: str = ""
    retrieval: RetrieverConfig = field(default_factory=RetrieverConfig)
    temperature: float = 0.0
    max_context_chunks: int = 5
    exemplars_path: str = ""
    judge: EndpointSpec = MOCK_ENDPOINT
    judge_features: tuple[str, ...] = FEATURES
    threshold: int = 5
    models: tuple[EndpointSpec, ...] = (MOCK_ENDPOINT,)
    grid_configs: tuple[str, ...] = GRID_CONFIG_NAMES
    grid_languages: tuple[str, ...] = ("en", "de")
    seed: int = 0
    concurrency: int = 4
    qa_subset_size: int = 0

    def provider(self) -> EmbeddingProvider:
        if self.embedding_provider == "fallback":
            return HashingEmbeddingProvider(self.embedding_dim)
        if self.embedding_provider == "http":
            if not self.embedding_base_url:
                raise ConfigError("embedding.provider = 'http' needs embedding.base_url")
            return HttpEmbeddingProvider(self.embedding_base_url, self.embedding_dim)
        raise ConfigError(f"unknown embedding provider {self.embedding_provider!r}")

    def force_mock(self) -> "HarnessConfig":
        """The --mock switch: all endpoints deterministic, fallback embeddings."""
        cfg = HarnessConfig(**{**self.__dict__})
        cfg.embedding_provider = "fallback"
        cfg.embedding_dim = FALLBACK_DIM
        cfg.judge = MOCK_ENDPOINT
        cfg.models = (MOCK_ENDPOINT,)
        return cfg


def _endpoint_from_table(table: Mapping) -> EndpointSpec:
    return EndpointSpec(
        kind=table.get("kind", "mock"),
        model=table.get("model", MOCK_MODEL_ID),
        base_url=table.get("base_url", ""),
    )


def load_config(path: str | Path | None) -> HarnessConfig:
    """Parse the TOML harness config; every section is optional."""
    cfg = HarnessConfig()
    if path is None:
        return cfg
    with open(path, "rb") as f:
        data = tomllib.load(f)

    corpus_sec = data.get("corpus", {})
    cfg.corpus_path = corpus_sec.get("path", cfg.corpus_path)
    cfg.qa_path = corpus_sec.get("qa_path", cfg.qa_path)

    emb = data.get("embedding", {})
    cfg.embedding_provider = emb.get("provider", cfg.embedding_provider)
    cfg.embedding_dim = int(emb.get("dim", cfg.embedding_dim))
    cfg.embedding_base_url = emb.get("base_url", cfg.embedding_base_url)

    ret = data.get("retrieval", {})
    base = cfg.retrieval
    weights = ret.get("ensemble_weights", list(base.ensemble_weights))
    cfg.retrieval = RetrieverConfig(
        ensemble_weights=(float(weights[0]), float(weights[1])),
        rrf_k=int(ret.get("rrf_k", base.rrf_k)),
        top_k=int(ret.get("top_k", base.top_k)),
        num_rephrasings=int(ret.get("num_rephrasings", base.num_rephrasings)),
        prefilter_mode=ret.get("prefilter_mode", base.prefilter_mode),
    )

    gen = data.get("generation", {})
    cfg.temperature = float(gen.get("temperature", cfg.temperature))
    cfg.max_context_chunks = int(gen.get("max_context_chunks", cfg.max_context_chunks))
    cfg.exemplars_path = gen.get("exemplars_path", cfg.exemplars_path)

    ev = data.get("evaluation", {})
    cfg.judge_features = tuple(ev.get("judge_features", cfg.judge_features))
    cfg.threshold = int(ev.get("threshold", cfg.threshold))
    if "judge" in data:
        cfg.judge = _endpoint_from_table(data["judge"])
    if "models" in data:
        cfg.models = tuple(_endpoint_from_table(t) for t in data["models"])

    grid = data.get("grid", {})
    cfg.grid_configs = tuple(grid.get("configs", cfg.grid_configs))
    cfg.grid_languages = tuple(grid.get("languages", cfg.grid_languages))

    run = data.get("run", {})
    cfg.seed = int(run.get("seed", cfg.seed))
    cfg.concurrency = int(run.get("concurrency", cfg.concurrency))
    cfg.qa_subset_size = int(run.get("qa_subset_size", cfg.qa_subset_size))
    return cfg


def toggles_from_name(name: str) -> dict[str, bool]:
    """Map an experiment name like 'mq-icl-er' to its module toggles."""
    toggles = {"mq": False, "cpr": False, "er": False, "icl": False}
    if name != "baseline":
        for token in name.split("-"):
            if token not in _TOGGLE_TOKENS:
                raise ConfigError(f"unknown toggle {token!r} in experiment name {name!r}")
            toggles[token] = True
    if toggles["er"] and toggles["cpr"]:
        raise ConfigError(f"experiment {name!r} enables both ensemble and child-parent retrieval")
    return toggles


def load_exemplars(path: str, seed: int) -> tuple[Exemplar, ...]:
    """Three ICL exemplars: the bundled defaults, or a seeded choice of three
    from a user file with more."""
    if not path:
        return default_exemplars()
    pairs = json.loads(Path(path).read_text(encoding="utf-8"))
    exemplars = [Exemplar(question=p["question"], answer=p["answer"]) for p in pairs]
    if len(exemplars) < 3:
        raise ConfigError(f"exemplar file {path} holds {len(exemplars)} pairs, need at least 3")
    if len(exemplars) > 3:
        exemplars = random.Random(seed).sample(exemplars, 3)
    return tuple(exemplars)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    language: str
    retriever: RetrieverConfig
    generation: GenerationConfig
    judge_features: tuple[str, ...] = FEATURES
    qa_subset: tuple[str, ...] | None = None
    seed: int = 0


def make_experiment(name: str, language: str, model: EndpointSpec, cfg: HarnessConfig) -> ExperimentConfig:
    toggles = toggles_from_name(name)
    retriever = RetrieverConfig(
        use_multi_query=toggles["mq"],
        use_child_parent=toggles["cpr"],
        use_ensemble=toggles["er"],
        ensemble_weights=cfg.retrieval.ensemble_weights,
        rrf_k=cfg.retrieval.rrf_k,
        top_k=cfg.retrieval.top_k,
        num_rephrasings=cfg.retrieval.num_rephrasings,
        prefilter_mode=cfg.retrieval.prefilter_mode,
    )
    generation = GenerationConfig(
        model_id=model.model,
        use_icl=toggles["icl"],
        icl_exemplars=load_exemplars(cfg.exemplars_path, cfg.seed) if toggles["icl"] else (),
        temperature=cfg.temperature,
        max_context_chunks=cfg.max_context_chunks,
    )
    return ExperimentConfig(
        name=name,
        language=language,
        retriever=retriever,
        generation=generation,
        judge_features=cfg.judge_features,
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------

@dataclass
class ResultRecord:
    experiment: str
    model: str
    language: str
    qa_id: str
    answer: GeneratedAnswer
    stages: list[str]
    queries: list[str]
    predicted_program_id: str | None
    predicted_topic_id: str | None
    hit: bool
    rouge: PRF | None
    bertscore: PRF | None
    judge: dict[str, dict] | None
    started: str
    finished: str

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model,
            "language": self.language,
            "qa_id": self.qa_id,
            "answer_text": self.answer.answer_text,
            "error": self.answer.error,
            "match": self.answer.match,
            "hit": self.hit,
            "retrieved": [[cid, score] for cid, score in self.answer.retrieved.entries],
            "retrieved_source": self.answer.retrieved.source,
            "stages": self.stages,
            "queries": self.queries,
            "predicted_program_id": self.predicted_program_id,
            "predicted_topic_id": self.predicted_topic_id,
            "rouge_l": None if self.rouge is None else {"precision": self.rouge.precision, "recall": self.rouge.recall, "f1": self.rouge.f1},
            "bertscore": None if self.bertscore is None else {"precision": self.bertscore.precision, "recall": self.bertscore.recall, "f1": self.bertscore.f1},
            "judge": self.judge,
            "config_fingerprint": self.answer.config_fingerprint,
            "latency_ms": self.answer.latency_ms,
            "started": self.started,
            "finished": self.finished,
        }


def write_records(records: Iterable[ResultRecord], path: str | Path) -> None:
    """Append records as JSONL, one per line, stable key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[dict]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

def select_items(qa_items: Sequence[QAItem], exp: ExperimentConfig, subset_size: int = 0) -> list[QAItem]:
    items = [it for it in qa_items if it.language == exp.language]
    if exp.qa_subset is not None:
        wanted = set(exp.qa_subset)
        items = [it for it in items if it.qa_id in wanted]
    if subset_size and len(items) > subset_size:
        chosen = set(random.Random(exp.seed).sample([it.qa_id for it in items], subset_size))
        items = [it for it in items if it.qa_id in chosen]
    return items


def run_experiment(
    exp: ExperimentConfig,
    corpus: Corpus,
    qa_items: Sequence[QAItem],
    bundle: IndexBundle,
    provider: EmbeddingProvider,
    generator: ChatEndpoint,
    judge_llm: LlmClient | None,
    clock=None,
    concurrency: int = 4,
    subset_size: int = 0,
) -> list[ResultRecord]:
    """Run one experiment over its QA items. Per-item failures are recorded
    in the item's record and never abort the run."""
    clock = clock or SystemClock()
    lang_corpus = corpus.for_language(exp.language)
    labels = bundle.parent_labels()
    names = {doc.program_id: doc.name for doc in corpus}
    titles = {(doc.program_id, sec.topic_id): sec.title for doc in corpus for sec in doc.sections}
    generator_llm = LlmClient(endpoint=generator, model_id=exp.generation.model_id, temperature=exp.generation.temperature)
    fingerprint = config_fingerprint(exp.generation, exp.retriever)
    items = select_items(qa_items, exp, subset_size)

    def run_one(item: QAItem) -> ResultRecord:
        started = clock.now()
        t0 = clock.timer()
        stages: list[str] = []
        queries: list[str] = [item.question]
        predicted_program = predicted_topic = None
        ranked = RankedList(entries=(), source="dense")
        answer_text, gen_error = "", None
        try:
            result = retrieve_pipeline(item.question, exp.retriever, bundle, provider, generator_llm, lang_corpus)
            ranked, stages, queries = result.ranked, result.stages, result.queries
            predicted_program, predicted_topic = result.predicted_program_id, result.predicted_topic_id
        except PipelineStageError as exc:
            gen_error = str(exc)
        context_chunks = []
        if gen_error is None:
            for cid, _score in ranked.entries[: exp.generation.max_context_chunks]:
                parent = bundle.parents[cid]
                context_chunks.append(
                    ContextChunk(
                        chunk_id=cid,
                        program_name=names.get(parent.program_id, parent.program_id),
                        topic_title=titles.get((parent.program_id, parent.topic_id), parent.topic_id),
                        text=parent.text,
                    )
                )
            messages = build_prompt(item.question, context_chunks, exp.generation)
            try:
                answer_text = complete(generator, messages, exp.generation)
            except GenerationError as exc:
                gen_error = str(exc)

        gold = (item.gold_program_id, item.gold_topic_id)
        match = any(labels.get(cid) == gold for cid, _ in ranked.entries[:5])
        latency = int((clock.timer() - t0) * 1000)
        answer = GeneratedAnswer(
            qa_id=item.qa_id,
            answer_text=answer_text,
            retrieved=ranked,
            match=match,
            model_id=exp.generation.model_id,
            config_fingerprint=fingerprint,
            latency_ms=latency,
            error=gen_error,
        )

        rouge = bert = None
        judge_results: dict[str, dict] | None = None
        if answer_text:
            rouge = rouge_l(answer_text, item.reference_answer)
            try:
                bert = bertscore_greedy(answer_text, item.reference_answer, provider)
            except MetricUnavailableError as exc:
                logger.warning("bertscore unavailable for %s: %s", item.qa_id, exc)
            if judge_llm is not None:
                context_text = "\n\n".join(c.text for c in context_chunks)
                judge_results = {}
                for feature in exp.judge_features:
                    try:
                        score = judge_answer(
                            item.question, answer_text, context_text, feature, judge_llm,
                            qa_id=item.qa_id, match=match,
                        )
                        judge_results[feature] = {"score": score.score, "rater": score.rater}
                    except JudgeParseError as exc:
                        judge_results[feature] = {"error": f"unparseable judge output: {exc}"}
                    except (GenerationError, TransportError) as exc:
                        judge_results[feature] = {"error": str(exc)}

        return ResultRecord(
            experiment=exp.name,
            model=exp.generation.model_id,
            language=exp.language,
            qa_id=item.qa_id,
            answer=answer,
            stages=stages,
            queries=queries,
            predicted_program_id=predicted_program,
            predicted_topic_id=predicted_topic,
            hit=False,  # filled below through the evaluate module
            rouge=rouge,
            bertscore=bert,
            judge=judge_results,
            started=started,
            finished=clock.now(),
        )

    if concurrency > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            records = list(pool.map(run_one, items))
    else:
        records = [run_one(item) for item in items]

    # Hit flags come from the evaluation module's re-scan of the stored
    # ranked lists, cross-checking the inline match computation.
    if records:
        report = hit_rate([r.answer for r in records], items, labels, k=5)
        flag_by_qa = dict(report.flags)
        for rec in records:
            rec.hit = flag_by_qa[rec.qa_id]
    return records


def ensure_bundle(out_dir: str | Path, language: str) -> IndexBundle:
    path = Path(out_dir) / f"index-{language}"
    if not path.exists():
        raise ConfigError(
            f"no index for language {language!r} at {path}; build it first with: "
            f"ragforge index --corpus <corpus.json> --out {out_dir}"
        )
    return load_index(path)


def build_and_save_indices(corpus: Corpus, provider: EmbeddingProvider, out_dir: str | Path) -> list[Path]:
    paths = []
    for language in sorted({doc.language for doc in corpus}):
        bundle = build_index(corpus.for_language(language), provider, language)
        path = Path(out_dir) / f"index-{language}"
        save_index(bundle, path)
        paths.append(path)
    return paths


def run_grid(
    cfg: HarnessConfig,
    corpus: Corpus,
    qa_items: Sequence[QAItem],
    out_dir: str | Path,
    results_name: str = "results.jsonl",
    clock=None,
    config_names: Sequence[str] | None = None,
    languages: Sequence[str] | None = None,
) -> Path:
    """Expand models x languages x configs and run them sequentially."""
    provider = cfg.provider()
    judge_llm = LlmClient(endpoint=cfg.judge.build(), model_id=cfg.judge.model)
    results_path = Path(out_dir) / results_name
    bundles = {}
    for model in cfg.models:
        generator = model.build()
        for language in (languages or cfg.grid_languages):
            if language not in bundles:
                bundles[language] = ensure_bundle(out_dir, language)
            for name in (config_names or cfg.grid_configs):
                exp = make_experiment(name, language, model, cfg)
                records = run_experiment(
                    exp, corpus, qa_items, bundles[language], provider, generator, judge_llm,
                    clock=clock, concurrency=cfg.concurrency, subset_size=cfg.qa_subset_size,
                )
                write_records(records, results_path)
                logger.info("experiment %s/%s/%s: %d records", model.model, language, name, len(records))
    return results_path


# ---------------------------------------------------------------------------
# Report tables
# ---------------------------------------------------------------------------

def _render_markdown(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(headers) + " |", "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue()


def _render(headers, rows, fmt: str) -> str:
    if fmt == "md":
        return _render_markdown(headers, rows)
    if fmt == "csv":
        return _render_csv(headers, rows)
    raise ConfigError(f"unknown report format {fmt!r}")


def _ordered_unique(values: Iterable) -> list:
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def report_hit_rate(records: Sequence[dict], fmt: str = "md") -> str:
    """Hit rate per (model, language) row and experiment column, in percent."""
    configs = _ordered_unique(r["experiment"] for r in records)
    groups = _ordered_unique((r["model"], r["language"]) for r in records)
    rows = []
    for model, language in groups:
        cells = [model, language]
        for conf in configs:
            sub = [r for r in records if (r["model"], r["language"], r["experiment"]) == (model, language, conf)]
            if sub:
                rate = 100.0 * sum(1 for r in sub if r["hit"]) / len(sub)
                cells.append(f"{rate:.2f}")
            else:
                cells.append("-")
        rows.append(cells)
    return _render(["model", "lang"] + list(configs), rows, fmt)


def report_judge(records: Sequence[dict], feature: str, fmt: str = "md") -> str:
    """Mean judge score split into Match / No Match rows, one decimal."""
    configs = _ordered_unique(r["experiment"] for r in records)
    groups = _ordered_unique((r["model"], r["language"]) for r in records)
    rows = []
    for model, language in groups:
        for match_value, label in ((True, "Match"), (False, "No Match")):
            cells = [model, language, label]
            for conf in configs:
                scores = [
                    r["judge"][feature]["score"]
                    for r in records
                    if (r["model"], r["language"], r["experiment"]) == (model, language, conf)
                    and r["match"] == match_value
                    and r.get("judge") and feature in r["judge"] and "score" in r["judge"][feature]
                ]
                cells.append(f"{round_half_up(sum(scores) / len(scores), 1):.1f}" if scores else "-")
            rows.append(cells)
    return _render(["model", "lang", "retrieval"] + list(configs), rows, fmt)


def report_confusion(records: Sequence[dict], feature: str, threshold: int, fmt: str = "md") -> str:
    """TP/FN/FP/TN per (model, language, experiment) at the given threshold."""
    groups = _ordered_unique((r["model"], r["language"], r["experiment"]) for r in records)
    rows = []
    for model, language, conf in groups:
        scores = [
            JudgeScore(
                qa_id=r["qa_id"], feature=feature, score=r["judge"][feature]["score"],
                rater="llm", match=r["match"],
            )
            for r in records
            if (r["model"], r["language"], r["experiment"]) == (model, language, conf)
            and r.get("judge") and feature in r["judge"] and "score" in r["judge"][feature]
        ]
        cm = confusion_matrix(scores, threshold)
        rows.append([model, language, conf, str(cm.tp), str(cm.fn), str(cm.fp), str(cm.tn)])
    return _render(["model", "lang", "experiment", "TP", "FN", "FP", "TN"], rows, fmt)


def report_metrics(records: Sequence[dict], fmt: str = "md") -> str:
    """Mean ROUGE-L F1 and BERTScore F1, Match vs No Match rows."""
    groups = _ordered_unique((r["model"], r["language"], r["experiment"]) for r in records)
    rows = []
    for model, language, conf in groups:
        for match_value, label in ((True, "Match"), (False, "No Match")):
            sub = [
                r for r in records
                if (r["model"], r["language"], r["experiment"]) == (model, language, conf)
                and r["match"] == match_value
            ]
            rouge_vals = [r["rouge_l"]["f1"] for r in sub if r.get("rouge_l")]
            bert_vals = [r["bertscore"]["f1"] for r in sub if r.get("bertscore")]
            rows.append([
                model, language, conf, label,
                f"{sum(rouge_vals) / len(rouge_vals):.3f}" if rouge_vals else "-",
                f"{sum(bert_vals) / len(bert_vals):.3f}" if bert_vals else "-",
            ])
    return _render(["model", "lang", "experiment", "retrieval", "ROUGE-L", "BERTScore"], rows, fmt)


def render_report(records: Sequence[dict], table: str, fmt: str = "md",
                  feature: str = "faithfulness", threshold: int = 5) -> str:
    if table == "hit-rate":
        return report_hit_rate(records, fmt)
    if table == "judge":
        return report_judge(records, feature, fmt)
    if table == "confusion":
        return report_confusion(records, feature, threshold, fmt)
    if table == "metrics":
        return report_metrics(records, fmt)
    raise ConfigError(f"unknown table {table!r}; choose hit-rate, judge, confusion, or metrics")
