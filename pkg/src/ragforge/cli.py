"""Command-line entry point.

Subcommands: ingest, index, ask, eval, grid, report. Every failure exits
nonzero with a message labeled by the failing stage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .corpus import load_corpus, load_qa_set
from .errors import RagforgeError
from .generate import LlmClient
from .runner import (
    FixedClock,
    SystemClock,
    build_and_save_indices,
    ensure_bundle,
    load_config,
    make_experiment,
    read_records,
    render_report,
    run_experiment,
    run_grid,
    write_records,
)
from .index import build_index
from .retrieve import retrieve_pipeline


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML harness config", default=None)
    parser.add_argument("--corpus", help="corpus JSON file")
    parser.add_argument("--qa", help="QA set JSON file")
    parser.add_argument("--out", help="output directory", default="out")
    parser.add_argument("--mock", action="store_true", help="force all endpoints to the deterministic mock")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus and QA set")
    _add_common(p)

    p = sub.add_parser("index", help="build and persist per-language indices")
    _add_common(p)

    p = sub.add_parser("ask", help="answer one question with a stage trace")
    _add_common(p)
    p.add_argument("--question", required=True)
    p.add_argument("--lang", choices=["en", "de"], default="en")
    p.add_argument("--experiment", default="er", help="toggle combination, e.g. mq-er")

    p = sub.add_parser("eval", help="run one experiment over the QA set")
    _add_common(p)
    p.add_argument("--experiment", required=True)
    p.add_argument("--lang", choices=["en", "de"], required=True)

    p = sub.add_parser("grid", help="run the full toggle grid")
    _add_common(p)

    p = sub.add_parser("report", help="render tables from persisted results")
    _add_common(p)
    p.add_argument("--results", help="results JSONL (default: <out>/results.jsonl)")
    p.add_argument("--table", required=True, choices=["hit-rate", "judge", "confusion", "metrics"])
    p.add_argument("--feature", default="faithfulness")
    p.add_argument("--threshold", type=int, default=5)
    p.add_argument("--format", dest="fmt", default="md", choices=["md", "csv"])

    return parser


def _config(args) -> "HarnessConfig":
    cfg = load_config(args.config)
    if getattr(args, "corpus", None):
        cfg.corpus_path = args.corpus
    if getattr(args, "qa", None):
        cfg.qa_path = args.qa
    if getattr(args, "mock", False):
        cfg = cfg.force_mock()
    return cfg


def _load_corpus_or_fail(cfg, stage: str):
    if not cfg.corpus_path:
        raise RagforgeError(f"{stage}: no corpus given (use --corpus or the config file)")
    return load_corpus(cfg.corpus_path)


def cmd_ingest(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus_or_fail(cfg, "ingest")
    n_sections = sum(len(doc.sections) for doc in corpus)
    print(f"corpus OK: {len(corpus)} programs, {n_sections} sections "
          f"({sum(1 for d in corpus if d.language == 'en')} en / "
          f"{sum(1 for d in corpus if d.language == 'de')} de)")
    if cfg.qa_path:
        qa = load_qa_set(cfg.qa_path, corpus)
        print(f"qa set OK: {len(qa)} items")
    return 0


def cmd_index(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus_or_fail(cfg, "index")
    paths = build_and_save_indices(corpus, cfg.provider(), args.out)
    for path in paths:
        print(f"index written: {path}")
    return 0


def cmd_ask(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus_or_fail(cfg, "ask")
    lang_corpus = corpus.for_language(args.lang)
    provider = cfg.provider()
    index_path = Path(args.out) / f"index-{args.lang}"
    if index_path.exists():
        bundle = ensure_bundle(args.out, args.lang)
    else:
        print(f"(no persisted index at {index_path}, building in memory)")
        bundle = build_index(lang_corpus, provider, args.lang)
    model = cfg.models[0]
    exp = make_experiment(args.experiment, args.lang, model, cfg)
    llm = LlmClient(endpoint=model.build(), model_id=model.model, temperature=cfg.temperature)

    result = retrieve_pipeline(args.question, exp.retriever, bundle, provider, llm, lang_corpus)
    print(f"stages: {' -> '.join(result.stages)}")
    print(f"predicted program: {result.predicted_program_id}")
    print(f"predicted topic:   {result.predicted_topic_id}")
    if len(result.queries) > 1:
        print("queries:")
        for q in result.queries:
            print(f"  - {q}")
    print("retrieved:")
    labels = bundle.parent_labels()
    for rank, (cid, score) in enumerate(result.ranked.entries, start=1):
        program_id, topic_id = labels[cid]
        print(f"  {rank}. [{score:.4f}] {program_id} / {topic_id}")

    from .generate import ContextChunk, build_prompt, complete

    names = {doc.program_id: doc.name for doc in corpus}
    titles = {(d.program_id, s.topic_id): s.title for d in corpus for s in d.sections}
    chunks = [
        ContextChunk(
            chunk_id=cid,
            program_name=names[bundle.parents[cid].program_id],
            topic_title=titles[(bundle.parents[cid].program_id, bundle.parents[cid].topic_id)],
            text=bundle.parents[cid].text,
        )
        for cid, _ in result.ranked.entries[: exp.generation.max_context_chunks]
    ]
    answer = complete(model.build(), build_prompt(args.question, chunks, exp.generation), exp.generation)
    print(f"answer: {answer}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus_or_fail(cfg, "eval")
    if not cfg.qa_path:
        raise RagforgeError("eval: no QA set given (use --qa or the config file)")
    qa = load_qa_set(cfg.qa_path, corpus)
    provider = cfg.provider()
    bundle = ensure_bundle(args.out, args.lang)
    model = cfg.models[0]
    exp = make_experiment(args.experiment, args.lang, model, cfg)
    judge = LlmClient(endpoint=cfg.judge.build(), model_id=cfg.judge.model)
    clock = FixedClock() if args.mock else SystemClock()
    records = run_experiment(
        exp, corpus, qa, bundle, provider, model.build(), judge,
        clock=clock, concurrency=cfg.concurrency, subset_size=cfg.qa_subset_size,
    )
    results_path = Path(args.out) / "results.jsonl"
    write_records(records, results_path)
    hits = sum(1 for r in records if r.hit)
    print(f"experiment {exp.name}/{args.lang}: {len(records)} records, "
          f"hit rate {100.0 * hits / len(records):.2f}%" if records else "no records")
    print(f"results appended to {results_path}")
    return 0


def cmd_grid(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus_or_fail(cfg, "grid")
    if not cfg.qa_path:
        raise RagforgeError("grid: no QA set given (use --qa or the config file)")
    qa = load_qa_set(cfg.qa_path, corpus)
    clock = FixedClock() if args.mock else SystemClock()
    results_path = run_grid(cfg, corpus, qa, args.out, clock=clock)
    print(f"grid complete: results at {results_path}")
    return 0


def cmd_report(args) -> int:
    cfg = _config(args)
    results = args.results or str(Path(args.out) / "results.jsonl")
    records = read_records(results)
    print(render_report(records, args.table, args.fmt, feature=args.feature, threshold=args.threshold), end="")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "ask": cmd_ask,
    "eval": cmd_eval,
    "grid": cmd_grid,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except RagforgeError as exc:
        print(f"ragforge {args.command}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"ragforge {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
