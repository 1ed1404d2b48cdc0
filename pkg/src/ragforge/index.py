"""Chunking and search structures: BM25 inverted index and cosine vector store.

Each topic section is split into parent chunks (default cap 1500 chars) and
every parent into child chunks (default cap 300 chars). Splits are greedy at
the last whitespace at or before the cap, falling back to a hard cut only
when a single unbroken token exceeds it. Splitting never crosses section
boundaries and is lossless: parents concatenate back to the section body and
children back to their parent.

Both granularities are indexed twice, in a BM25 index and in a vector store.
The persisted bundle layout (``save_index``/``load_index``) is a directory:

    meta.json     index format version, provider_id, k1/b, chunk limits
    chunks.jsonl  one parent or child chunk per line
    postings.bin  both BM25 indices (binary, see _write_bm25 for the layout)
    vectors.bin   both vector stores, little-endian float32 rows
"""

from __future__ import annotations

import io
import json
import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import StudyProgramDoc
from .embed import EmbeddingProvider
from .errors import IndexFormatError

PARENT_LIMIT = 1500
CHILD_LIMIT = 300
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

INDEX_FORMAT = "ragforge-index"
INDEX_VERSION = 1
_POSTINGS_MAGIC = b"RGFPOST1"
_VECTORS_MAGIC = b"RGFVECS1"


def tokenize(text: str) -> list[str]:
    """Lowercase Unicode-alphanumeric word tokens, language-agnostic."""
    return _TOKEN_RE.findall(text.lower())


# ---------------------------------------------------------------------------
# Chunking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParentChunk:
    parent_id: str
    program_id: str
    topic_id: str
    text: str
    child_ids: tuple[str, ...]


@dataclass(frozen=True)
class ChildChunk:
    child_id: str
    parent_id: str
    text: str


def split_text(text: str, limit: int) -> list[str]:
    """Greedy lossless split: pieces of at most ``limit`` chars, cut after the
    last whitespace inside the window; hard cut when a token exceeds the limit.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    pieces: list[str] = []
    rest = text
    while len(rest) > limit:
        cut = limit
        for i in range(limit - 1, -1, -1):
            if rest[i].isspace():
                cut = i + 1
                break
        pieces.append(rest[:cut])
        rest = rest[cut:]
    if rest:
        pieces.append(rest)
    return pieces


def chunk_document(
    doc: StudyProgramDoc,
    parent_limit: int = PARENT_LIMIT,
    child_limit: int = CHILD_LIMIT,
) -> tuple[list[ParentChunk], list[ChildChunk]]:
    """Split every topic section of ``doc`` into linked parent/child chunks."""
    if parent_limit <= 0 or child_limit <= 0:
        raise ValueError("chunk limits must be positive")
    if child_limit > parent_limit:
        raise ValueError("child_limit must not exceed parent_limit")
    parents: list[ParentChunk] = []
    children: list[ChildChunk] = []
    for sec in doc.sections:
        for p_pos, parent_text in enumerate(split_text(sec.body, parent_limit)):
            parent_id = f"{doc.program_id}#{sec.topic_id}#p{p_pos}"
            child_ids = []
            for c_pos, child_text in enumerate(split_text(parent_text, child_limit)):
                child_id = f"{parent_id}#c{c_pos}"
                child_ids.append(child_id)
                children.append(ChildChunk(child_id=child_id, parent_id=parent_id, text=child_text))
            parents.append(
                ParentChunk(
                    parent_id=parent_id,
                    program_id=doc.program_id,
                    topic_id=sec.topic_id,
                    text=parent_text,
                    child_ids=tuple(child_ids),
                )
            )
    return parents, children


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------

@dataclass
class Bm25Index:
    """Okapi BM25 inverted index over a fixed chunk set.

    score(q, d) = sum over query term occurrences t of
        idf(t) * tf / (tf + k1 * (1 - b + b * len(d)/avglen))
    with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
    """

    postings: dict[str, dict[str, int]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    n_docs: int
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def build_bm25(texts: Mapping[str, str], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for chunk_id in sorted(texts):
        tokens = tokenize(texts[chunk_id])
        doc_lengths[chunk_id] = len(tokens)
        for tok in tokens:
            postings.setdefault(tok, {})
            postings[tok][chunk_id] = postings[tok].get(chunk_id, 0) + 1
    n = len(doc_lengths)
    avg = sum(doc_lengths.values()) / n if n else 0.0
    return Bm25Index(postings=postings, doc_lengths=doc_lengths, avg_doc_length=avg, n_docs=n, k1=k1, b=b)


def _bm25_term_weight(index: Bm25Index, term: str, tf: int, doc_len: int) -> float:
    if tf == 0:
        return 0.0
    rel_len = doc_len / index.avg_doc_length if index.avg_doc_length > 0 else 0.0
    return index.idf(term) * tf / (tf + index.k1 * (1.0 - index.b + index.b * rel_len))


def bm25_score(index: Bm25Index, query_terms: Sequence[str], chunk_id: str) -> float:
    """Score one indexed chunk against a term sequence (duplicates count twice)."""
    if chunk_id not in index.doc_lengths:
        raise ValueError(f"chunk {chunk_id!r} is not indexed")
    doc_len = index.doc_lengths[chunk_id]
    score = 0.0
    for term in query_terms:
        tf = index.postings.get(term, {}).get(chunk_id, 0)
        score += _bm25_term_weight(index, term, tf, doc_len)
    return score


# ---------------------------------------------------------------------------
# Ranked results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankedList:
    """Ordered (chunk_id, score) results. Scores non-increasing, ids unique."""

    entries: tuple[tuple[str, float], ...]
    source: str

    def __post_init__(self):
        ids = [cid for cid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate chunk_id in ranked list")
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be non-increasing")

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _ranked(scores: Mapping[str, float], top_k: int, source: str) -> RankedList:
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(entries=tuple(ordered[:top_k]), source=source)


def bm25_search(
    index: Bm25Index,
    query_text: str,
    top_k: int,
    allowed: frozenset[str] | set[str] | None = None,
) -> RankedList:
    """Top-k chunks by BM25 score; chunks matching no query term are omitted."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    terms = tokenize(query_text)
    scores: dict[str, float] = {}
    for term in terms:
        for chunk_id, tf in index.postings.get(term, {}).items():
            if allowed is not None and chunk_id not in allowed:
                continue
            weight = _bm25_term_weight(index, term, tf, index.doc_lengths[chunk_id])
            scores[chunk_id] = scores.get(chunk_id, 0.0) + weight
    return _ranked(scores, top_k, "bm25")


# ---------------------------------------------------------------------------
# Vector store
# ---------------------------------------------------------------------------

@dataclass
class VectorStore:
    """chunk_id -> embedding, held as float32 rows (the on-disk precision)."""

    provider_id: str
    ids: tuple[str, ...]
    matrix: np.ndarray  # shape (len(ids), dim), float32

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1]) if self.matrix.size else 0

    def vector(self, chunk_id: str) -> np.ndarray:
        try:
            row = self.ids.index(chunk_id)
        except ValueError:
            raise KeyError(f"chunk {chunk_id!r} not in vector store") from None
        return self.matrix[row]


def build_vector_store(provider: EmbeddingProvider, texts: Mapping[str, str]) -> VectorStore:
    ids = tuple(sorted(texts))
    if not ids:
        return VectorStore(provider_id=provider.provider_id, ids=(), matrix=np.zeros((0, provider.dim), dtype=np.float32))
    vectors = provider.embed([texts[i] for i in ids])
    matrix = np.asarray(vectors, dtype=np.float32)
    return VectorStore(provider_id=provider.provider_id, ids=ids, matrix=matrix)


def vector_search(
    store: VectorStore,
    query_vector: np.ndarray,
    top_k: int,
    allowed: frozenset[str] | set[str] | None = None,
) -> RankedList:
    """Top-k chunks by cosine similarity, ties broken by ascending chunk_id."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not store.ids:
        return RankedList(entries=(), source="dense")
    q = np.asarray(query_vector, dtype=np.float64)
    qn = float(np.linalg.norm(q))
    if qn == 0.0:
        raise ValueError("query vector must be nonzero")
    mat = store.matrix.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    norms[norms == 0.0] = 1.0  # zero rows get similarity 0, not NaN
    sims = (mat @ q) / (norms * qn)
    scores = {
        cid: float(sims[i])
        for i, cid in enumerate(store.ids)
        if allowed is None or cid in allowed
    }
    return _ranked(scores, top_k, "dense")


# ---------------------------------------------------------------------------
# Index bundle build + persistence
# ---------------------------------------------------------------------------

@dataclass
class IndexBundle:
    provider_id: str
    language: str
    k1: float
    b: float
    parent_limit: int
    child_limit: int
    parents: dict[str, ParentChunk]
    children: dict[str, ChildChunk]
    bm25_parents: Bm25Index
    bm25_children: Bm25Index
    parent_vectors: VectorStore
    child_vectors: VectorStore

    def parent_labels(self) -> dict[str, tuple[str, str]]:
        """parent_id -> (program_id, topic_id), the hit-rate unit."""
        return {p.parent_id: (p.program_id, p.topic_id) for p in self.parents.values()}

    def chunks_of_program(self, program_id: str) -> frozenset[str]:
        keep = {p.parent_id for p in self.parents.values() if p.program_id == program_id}
        keep |= {c.child_id for c in self.children.values() if self.parents[c.parent_id].program_id == program_id}
        return frozenset(keep)


def build_index(
    docs: Iterable[StudyProgramDoc],
    provider: EmbeddingProvider,
    language: str,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    parent_limit: int = PARENT_LIMIT,
    child_limit: int = CHILD_LIMIT,
) -> IndexBundle:
    parents: dict[str, ParentChunk] = {}
    children: dict[str, ChildChunk] = {}
    for doc in docs:
        p, c = chunk_document(doc, parent_limit, child_limit)
        for chunk in p:
            parents[chunk.parent_id] = chunk
        for chunk in c:
            children[chunk.child_id] = chunk
    parent_texts = {pid: chunk.text for pid, chunk in parents.items()}
    child_texts = {cid: chunk.text for cid, chunk in children.items()}
    return IndexBundle(
        provider_id=provider.provider_id,
        language=language,
        k1=k1,
        b=b,
        parent_limit=parent_limit,
        child_limit=child_limit,
        parents=parents,
        children=children,
        bm25_parents=build_bm25(parent_texts, k1, b),
        bm25_children=build_bm25(child_texts, k1, b),
        parent_vectors=build_vector_store(provider, parent_texts),
        child_vectors=build_vector_store(provider, child_texts),
    )


def _write_str(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _read_str(buf: io.BufferedReader) -> str:
    (n,) = struct.unpack("<I", buf.read(4))
    return buf.read(n).decode("utf-8")


def _write_bm25(buf: io.BytesIO, index: Bm25Index) -> None:
    # Layout (little-endian): u32 n_docs, f64 avg_doc_length,
    # u32 doc count then (id, u32 token length) per doc,
    # u32 term count then (term, u32 postings, (chunk_id, u32 tf)*) per term.
    # Docs and terms sorted for byte-stable output.
    buf.write(struct.pack("<I", index.n_docs))
    buf.write(struct.pack("<d", index.avg_doc_length))
    buf.write(struct.pack("<I", len(index.doc_lengths)))
    for chunk_id in sorted(index.doc_lengths):
        _write_str(buf, chunk_id)
        buf.write(struct.pack("<I", index.doc_lengths[chunk_id]))
    buf.write(struct.pack("<I", len(index.postings)))
    for term in sorted(index.postings):
        _write_str(buf, term)
        plist = index.postings[term]
        buf.write(struct.pack("<I", len(plist)))
        for chunk_id in sorted(plist):
            _write_str(buf, chunk_id)
            buf.write(struct.pack("<I", plist[chunk_id]))


def _read_bm25(buf, k1: float, b: float) -> Bm25Index:
    (n_docs,) = struct.unpack("<I", buf.read(4))
    (avg,) = struct.unpack("<d", buf.read(8))
    (n_len,) = struct.unpack("<I", buf.read(4))
    doc_lengths = {}
    for _ in range(n_len):
        cid = _read_str(buf)
        (length,) = struct.unpack("<I", buf.read(4))
        doc_lengths[cid] = length
    (n_terms,) = struct.unpack("<I", buf.read(4))
    postings: dict[str, dict[str, int]] = {}
    for _ in range(n_terms):
        term = _read_str(buf)
        (n_post,) = struct.unpack("<I", buf.read(4))
        plist = {}
        for _ in range(n_post):
            cid = _read_str(buf)
            (tf,) = struct.unpack("<I", buf.read(4))
            plist[cid] = tf
        postings[term] = plist
    return Bm25Index(postings=postings, doc_lengths=doc_lengths, avg_doc_length=avg, n_docs=n_docs, k1=k1, b=b)


def _write_vectors(buf: io.BytesIO, store: VectorStore) -> None:
    # Layout: u32 dim, u32 rows, then per row: chunk_id, dim little-endian f32.
    dim = store.dim
    buf.write(struct.pack("<II", dim, len(store.ids)))
    for i, cid in enumerate(store.ids):
        _write_str(buf, cid)
        buf.write(store.matrix[i].astype("<f4").tobytes())


def _read_vectors(buf, provider_id: str) -> VectorStore:
    dim, rows = struct.unpack("<II", buf.read(8))
    ids = []
    mat = np.zeros((rows, dim), dtype=np.float32)
    for i in range(rows):
        ids.append(_read_str(buf))
        mat[i] = np.frombuffer(buf.read(4 * dim), dtype="<f4")
    return VectorStore(provider_id=provider_id, ids=tuple(ids), matrix=mat)


def save_index(bundle: IndexBundle, path: str | Path) -> None:
    """Persist the bundle into directory ``path`` (created if missing)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "provider_id": bundle.provider_id,
        "language": bundle.language,
        "k1": bundle.k1,
        "b": bundle.b,
        "parent_limit": bundle.parent_limit,
        "child_limit": bundle.child_limit,
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")

    with (root / "chunks.jsonl").open("w", encoding="utf-8") as f:
        for pid in sorted(bundle.parents):
            p = bundle.parents[pid]
            f.write(json.dumps({
                "kind": "parent", "parent_id": p.parent_id, "program_id": p.program_id,
                "topic_id": p.topic_id, "text": p.text, "child_ids": list(p.child_ids),
            }, ensure_ascii=False, sort_keys=True) + "\n")
        for cid in sorted(bundle.children):
            c = bundle.children[cid]
            f.write(json.dumps({
                "kind": "child", "child_id": c.child_id, "parent_id": c.parent_id, "text": c.text,
            }, ensure_ascii=False, sort_keys=True) + "\n")

    post = io.BytesIO()
    post.write(_POSTINGS_MAGIC)
    _write_bm25(post, bundle.bm25_parents)
    _write_bm25(post, bundle.bm25_children)
    (root / "postings.bin").write_bytes(post.getvalue())

    vecs = io.BytesIO()
    vecs.write(_VECTORS_MAGIC)
    _write_vectors(vecs, bundle.parent_vectors)
    _write_vectors(vecs, bundle.child_vectors)
    (root / "vectors.bin").write_bytes(vecs.getvalue())


def load_index(path: str | Path) -> IndexBundle:
    """Load a persisted bundle; refuses unknown formats and versions."""
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise IndexFormatError(f"{root}: not an index bundle (meta.json missing)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format") != INDEX_FORMAT:
        raise IndexFormatError(f"{root}: unknown index format {meta.get('format')!r}")
    if meta.get("version") != INDEX_VERSION:
        raise IndexFormatError(
            f"{root}: index version {meta.get('version')!r} not supported, "
            f"this build reads version {INDEX_VERSION}; rebuild with the 'index' command"
        )
    k1, b = float(meta["k1"]), float(meta["b"])

    parents: dict[str, ParentChunk] = {}
    children: dict[str, ChildChunk] = {}
    with (root / "chunks.jsonl").open(encoding="utf-8") as f:
        for line in f:
            rec = json.loads(line)
            if rec["kind"] == "parent":
                parents[rec["parent_id"]] = ParentChunk(
                    parent_id=rec["parent_id"], program_id=rec["program_id"],
                    topic_id=rec["topic_id"], text=rec["text"], child_ids=tuple(rec["child_ids"]),
                )
            else:
                children[rec["child_id"]] = ChildChunk(
                    child_id=rec["child_id"], parent_id=rec["parent_id"], text=rec["text"],
                )

    raw = (root / "postings.bin").read_bytes()
    if raw[:8] != _POSTINGS_MAGIC:
        raise IndexFormatError(f"{root}/postings.bin: wrong magic header")
    buf = io.BytesIO(raw[8:])
    bm25_parents = _read_bm25(buf, k1, b)
    bm25_children = _read_bm25(buf, k1, b)

    raw = (root / "vectors.bin").read_bytes()
    if raw[:8] != _VECTORS_MAGIC:
        raise IndexFormatError(f"{root}/vectors.bin: wrong magic header")
    buf = io.BytesIO(raw[8:])
    parent_vectors = _read_vectors(buf, meta["provider_id"])
    child_vectors = _read_vectors(buf, meta["provider_id"])

    return IndexBundle(
        provider_id=meta["provider_id"],
        language=meta["language"],
        k1=k1,
        b=b,
        parent_limit=int(meta["parent_limit"]),
        child_limit=int(meta["child_limit"]),
        parents=parents,
        children=children,
        bm25_parents=bm25_parents,
        bm25_children=bm25_children,
        parent_vectors=parent_vectors,
        child_vectors=child_vectors,
    )
