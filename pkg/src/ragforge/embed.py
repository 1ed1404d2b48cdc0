"""Text embeddings behind a pluggable provider, plus cosine similarity.

Two providers ship with the engine:

* ``HashingEmbeddingProvider`` — the offline fallback. A pure function of the
  input bytes: lowercase the text, extract word tokens and character
  trigrams, hash every feature with a stable 64-bit hash into a 256-bucket
  signed-count vector, L2-normalize. No model, no randomness, no process
  state; identical output across machines and restarts.
* ``HttpEmbeddingProvider`` — talks to the embedding sidecar over
  ``POST /v1/embed`` with body ``{"texts": [str]}`` and response
  ``{"dim": int, "vectors": [[float]]}``.

Every provider must be deterministic: the same input text yields the same
vector for the lifetime of the provider instance.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import ProtocolError, TransportError

FALLBACK_DIM = 256
FALLBACK_PROVIDER_ID = "fallback:hashing-256"

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def _stable_hash64(feature: str) -> int:
    """64-bit hash that is stable across processes and platforms."""
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _features(text: str) -> list[str]:
    lowered = text.lower()
    feats = ["w:" + tok for tok in _WORD_RE.findall(lowered)]
    feats += ["c:" + lowered[i : i + 3] for i in range(len(lowered) - 2)]
    if not feats:
        # Degenerate inputs (e.g. "!") still need a nonzero vector.
        feats = ["t:" + lowered]
    return feats


class HashingEmbeddingProvider:
    """Deterministic lexical embedding: hashed words + character trigrams.

    Bucket comes from the high bits of the feature hash, the sign from its
    parity, so the two are independent. Output is L2-normalized.
    """

    def __init__(self, dim: int = FALLBACK_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.provider_id = f"fallback:hashing-{dim}"

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._embed_one(t) for t in texts]

    def _embed_one(self, text: str) -> np.ndarray:
        if not isinstance(text, str) or text == "":
            raise ValueError("texts must be non-empty strings")
        vec = np.zeros(self.dim, dtype=np.float64)
        for feat in _features(text):
            h = _stable_hash64(feat)
            sign = 1.0 if h % 2 == 0 else -1.0
            bucket = (h >> 1) % self.dim
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Signed counts cancelled out; fall back to an unsigned recount.
            for feat in _features(text):
                h = _stable_hash64(feat)
                vec[(h >> 1) % self.dim] += 1.0
            norm = float(np.linalg.norm(vec))
        return vec / norm


class HttpEmbeddingProvider:
    """Provider backed by the embedding sidecar service."""

    def __init__(self, base_url: str, dim: int, provider_id: str | None = None, timeout: float = 30.0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.base_url = base_url.rstrip("/")
        self.dim = dim
        self.provider_id = provider_id or f"http:{self.base_url}"
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        for t in texts:
            if not isinstance(t, str) or t == "":
                raise ValueError("texts must be non-empty strings")
        if not texts:
            return []
        try:
            resp = requests.post(
                f"{self.base_url}/v1/embed", json={"texts": list(texts)}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"embedding sidecar unreachable at {self.base_url}: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"embedding sidecar returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            dim = int(payload["dim"])
            vectors = payload["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed embed response: {exc}") from exc
        if dim != self.dim:
            raise ProtocolError(f"provider declared dim {self.dim} but returned dim {dim}")
        if len(vectors) != len(texts):
            raise ProtocolError(f"asked for {len(texts)} vectors, got {len(vectors)}")
        out = []
        for v in vectors:
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise ProtocolError(f"vector of shape {arr.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(arr)):
                raise ProtocolError("vector contains non-finite entries")
            out.append(arr)
        return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a,b) / (|a||b|). Rejects dimension mismatches and zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))
