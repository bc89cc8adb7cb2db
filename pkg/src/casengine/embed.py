"""Text/image embedding contract, deterministic offline embedders, cosine utilities.

The deterministic embedders hash character 3-grams (text) or byte blocks
(images) into a fixed 64-dimensional vector via a stable seeded digest, so
similar inputs get correlated vectors without any model download.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import EmbeddingError

DETERMINISTIC_DIM = 64


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    kind: str  # "text" | "image"
    source: str = "deterministic"  # "deterministic" | "bridge"

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise EmbeddingError("zero vector cannot be normalized")
        object.__setattr__(self, "values", v / norm)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class TextEmbedder(Protocol):
    def embed_text(self, text: str) -> EmbeddingVector: ...


class ImageEmbedder(Protocol):
    def embed_image(self, data: bytes) -> EmbeddingVector: ...


def _fold_hashes(chunks: list[bytes], seed: int, dim: int) -> np.ndarray:
    """Accumulate each chunk's digest into a signed bucket of a dim-vector."""
    acc = np.zeros(dim, dtype=float)
    seed_bytes = seed.to_bytes(8, "little", signed=True)
    for chunk in chunks:
        digest = hashlib.blake2b(chunk, key=seed_bytes, digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        index = value % dim
        sign = 1.0 if (value >> 63) & 1 == 0 else -1.0
        acc[index] += sign
    if not acc.any():
        acc[0] = 1.0
    return acc


class DeterministicTextEmbedder:
    """Seeded character-3-gram hash embedder; pure and platform-stable."""

    def __init__(self, dim: int = DETERMINISTIC_DIM, seed: int = 0) -> None:
        self.dim = dim
        self.seed = seed

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmbeddingError("cannot embed empty text")
        padded = f"  {text}  "
        grams = [padded[i : i + 3].encode("utf-8") for i in range(len(padded) - 2)]
        return EmbeddingVector(_fold_hashes(grams, self.seed, self.dim), kind="text")


class DeterministicImageEmbedder:
    """Seeded byte-block hash embedder for image bytes."""

    def __init__(self, dim: int = DETERMINISTIC_DIM, seed: int = 0, block: int = 16) -> None:
        self.dim = dim
        self.seed = seed
        self.block = block

    def embed_image(self, data: bytes) -> EmbeddingVector:
        if not data:
            raise EmbeddingError("cannot embed empty image bytes")
        blocks = [data[i : i + self.block] for i in range(0, len(data), self.block)]
        return EmbeddingVector(_fold_hashes(blocks, self.seed, self.dim), kind="image")


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Dot product of normalized vectors; kinds and dimensions must match."""
    if a.kind != b.kind:
        raise EmbeddingError(f"kind mismatch: {a.kind} vs {b.kind}")
    if a.dimension != b.dimension:
        raise EmbeddingError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    return float(np.dot(a.values, b.values))


class EmbeddingCache:
    """Content-addressed vector cache persisted as JSON lines.

    Keyed by (kind, sha256 of content); versioned with a backend identity so
    vectors from different embedders never mix.
    """

    def __init__(self, path: str | Path, backend_id: str) -> None:
        self.path = Path(path)
        self.backend_id = backend_id
        self._store: dict[str, np.ndarray] = {}
        if self.path.exists():
            self._load()

    @staticmethod
    def content_key(kind: str, content: bytes) -> str:
        return f"{kind}:{hashlib.sha256(content).hexdigest()}"

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["backend"] != self.backend_id:
                continue
            self._store[obj["key"]] = np.asarray(obj["vector"], dtype=float)

    def get(self, key: str) -> np.ndarray | None:
        return self._store.get(key)

    def put(self, key: str, vector: np.ndarray) -> None:
        if key in self._store:
            return
        self._store[key] = np.asarray(vector, dtype=float)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"backend": self.backend_id, "key": key, "vector": [float(x) for x in vector]}
                )
                + "\n"
            )
