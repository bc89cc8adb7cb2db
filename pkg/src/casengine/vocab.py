"""Concept vocabulary construction and artwork tagging.

The vocabulary is built from a caption corpus by TF-IDF ranking; artworks are
tagged with their most similar concepts by cosine similarity over embeddings
supplied by the caller. Artist records aggregate per-artist concept unions.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DataError, EmbeddingError

_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_token(raw: str) -> str:
    """Lowercase, strip punctuation, and replace internal spaces with underscores."""
    cleaned = _PUNCT_RE.sub("", raw.lower()).strip()
    return re.sub(r"\s+", "_", cleaned)


@dataclass(frozen=True)
class Concept:
    id: int
    label: str


@dataclass
class Vocabulary:
    """Ordered concept list; id = index of the label in the sorted label list."""

    concepts: list[Concept]
    _label_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._label_to_id = {c.label: c.id for c in self.concepts}
        if len(self._label_to_id) != len(self.concepts):
            raise DataError("duplicate labels in vocabulary")

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "Vocabulary":
        ordered = sorted(set(labels))
        return cls([Concept(i, lbl) for i, lbl in enumerate(ordered)])

    @property
    def size(self) -> int:
        return len(self.concepts)

    def __len__(self) -> int:
        return len(self.concepts)

    def __contains__(self, label: str) -> bool:
        return label in self._label_to_id

    def id_of(self, label: str) -> int:
        try:
            return self._label_to_id[label]
        except KeyError:
            raise DataError(f"unknown concept label: {label!r}") from None

    def label_of(self, concept_id: int) -> str:
        if not 0 <= concept_id < len(self.concepts):
            raise DataError(f"concept id out of range: {concept_id}")
        return self.concepts[concept_id].label

    def labels(self) -> list[str]:
        return [c.label for c in self.concepts]

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256("\n".join(self.labels()).encode("utf-8"))
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.labels()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
        labels = [ln for ln in lines if ln]
        return cls([Concept(i, lbl) for i, lbl in enumerate(labels)])


@dataclass
class CaptionCorpus:
    """Documents as (doc_id, token list); tokens are normalized on construction."""

    documents: list[tuple[str, list[str]]]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        normed = []
        for doc_id, tokens in self.documents:
            if doc_id in seen:
                raise DataError(f"duplicate doc_id: {doc_id!r}")
            seen.add(doc_id)
            toks = [t for t in (normalize_token(tok) for tok in tokens) if t]
            if not toks:
                raise DataError(f"document {doc_id!r} empty after normalization")
            normed.append((doc_id, toks))
        self.documents = normed


@dataclass(frozen=True)
class ArtworkRecord:
    artwork_id: str
    artist_id: str
    concepts: frozenset[int]

    def __post_init__(self) -> None:
        if not self.concepts:
            raise DataError(f"artwork {self.artwork_id!r} has an empty concept set")


@dataclass(frozen=True)
class ArtistRecord:
    artist_id: str
    artwork_count: int
    vocabulary: frozenset[int]


def build_vocabulary(
    corpus: CaptionCorpus, top_k: int, stoplist: set[str] | None = None
) -> Vocabulary:
    """Select the top_k tokens by TF-IDF and assign ids lexicographically.

    Per-token score is the max over documents of tf * idf with
    idf = ln(D / df). Stoplist entries are removed before ranking.
    """
    if not corpus.documents:
        raise ConfigurationError("corpus is empty")
    if top_k < 1:
        raise ConfigurationError("top_k must be >= 1")
    stop = {normalize_token(s) for s in (stoplist or set())}

    n_docs = len(corpus.documents)
    df: Counter[str] = Counter()
    per_doc_tf: list[Counter[str]] = []
    for _, tokens in corpus.documents:
        tf = Counter(tokens)
        per_doc_tf.append(tf)
        df.update(tf.keys())

    scores: dict[str, float] = {}
    for tf in per_doc_tf:
        for token, count in tf.items():
            if token in stop:
                continue
            s = count * math.log(n_docs / df[token])
            if s > scores.get(token, -math.inf):
                scores[token] = s

    # Rank by score desc, label asc; keep the top_k survivors.
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = [label for label, _ in ranked[:top_k]]
    return Vocabulary.from_labels(chosen)


def assign_concepts(
    artwork_embedding: np.ndarray,
    vocabulary: Vocabulary,
    concept_embeddings: Mapping[int, np.ndarray],
    k: int,
) -> list[int]:
    """Return the k concept ids most cosine-similar to the artwork embedding.

    Descending similarity, ties broken by ascending concept id.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if k > vocabulary.size:
        raise ConfigurationError("k exceeds vocabulary size")
    artwork = np.asarray(artwork_embedding, dtype=float)
    sims: list[tuple[float, int]] = []
    for concept in vocabulary.concepts:
        emb = np.asarray(concept_embeddings[concept.id], dtype=float)
        if emb.shape != artwork.shape:
            raise EmbeddingError(
                f"dimension mismatch: artwork {artwork.shape} vs concept {concept.id} {emb.shape}"
            )
        sims.append((float(np.dot(artwork, emb)), concept.id))
    sims.sort(key=lambda p: (-p[0], p[1]))
    return [cid for _, cid in sims[:k]]


def build_artist_records(artworks: Sequence[ArtworkRecord]) -> list[ArtistRecord]:
    """Group artworks by artist; vocabulary is the union of their concept sets."""
    counts: dict[str, int] = defaultdict(int)
    unions: dict[str, set[int]] = defaultdict(set)
    order: list[str] = []
    for aw in artworks:
        if aw.artist_id not in counts:
            order.append(aw.artist_id)
        counts[aw.artist_id] += 1
        unions[aw.artist_id] |= aw.concepts
    return [
        ArtistRecord(artist_id=a, artwork_count=counts[a], vocabulary=frozenset(unions[a]))
        for a in order
    ]


def save_artworks(artworks: Sequence[ArtworkRecord], vocabulary: Vocabulary, path: str | Path) -> None:
    """One JSON record per line: artwork_id, artist_id, concepts (labels)."""
    with open(path, "w", encoding="utf-8") as fh:
        for aw in artworks:
            labels = sorted(vocabulary.label_of(c) for c in aw.concepts)
            fh.write(
                json.dumps(
                    {"artwork_id": aw.artwork_id, "artist_id": aw.artist_id, "concepts": labels},
                    sort_keys=True,
                )
                + "\n"
            )


def load_artworks(path: str | Path, vocabulary: Vocabulary) -> list[ArtworkRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(
            ArtworkRecord(
                artwork_id=obj["artwork_id"],
                artist_id=obj["artist_id"],
                concepts=frozenset(vocabulary.id_of(lbl) for lbl in obj["concepts"]),
            )
        )
    return records
