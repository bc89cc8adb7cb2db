"""Training datasets of concept sequences.

Two constructions: per-artwork random permutations of each artwork's concept
set, and per-artist fixed-length uniform samples from the artist vocabulary.
Both are deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError
from .vocab import ArtistRecord, ArtworkRecord, Vocabulary

DEFAULT_SEQUENCE_LENGTH = 10
DEFAULT_PERMUTATIONS_PER_ARTWORK = 100
DEFAULT_SEQUENCES_PER_ARTWORK = 100


@dataclass(frozen=True)
class ConceptSequence:
    tokens: tuple[int, ...]
    origin: str = "generated"  # "artwork" | "artist" | "generated"

    def __post_init__(self) -> None:
        if not self.tokens:
            raise DataError("concept sequence must be non-empty")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class SequenceDataset:
    sequences: list[ConceptSequence]
    seed: int
    params: dict | None = None

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self) -> Iterator[ConceptSequence]:
        return iter(self.sequences)


def iter_artwork_sequences(
    artworks: Sequence[ArtworkRecord], permutations_per_artwork: int, seed: int
) -> Iterator[ConceptSequence]:
    rng = np.random.default_rng(seed)
    for aw in artworks:
        if not aw.concepts:
            raise DataError(f"artwork {aw.artwork_id!r} has no concepts")
        base = np.array(sorted(aw.concepts), dtype=np.int64)
        for _ in range(permutations_per_artwork):
            perm = rng.permutation(base)
            yield ConceptSequence(tuple(int(x) for x in perm), origin="artwork")


def build_artwork_dataset(
    artworks: Sequence[ArtworkRecord],
    permutations_per_artwork: int = DEFAULT_PERMUTATIONS_PER_ARTWORK,
    seed: int = 0,
) -> SequenceDataset:
    """permutations_per_artwork random permutations of each artwork's concept set."""
    seqs = list(iter_artwork_sequences(artworks, permutations_per_artwork, seed))
    return SequenceDataset(
        seqs, seed, params={"permutations_per_artwork": permutations_per_artwork}
    )


def iter_artist_sequences(
    artists: Sequence[ArtistRecord],
    sequence_length: int,
    sequences_per_artwork: int,
    seed: int,
) -> Iterator[ConceptSequence]:
    rng = np.random.default_rng(seed)
    for artist in artists:
        if not artist.vocabulary:
            raise DataError(f"artist {artist.artist_id!r} has an empty vocabulary")
        vk = np.array(sorted(artist.vocabulary), dtype=np.int64)
        # With replacement only when the vocabulary is too small for a
        # fixed-length sample without it.
        replace = len(vk) < sequence_length
        for _ in range(sequences_per_artwork * artist.artwork_count):
            pick = rng.choice(vk, size=sequence_length, replace=replace)
            yield ConceptSequence(tuple(int(x) for x in pick), origin="artist")


def build_artist_dataset(
    artists: Sequence[ArtistRecord],
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH,
    sequences_per_artwork: int = DEFAULT_SEQUENCES_PER_ARTWORK,
    seed: int = 0,
) -> SequenceDataset:
    """Per artist: sequences_per_artwork x artwork_count uniform samples from V_k."""
    seqs = list(
        iter_artist_sequences(artists, sequence_length, sequences_per_artwork, seed)
    )
    return SequenceDataset(
        seqs,
        seed,
        params={
            "sequence_length": sequence_length,
            "sequences_per_artwork": sequences_per_artwork,
        },
    )


def save_dataset(dataset: SequenceDataset, vocabulary: Vocabulary, path: str | Path) -> None:
    """One sequence per line, space-separated labels; header records seed/params."""
    import json

    header = {"seed": dataset.seed, "params": dataset.params or {}}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        for seq in dataset.sequences:
            fh.write(" ".join(vocabulary.label_of(t) for t in seq.tokens) + "\n")


def load_dataset(path: str | Path, vocabulary: Vocabulary, origin: str = "generated") -> SequenceDataset:
    import json

    seed = 0
    params: dict = {}
    sequences: list[ConceptSequence] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            header = json.loads(line[1:].strip())
            seed = header.get("seed", 0)
            params = header.get("params", {})
            continue
        if not line.strip():
            continue
        tokens = tuple(vocabulary.id_of(lbl) for lbl in line.split())
        sequences.append(ConceptSequence(tokens, origin=origin))
    return SequenceDataset(sequences, seed, params=params)
