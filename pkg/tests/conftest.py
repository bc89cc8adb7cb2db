import numpy as np
import pytest

from casengine.datasets import build_artist_dataset, build_artwork_dataset
from casengine.scorer import train
from casengine.vocab import ArtworkRecord, Vocabulary, build_artist_records


@pytest.fixture(scope="session")
def small_vocab():
    return Vocabulary.from_labels([f"c{i:03d}" for i in range(10)])


def make_synthetic_corpus(n=100, n_artists=20, artworks_per_artist=10, seed=7):
    """20 artists with windowed 10-concept vocabularies over n=100 concepts;
    each artwork is a 4-concept subset of its artist's window."""
    rng = np.random.default_rng(seed)
    vocabulary = Vocabulary.from_labels([f"c{i:03d}" for i in range(n)])
    artworks = []
    for k in range(n_artists):
        window = [(5 * k + j) % n for j in range(10)]
        for j in range(artworks_per_artist):
            concepts = rng.choice(window, size=4, replace=False)
            artworks.append(
                ArtworkRecord(f"a{k}_{j}", f"artist{k}", frozenset(int(c) for c in concepts))
            )
    artists = build_artist_records(artworks)
    return vocabulary, artworks, artists


@pytest.fixture(scope="session")
def synthetic_corpus():
    return make_synthetic_corpus()


@pytest.fixture(scope="session")
def synthetic_scorers(synthetic_corpus):
    vocabulary, artworks, artists = synthetic_corpus
    coherence = train(build_artwork_dataset(artworks, 50, seed=11), vocabulary)
    context = train(build_artist_dataset(artists, 5, 50, seed=12), vocabulary)
    return coherence, context
