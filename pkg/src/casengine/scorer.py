"""Sequence scoring over concept vocabularies.

A SequenceScorer exposes a conditional next-token distribution and an NLL;
the reference implementation is a smoothed co-occurrence model (order-free
pair counts interpolated with a unigram). Candidate continuations are drawn
with temperature and in-sequence dedup.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .datasets import ConceptSequence, SequenceDataset
from .errors import ArgumentError, ConfigurationError, DataError
from .vocab import Vocabulary

DEFAULT_ALPHA = 0.1
DEFAULT_LAMBDA = 0.8


class SequenceScorer(Protocol):
    vocabulary: Vocabulary

    def next_distribution(self, context: Sequence[int]) -> np.ndarray: ...

    def nll(self, sequence: ConceptSequence) -> float: ...


class CooccurrenceModel:
    """Smoothed unigram/pair-count scorer.

    P(c | context) is proportional to
        lam * mean_g (pair[g, c] + alpha) / (unigram[g] + alpha * n)
        + (1 - lam) * (unigram[c] + alpha) / (total + alpha * n),
    renormalized; an empty context falls back to the smoothed unigram.
    """

    def __init__(
        self,
        vocabulary: Vocabulary,
        unigram: np.ndarray,
        pair: np.ndarray,
        alpha: float = DEFAULT_ALPHA,
        lam: float = DEFAULT_LAMBDA,
    ) -> None:
        if alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if not 0.0 <= lam <= 1.0:
            raise ConfigurationError("lambda must be in [0, 1]")
        n = vocabulary.size
        if unigram.shape != (n,) or pair.shape != (n, n):
            raise ConfigurationError("count shapes do not match vocabulary size")
        self.vocabulary = vocabulary
        self.unigram = unigram.astype(np.int64)
        self.pair = pair.astype(np.int64)
        self.alpha = float(alpha)
        self.lam = float(lam)
        # Precomputed smoothed tables: scoring is read-only and hot.
        denom = self.unigram + alpha * n
        self._cond = (self.pair + alpha) / denom[:, None]
        total = float(self.unigram.sum())
        self._uni = (self.unigram + alpha) / (total + alpha * n)

    def _check_tokens(self, tokens: Sequence[int]) -> None:
        n = self.vocabulary.size
        for t in tokens:
            if not 0 <= t < n:
                raise DataError(f"token {t} outside vocabulary of size {n}")

    def next_distribution(self, context: Sequence[int]) -> np.ndarray:
        self._check_tokens(context)
        if len(context) == 0:
            p = self._uni.copy()
        else:
            mixed = self.lam * self._cond[list(context)].mean(axis=0) + (1.0 - self.lam) * self._uni
            p = mixed
        return p / p.sum()

    def nll(self, sequence: ConceptSequence) -> float:
        total = 0.0
        tokens = sequence.tokens
        self._check_tokens(tokens)
        for i, tok in enumerate(tokens):
            p = self.next_distribution(tokens[:i])
            total -= float(np.log(p[tok]))
        return total

    def save(self, path: str | Path) -> None:
        obj = {
            "format": "cooccurrence-model-v1",
            "vocab_hash": self.vocabulary.content_hash(),
            "alpha": self.alpha,
            "lambda": self.lam,
            "unigram": self.unigram.tolist(),
            "pair": self.pair.tolist(),
        }
        Path(path).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, vocabulary: Vocabulary) -> "CooccurrenceModel":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if obj.get("format") != "cooccurrence-model-v1":
            raise DataError("unrecognized model file format")
        if obj["vocab_hash"] != vocabulary.content_hash():
            raise DataError("model vocabulary hash does not match the supplied vocabulary")
        return cls(
            vocabulary,
            np.asarray(obj["unigram"], dtype=np.int64),
            np.asarray(obj["pair"], dtype=np.int64),
            alpha=obj["alpha"],
            lam=obj["lambda"],
        )


def train(
    dataset: SequenceDataset,
    vocabulary: Vocabulary,
    alpha: float = DEFAULT_ALPHA,
    lam: float = DEFAULT_LAMBDA,
) -> CooccurrenceModel:
    """Tally exact unigram and once-per-sequence pair co-occurrence counts."""
    n = vocabulary.size
    unigram = np.zeros(n, dtype=np.int64)
    pair = np.zeros((n, n), dtype=np.int64)
    for seq in dataset:
        for t in seq.tokens:
            if not 0 <= t < n:
                raise DataError(f"token {t} outside vocabulary of size {n}")
            unigram[t] += 1
        distinct = sorted(set(seq.tokens))
        for i, a in enumerate(distinct):
            for b in distinct[i + 1 :]:
                pair[a, b] += 1
                pair[b, a] += 1
    return CooccurrenceModel(vocabulary, unigram, pair, alpha=alpha, lam=lam)


def nll(model: SequenceScorer, sequence: ConceptSequence) -> float:
    return model.nll(sequence)


def sample_continuations(
    model: SequenceScorer,
    context: ConceptSequence,
    count: int,
    temperature: float,
    max_length: int,
    seed: int,
) -> list[ConceptSequence]:
    """Draw `count` tempered continuations of `context`, deduping within each sequence.

    Step probabilities use logits divided by the temperature; tokens already in
    the prefix get zero mass. If all mass is excluded the sequence truncates.
    """
    if temperature <= 0:
        raise ConfigurationError("temperature must be positive")
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if len(context) >= max_length:
        raise ArgumentError("context length must be below max_length")
    rng = np.random.default_rng(seed)
    n = model.vocabulary.size
    out: list[ConceptSequence] = []
    for _ in range(count):
        tokens = list(context.tokens)
        while len(tokens) < max_length:
            p = model.next_distribution(tokens)
            logits = np.log(p) / temperature
            logits -= logits.max()
            w = np.exp(logits)
            w[tokens] = 0.0
            total = w.sum()
            if total <= 0.0:
                break
            tokens.append(int(rng.choice(n, p=w / total)))
        out.append(ConceptSequence(tuple(tokens), origin="generated"))
    return out
