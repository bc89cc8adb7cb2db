"""Inspiration strategies: cultural-alien sampling, random, and LLM-backed.

The cultural-alien sampler draws N candidate continuations from the coherence
scorer, ranks each candidate under both the coherence and cultural-context
scorers by NLL, and combines the ranks into
    score = (1 - beta) * (N - R_coherence) - beta * (N - R_context),
so high beta favors sequences that are plausible compositions yet unlikely
for any single artist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .datasets import ConceptSequence
from .errors import (
    ArgumentError,
    InspirationFailureError,
    SamplerExhaustedError,
)
from .prompts import (
    CONSTRAINED_VOCABULARY_BLOCK,
    FREE_VOCABULARY_BLOCK,
    INSPIRATION_SYSTEM_PROMPT,
    render_inspiration_user_prompt,
)
from .scorer import SequenceScorer, sample_continuations
from .vocab import Vocabulary, normalize_token

DEFAULT_N = 256
DEFAULT_BETA = 0.85
DEFAULT_TEMPERATURE = 2.5
DEFAULT_MAX_LENGTH = 10


@dataclass(frozen=True)
class CasConfig:
    n_candidates: int = DEFAULT_N
    beta: float = DEFAULT_BETA
    temperature: float = DEFAULT_TEMPERATURE
    max_length: int = DEFAULT_MAX_LENGTH
    seed: int = 0
    # "seed": condition candidates on the original seed concepts every
    # generation; "pool": condition on the evolving active pool instead.
    conditioning: str = "seed"

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ArgumentError("n_candidates must be >= 1")
        if not 0.0 <= self.beta <= 1.0:
            raise ArgumentError("beta must be in [0, 1]")


@dataclass(frozen=True)
class RankedCandidate:
    sequence: ConceptSequence
    nll_coherence: float
    nll_context: float
    rank_coherence: int
    rank_context: int
    score: float


@dataclass(frozen=True)
class InspirationProposal:
    new_concept: int | None
    provenance: str  # "cas" | "random" | "llm" | "llm_free" | "human"
    candidate_trace: list[RankedCandidate] = field(default_factory=list)
    # Free-mode LLM suggestions may fall outside the vocabulary; the raw
    # label is carried so the agent can extend its label space.
    new_label: str | None = None


def rank_by_nll(
    candidates: Sequence[ConceptSequence], model: SequenceScorer
) -> list[int]:
    """1-based ranks by ascending NLL; ties by lexicographic token order.

    Returns ranks aligned with the candidate order; rank 1 is the most likely
    sequence. Duplicate sequences occupy adjacent ranks deterministically.
    """
    if not candidates:
        raise ArgumentError("candidates must be non-empty")
    nlls = [model.nll(c) for c in candidates]
    order = sorted(range(len(candidates)), key=lambda i: (nlls[i], candidates[i].tokens, i))
    ranks = [0] * len(candidates)
    for rank, idx in enumerate(order, start=1):
        ranks[idx] = rank
    return ranks


def cas_score(rank_coherence: int, rank_context: int, n: int, beta: float) -> float:
    """Rank-combination score; higher = coherent but culturally atypical."""
    for r in (rank_coherence, rank_context):
        if not 1 <= r <= n:
            raise ArgumentError(f"rank {r} outside [1, {n}]")
    return (1.0 - beta) * (n - rank_coherence) - beta * (n - rank_context)


def rank_candidates(
    candidates: Sequence[ConceptSequence],
    coherence: SequenceScorer,
    context: SequenceScorer,
    beta: float,
) -> list[RankedCandidate]:
    """Score all candidates under both models; result sorted descending by score."""
    n = len(candidates)
    nll_coh = [coherence.nll(c) for c in candidates]
    nll_ctx = [context.nll(c) for c in candidates]
    r_coh = rank_by_nll(candidates, coherence)
    r_ctx = rank_by_nll(candidates, context)
    ranked = [
        RankedCandidate(
            sequence=candidates[i],
            nll_coherence=nll_coh[i],
            nll_context=nll_ctx[i],
            rank_coherence=r_coh[i],
            rank_context=r_ctx[i],
            score=cas_score(r_coh[i], r_ctx[i], n, beta),
        )
        for i in range(n)
    ]
    ranked.sort(key=lambda c: (-c.score, c.sequence.tokens))
    return ranked


def cas_sample(
    seed_concepts: ConceptSequence,
    coherence: SequenceScorer,
    context: SequenceScorer,
    cfg: CasConfig,
    pool: set[int],
    expired: set[int],
) -> InspirationProposal:
    """Propose the first eligible concept from the best-scored candidate.

    Candidates that contain no eligible concept fall through to the next by
    score; exhausting all of them raises SamplerExhaustedError.
    """
    if hasattr(coherence, "sample"):
        # Bridge-backed scorers sample remotely with the same contract.
        candidates = coherence.sample(
            seed_concepts, cfg.n_candidates, cfg.temperature, cfg.max_length, cfg.seed
        )
    else:
        candidates = sample_continuations(
            coherence,
            seed_concepts,
            count=cfg.n_candidates,
            temperature=cfg.temperature,
            max_length=cfg.max_length,
            seed=cfg.seed,
        )
    ranked = rank_candidates(candidates, coherence, context, cfg.beta)
    blocked = pool | expired
    prefix = len(seed_concepts.tokens)
    for cand in ranked:
        for tok in cand.sequence.tokens[prefix:]:
            if tok not in blocked:
                return InspirationProposal(
                    new_concept=tok, provenance="cas", candidate_trace=ranked
                )
    raise SamplerExhaustedError(
        "no candidate contained a concept outside the pool and expired sets"
    )


def random_sample(
    vocabulary: Vocabulary, pool: set[int], expired: set[int], seed: int
) -> InspirationProposal:
    """Uniform draw over vocabulary concepts not pooled or expired."""
    eligible = [c.id for c in vocabulary.concepts if c.id not in pool and c.id not in expired]
    if not eligible:
        raise SamplerExhaustedError("no eligible concept remains in the vocabulary")
    rng = np.random.default_rng(seed)
    choice = int(eligible[rng.integers(len(eligible))])
    return InspirationProposal(new_concept=choice, provenance="random")


class InspirationClient(Protocol):
    """Bridge-side client for LLM inspiration (POST /v1/inspire)."""

    def inspire(self, payload: dict) -> dict: ...


@dataclass
class InspirationContext:
    """Session state rendered into the inspiration user prompt."""

    generation: int
    pool_labels: list[str]
    original_labels: list[str]
    expired_labels: list[str]
    last_artwork_name: str | None = None
    last_concepts_used: list[str] | None = None
    previous_novelty: dict | None = None
    novelty_trend: str | None = None


def llm_sample(
    ctx: InspirationContext,
    vocabulary: Vocabulary,
    pool: set[int],
    expired: set[int],
    client: InspirationClient,
    mode: str = "constrained",
    max_retries: int = 2,
) -> InspirationProposal:
    """Ask the LLM bridge for one new concept.

    Constrained mode rejects out-of-vocabulary, pooled, or expired suggestions
    and re-asks up to max_retries times; free mode admits any normalized token.
    """
    if mode not in ("constrained", "free"):
        raise ArgumentError(f"unknown inspiration mode: {mode!r}")
    vocab_block = (
        CONSTRAINED_VOCABULARY_BLOCK.format(vocabulary_list=", ".join(vocabulary.labels()))
        if mode == "constrained"
        else FREE_VOCABULARY_BLOCK
    )
    user_prompt = render_inspiration_user_prompt(
        generation=ctx.generation,
        pool=ctx.pool_labels,
        original=ctx.original_labels,
        expired=ctx.expired_labels,
        last_artwork_name=ctx.last_artwork_name,
        last_concepts_used=ctx.last_concepts_used,
        previous_novelty=ctx.previous_novelty,
        novelty_trend=ctx.novelty_trend,
    )
    payload = {
        "system_prompt": INSPIRATION_SYSTEM_PROMPT + "\n" + vocab_block,
        "user_prompt": user_prompt,
        "mode": mode,
    }
    pooled_labels = set(ctx.pool_labels) | set(ctx.expired_labels)
    last_error = "no suggestions returned"
    for _ in range(max_retries + 1):
        response = client.inspire(payload)
        suggestions = response.get("suggested_concepts") or []
        for raw in suggestions:
            label = normalize_token(str(raw))
            if not label or label in pooled_labels:
                last_error = f"suggestion {raw!r} is pooled or expired"
                continue
            if mode == "constrained":
                if label not in vocabulary:
                    last_error = f"suggestion {raw!r} not in vocabulary"
                    continue
                cid = vocabulary.id_of(label)
                if cid in pool or cid in expired:
                    last_error = f"suggestion {raw!r} is pooled or expired"
                    continue
                return InspirationProposal(new_concept=cid, provenance="llm", new_label=label)
            cid = vocabulary.id_of(label) if label in vocabulary else None
            return InspirationProposal(new_concept=cid, provenance="llm_free", new_label=label)
    raise InspirationFailureError(f"no eligible suggestion after retries: {last_error}")


def human_suggestion_bundle(
    seed_concepts: ConceptSequence,
    coherence: SequenceScorer,
    context: SequenceScorer,
    cfg: CasConfig,
    pool: set[int],
    expired: set[int],
    vocabulary: Vocabulary,
    llm_ctx: InspirationContext | None = None,
    llm_client: InspirationClient | None = None,
) -> list[InspirationProposal]:
    """One cultural-alien proposal plus (when a bridge is configured) one LLM
    proposal, for display in the human-sampler UI. Failed members are omitted."""
    bundle: list[InspirationProposal] = []
    try:
        bundle.append(cas_sample(seed_concepts, coherence, context, cfg, pool, expired))
    except SamplerExhaustedError:
        pass
    if llm_client is not None and llm_ctx is not None:
        try:
            bundle.append(
                llm_sample(llm_ctx, vocabulary, pool, expired, llm_client, mode="constrained")
            )
        except InspirationFailureError:
            pass
    return bundle
