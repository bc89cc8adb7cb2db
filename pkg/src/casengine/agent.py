"""Open-ended art-agent loop: inspiration, composition, image generation,
novelty scoring, and concept-pool regulation.

Each generation appends one record to an append-only JSONL run log before the
next generation begins; embeddings are cached content-addressed so a logged
run can be replayed bit-for-bit offline.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .datasets import ConceptSequence
from .embed import EmbeddingCache, EmbeddingVector, cosine
from .errors import CompositionError, DataError, EngineError
from .prompts import render_compositor_user_prompt
from .sampler import (
    CasConfig,
    InspirationContext,
    InspirationProposal,
    cas_sample,
    llm_sample,
    random_sample,
)
from .scorer import SequenceScorer
from .vocab import Vocabulary


@dataclass
class ConceptPool:
    """Active/expired concept sets with per-concept failure bookkeeping."""

    active: dict[int, None]  # insertion-ordered set
    original: set[int]
    expired: set[int] = field(default_factory=set)
    failure_counters: dict[int, int] = field(default_factory=dict)
    best_novelty: dict[int, float | None] = field(default_factory=dict)

    @classmethod
    def from_seed(cls, seed_concepts: Sequence[int]) -> "ConceptPool":
        pool = cls(active={}, original=set(seed_concepts))
        for c in seed_concepts:
            pool.add(c)
        return pool

    def add(self, concept: int) -> None:
        if concept in self.expired:
            raise DataError(f"concept {concept} is expired and cannot re-enter the pool")
        if concept not in self.active:
            self.active[concept] = None
            self.failure_counters[concept] = 0
            self.best_novelty[concept] = None

    def active_ids(self) -> list[int]:
        return list(self.active.keys())


@dataclass
class GenerationRecord:
    generation: int
    pool_before: list[str]
    new_concepts: list[str]
    concepts_used: list[str]
    prompt: str
    name: str
    thought: str
    image_ref: str
    novelty_text: float
    novelty_image: float
    novelty_combined: float
    removed_concepts: list[str]
    provenance: str
    status: str = "ok"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "GenerationRecord":
        return cls(**json.loads(line))


@dataclass
class RunConfig:
    seed_labels: list[str]
    generations: int = 10
    patience: int = 5
    sampler: str = "cas"  # "cas" | "random" | "llm" | "llm_free" | "human"
    cas: CasConfig = field(default_factory=CasConfig)
    preserve_original: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise DataError("generations must be >= 1")
        if self.patience < 1:
            raise DataError("patience must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if isinstance(d.get("cas"), dict):
            d["cas"] = CasConfig(**d["cas"])
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


class Compositor(Protocol):
    def compose(self, payload: dict) -> dict: ...


class ImageGenerator(Protocol):
    def generate(self, prompt: str) -> bytes: ...


class StubCompositor:
    """Offline deterministic compositor: seed concepts plus the newest concept."""

    def compose(self, payload: dict) -> dict:
        original = payload["original"]
        newly_added = payload.get("newly_added") or []
        used = list(original)
        for lbl in newly_added:
            if lbl not in used:
                used.append(lbl)
        prompt = "A composition combining: " + ", ".join(used)
        return {
            "thought": "Deterministic offline composition over the seed concepts "
            "and the newest addition.",
            "name": f"Composition {payload['generation']}",
            "concepts_used": used,
            "prompt": prompt,
        }


class BridgeCompositor:
    """Compositor backed by an LLM bridge client (POST /v1/compose)."""

    def __init__(self, client) -> None:
        self.client = client

    def compose(self, payload: dict) -> dict:
        return self.client.compose(payload)


class StubImageGenerator:
    """Seeded pseudo-random byte block keyed by the prompt hash."""

    def __init__(self, size: int = 1024) -> None:
        self.size = size

    def generate(self, prompt: str) -> bytes:
        digest = hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        return rng.bytes(self.size)


@dataclass
class Backends:
    compositor: Compositor
    image: ImageGenerator
    text_embedder: object
    image_embedder: object
    # Scorers for the cultural-alien inspiration modes.
    coherence: SequenceScorer | None = None
    context: SequenceScorer | None = None
    # Bridge client with .inspire(payload) for LLM inspiration modes.
    inspiration_client: object | None = None


def compute_novelty(
    prompt_embedding: EmbeddingVector,
    image_embedding: EmbeddingVector,
    text_history: Sequence[EmbeddingVector],
    image_history: Sequence[EmbeddingVector],
) -> dict:
    """1 minus max cosine similarity against each modality's history.

    An empty history yields 0 for that component (first-generation rule).
    """
    if text_history:
        text = 1.0 - max(cosine(prompt_embedding, h) for h in text_history)
    else:
        text = 0.0
    if image_history:
        image = 1.0 - max(cosine(image_embedding, h) for h in image_history)
    else:
        image = 0.0
    return {"text": text, "image": image, "combined": (text + image) / 2.0}


def filter_pool(
    pool: ConceptPool,
    concepts_used: Sequence[int],
    novelty_combined: float,
    patience: int,
    preserve_original: bool = False,
) -> list[int]:
    """Update failure counters and expire stale concepts; returns removed ids.

    A concept used this generation resets its counter when the generation's
    novelty beats its personal best; otherwise the counter increments, and at
    `patience` consecutive failures the concept expires (originals are immune
    when preserve_original is set). Unused concepts are untouched.
    """
    removed: list[int] = []
    for c in concepts_used:
        if c not in pool.active:
            continue
        best = pool.best_novelty.get(c)
        if best is None or novelty_combined > best:
            pool.best_novelty[c] = novelty_combined
            pool.failure_counters[c] = 0
        else:
            pool.failure_counters[c] += 1
        if pool.failure_counters[c] >= patience:
            if preserve_original and c in pool.original:
                continue
            removed.append(c)
    for c in removed:
        del pool.active[c]
        pool.expired.add(c)
    return removed


def _generation_seed(root_seed: int, generation: int) -> int:
    return int(np.random.SeedSequence(entropy=[root_seed & 0xFFFFFFFF, generation]).generate_state(1)[0])


class LabelSpace:
    """Vocabulary plus dynamically admitted labels (free LLM mode)."""

    def __init__(self, vocabulary: Vocabulary) -> None:
        self.vocabulary = vocabulary
        self._extra: dict[str, int] = {}
        self._extra_labels: dict[int, str] = {}

    def id_of(self, label: str) -> int:
        if label in self.vocabulary:
            return self.vocabulary.id_of(label)
        if label in self._extra:
            return self._extra[label]
        raise DataError(f"unknown label: {label!r}")

    def admit(self, label: str) -> int:
        if label in self.vocabulary:
            return self.vocabulary.id_of(label)
        if label not in self._extra:
            new_id = self.vocabulary.size + len(self._extra)
            self._extra[label] = new_id
            self._extra_labels[new_id] = label
        return self._extra[label]

    def label_of(self, concept_id: int) -> str:
        if concept_id < self.vocabulary.size:
            return self.vocabulary.label_of(concept_id)
        return self._extra_labels[concept_id]


class AgentSession:
    """Stepwise agent loop; one logical writer per run log."""

    def __init__(
        self,
        config: RunConfig,
        backends: Backends,
        vocabulary: Vocabulary,
        log_path: str | Path,
        cache_dir: str | Path | None = None,
        image_dir: str | Path | None = None,
    ) -> None:
        self.config = config
        self.backends = backends
        self.labels = LabelSpace(vocabulary)
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        cache_base = Path(cache_dir) if cache_dir else self.log_path.parent
        self.text_cache = EmbeddingCache(cache_base / "text_embeddings.jsonl", "text")
        self.image_cache = EmbeddingCache(cache_base / "image_embeddings.jsonl", "image")
        self.image_dir = Path(image_dir) if image_dir else None
        seed_ids = [vocabulary.id_of(lbl) for lbl in config.seed_labels]
        if not seed_ids:
            raise DataError("seed concepts must be non-empty")
        self.seed_ids = seed_ids
        self.pool = ConceptPool.from_seed(seed_ids)
        self.records: list[GenerationRecord] = []
        self.text_history: list[EmbeddingVector] = []
        self.image_history: list[EmbeddingVector] = []
        self.generation = 0

    # -- inspiration ------------------------------------------------------

    def _conditioning_sequence(self) -> ConceptSequence:
        if self.config.cas.conditioning == "pool":
            tokens = tuple(t for t in self.pool.active_ids() if t < self.labels.vocabulary.size)
        else:
            tokens = tuple(self.seed_ids)
        return ConceptSequence(tokens)

    def _inspiration_context(self) -> InspirationContext:
        last = self.records[-1] if self.records else None
        prev_novelty = None
        trend = None
        if last is not None and last.status == "ok":
            prev_novelty = {
                "text": last.novelty_text,
                "image": last.novelty_image,
                "combined": last.novelty_combined,
            }
            scored = [r for r in self.records if r.status == "ok"]
            if len(scored) >= 2:
                trend = (
                    "increasing"
                    if scored[-1].novelty_combined > scored[-2].novelty_combined
                    else "decreasing (need more novelty)"
                )
        return InspirationContext(
            generation=self.generation + 1,
            pool_labels=[self.labels.label_of(c) for c in self.pool.active_ids()],
            original_labels=[self.labels.label_of(c) for c in sorted(self.pool.original)],
            expired_labels=[self.labels.label_of(c) for c in sorted(self.pool.expired)],
            last_artwork_name=last.name if last else None,
            last_concepts_used=list(last.concepts_used) if last else None,
            previous_novelty=prev_novelty,
            novelty_trend=trend,
        )

    def propose(self) -> InspirationProposal | None:
        """Run the configured inspiration strategy; None when exhausted/failed."""
        cfg = self.config
        gen_seed = _generation_seed(cfg.seed, self.generation + 1)
        pool_set = set(self.pool.active_ids())
        try:
            if cfg.sampler == "cas":
                if self.backends.coherence is None or self.backends.context is None:
                    raise DataError("cas sampler requires coherence and context scorers")
                cas_cfg = CasConfig(
                    n_candidates=cfg.cas.n_candidates,
                    beta=cfg.cas.beta,
                    temperature=cfg.cas.temperature,
                    max_length=cfg.cas.max_length,
                    seed=gen_seed,
                    conditioning=cfg.cas.conditioning,
                )
                return cas_sample(
                    self._conditioning_sequence(),
                    self.backends.coherence,
                    self.backends.context,
                    cas_cfg,
                    pool_set,
                    self.pool.expired,
                )
            if cfg.sampler == "random":
                return random_sample(
                    self.labels.vocabulary, pool_set, self.pool.expired, gen_seed
                )
            if cfg.sampler in ("llm", "llm_free"):
                if self.backends.inspiration_client is None:
                    raise DataError("llm sampler requires an inspiration client")
                mode = "constrained" if cfg.sampler == "llm" else "free"
                return llm_sample(
                    self._inspiration_context(),
                    self.labels.vocabulary,
                    pool_set,
                    self.pool.expired,
                    self.backends.inspiration_client,
                    mode=mode,
                )
            if cfg.sampler == "human":
                return None  # choices arrive through the service
            raise DataError(f"unknown sampler: {cfg.sampler!r}")
        except EngineError:
            # Degraded mode: the generation proceeds without a new concept.
            return None

    # -- composition ------------------------------------------------------

    def _compose(self, newly_added: list[str]) -> dict:
        last = self.records[-1] if self.records else None
        prev_used = list(last.concepts_used) if last and last.status == "ok" else None
        prev_novelty = (
            {
                "text": last.novelty_text,
                "image": last.novelty_image,
                "combined": last.novelty_combined,
            }
            if last and last.status == "ok"
            else None
        )
        pool_labels = [self.labels.label_of(c) for c in self.pool.active_ids()]
        original = [self.labels.label_of(c) for c in sorted(self.pool.original)]
        expired = [self.labels.label_of(c) for c in sorted(self.pool.expired)]
        payload = {
            "generation": self.generation + 1,
            "pool": pool_labels,
            "original": original,
            "expired": expired,
            "newly_added": newly_added,
            "previous_concepts_used": prev_used,
            "previous_novelty": prev_novelty,
            "preserve_original": self.config.preserve_original,
            "user_prompt": render_compositor_user_prompt(
                generation=self.generation + 1,
                pool=pool_labels,
                original=original,
                expired=expired,
                newly_added=newly_added,
                previous_concepts_used=prev_used,
                previous_novelty=prev_novelty,
                preserve_original=self.config.preserve_original,
            ),
        }
        response = self.backends.compositor.compose(payload)
        problem = self._validate_composition(response, pool_labels, expired, original)
        if problem is not None:
            payload["repair"] = problem
            response = self.backends.compositor.compose(payload)
            problem = self._validate_composition(response, pool_labels, expired, original)
            if problem is not None:
                raise CompositionError(problem)
        return response

    def _validate_composition(
        self, response: dict, pool: list[str], expired: list[str], original: list[str]
    ) -> str | None:
        for key in ("thought", "name", "concepts_used", "prompt"):
            if key not in response:
                return f"missing response field: {key}"
        used = response["concepts_used"]
        if not isinstance(used, list) or not used:
            return "concepts_used must be a non-empty list"
        for lbl in used:
            if lbl in expired:
                return f"expired concept used: {lbl!r}"
            if lbl not in pool:
                return f"concept not in active pool: {lbl!r}"
        if self.config.preserve_original:
            missing = [lbl for lbl in original if lbl not in used]
            if missing:
                return f"original concepts omitted: {missing}"
        return None

    # -- stepping ---------------------------------------------------------

    def step(self, proposal: InspirationProposal | None = None) -> GenerationRecord:
        """Run one full generation; the record is persisted before returning."""
        if self.generation >= self.config.generations:
            raise DataError("run already completed its configured generations")
        t = self.generation + 1
        pool_before = [self.labels.label_of(c) for c in self.pool.active_ids()]

        if proposal is None:
            proposal = self.propose()
        new_labels: list[str] = []
        provenance = "none"
        if proposal is not None:
            provenance = proposal.provenance
            cid = proposal.new_concept
            if cid is None and proposal.new_label is not None:
                cid = self.labels.admit(proposal.new_label)
            if cid is not None:
                self.pool.add(cid)
                new_labels = [self.labels.label_of(cid)]

        try:
            composition = self._compose(new_labels)
            prompt = composition["prompt"]
            image_bytes = self.backends.image.generate(prompt)
            image_ref = hashlib.sha256(image_bytes).hexdigest()
            if self.image_dir is not None:
                self.image_dir.mkdir(parents=True, exist_ok=True)
                (self.image_dir / f"{image_ref}.bin").write_bytes(image_bytes)
            prompt_emb = self._embed_text(prompt)
            image_emb = self._embed_image(image_bytes, image_ref)
            novelty = compute_novelty(
                prompt_emb, image_emb, self.text_history, self.image_history
            )
            record = GenerationRecord(
                generation=t,
                pool_before=pool_before,
                new_concepts=new_labels,
                concepts_used=list(composition["concepts_used"]),
                prompt=prompt,
                name=composition["name"],
                thought=composition["thought"],
                image_ref=image_ref,
                novelty_text=novelty["text"],
                novelty_image=novelty["image"],
                novelty_combined=novelty["combined"],
                removed_concepts=[],
                provenance=provenance,
            )
            used_ids = [self.labels.id_of(lbl) for lbl in record.concepts_used]
            removed = filter_pool(
                self.pool,
                used_ids,
                novelty["combined"],
                self.config.patience,
                self.config.preserve_original,
            )
            record.removed_concepts = [self.labels.label_of(c) for c in removed]
            self.text_history.append(prompt_emb)
            self.image_history.append(image_emb)
        except EngineError as exc:
            record = GenerationRecord(
                generation=t,
                pool_before=pool_before,
                new_concepts=new_labels,
                concepts_used=[],
                prompt="",
                name="",
                thought=f"generation failed: {exc}",
                image_ref="",
                novelty_text=0.0,
                novelty_image=0.0,
                novelty_combined=0.0,
                removed_concepts=[],
                provenance=provenance,
                status="failed",
            )

        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(record.to_json() + "\n")
        self.records.append(record)
        self.generation = t
        return record

    def _embed_text(self, text: str) -> EmbeddingVector:
        key = EmbeddingCache.content_key("text", text.encode("utf-8"))
        cached = self.text_cache.get(key)
        if cached is None:
            self.text_cache.put(key, self.backends.text_embedder.embed_text(text).values)
            cached = self.text_cache.get(key)
        # Always wrap the cached values so replay reproduces scores bit-for-bit.
        return EmbeddingVector(cached, kind="text")

    def _embed_image(self, data: bytes, image_ref: str) -> EmbeddingVector:
        key = f"image:{image_ref}"
        cached = self.image_cache.get(key)
        if cached is None:
            self.image_cache.put(key, self.backends.image_embedder.embed_image(data).values)
            cached = self.image_cache.get(key)
        return EmbeddingVector(cached, kind="image")

    @classmethod
    def resume(
        cls,
        config: RunConfig,
        backends: Backends,
        vocabulary: Vocabulary,
        log_path: str | Path,
        cache_dir: str | Path | None = None,
    ) -> "AgentSession":
        """Rebuild pool, counters, and histories by replaying the run log."""
        session = cls(config, backends, vocabulary, log_path, cache_dir=cache_dir)
        if not session.log_path.exists():
            return session
        for line in session.log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = GenerationRecord.from_json(line)
            if record.new_concepts:
                for lbl in record.new_concepts:
                    session.pool.add(session.labels.admit(lbl))
            if record.status == "ok":
                used_ids = [session.labels.id_of(lbl) for lbl in record.concepts_used]
                filter_pool(
                    session.pool,
                    used_ids,
                    record.novelty_combined,
                    config.patience,
                    config.preserve_original,
                )
                text_key = EmbeddingCache.content_key("text", record.prompt.encode("utf-8"))
                tvec = session.text_cache.get(text_key)
                ivec = session.image_cache.get(f"image:{record.image_ref}")
                if tvec is None or ivec is None:
                    raise DataError(
                        f"embedding cache missing entries for generation {record.generation}"
                    )
                session.text_history.append(EmbeddingVector(tvec, kind="text"))
                session.image_history.append(EmbeddingVector(ivec, kind="image"))
            session.records.append(record)
            session.generation = record.generation
        return session


@dataclass
class RunLog:
    config: RunConfig
    records: list[GenerationRecord]

    @classmethod
    def load(cls, log_path: str | Path, config: RunConfig) -> "RunLog":
        records = [
            GenerationRecord.from_json(line)
            for line in Path(log_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(config=config, records=records)


def run(
    config: RunConfig,
    backends: Backends,
    vocabulary: Vocabulary,
    log_path: str | Path,
    cache_dir: str | Path | None = None,
    image_dir: str | Path | None = None,
) -> RunLog:
    """Execute the configured number of generations with crash-safe appends."""
    session = AgentSession(
        config, backends, vocabulary, log_path, cache_dir=cache_dir, image_dir=image_dir
    )
    for _ in range(config.generations):
        session.step()
    return RunLog(config=config, records=session.records)


def replay_novelty(
    log_path: str | Path, cache_dir: str | Path
) -> list[dict]:
    """Recompute novelty for every logged generation from cached embeddings.

    Returns one {text, image, combined} dict per successful generation; values
    must reproduce the logged scores bit-for-bit.
    """
    cache_base = Path(cache_dir)
    text_cache = EmbeddingCache(cache_base / "text_embeddings.jsonl", "text")
    image_cache = EmbeddingCache(cache_base / "image_embeddings.jsonl", "image")
    text_history: list[EmbeddingVector] = []
    image_history: list[EmbeddingVector] = []
    out: list[dict] = []
    for line in Path(log_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = GenerationRecord.from_json(line)
        if record.status != "ok":
            continue
        tvec = text_cache.get(EmbeddingCache.content_key("text", record.prompt.encode("utf-8")))
        ivec = image_cache.get(f"image:{record.image_ref}")
        if tvec is None or ivec is None:
            raise DataError(f"embedding cache missing generation {record.generation}")
        prompt_emb = EmbeddingVector(tvec, kind="text")
        image_emb = EmbeddingVector(ivec, kind="image")
        out.append(compute_novelty(prompt_emb, image_emb, text_history, image_history))
        text_history.append(prompt_emb)
        image_history.append(image_emb)
    return out
