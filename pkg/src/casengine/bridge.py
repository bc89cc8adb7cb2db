"""Bridge wire protocol: HTTP client used by the engine and a stub adapter app.

Endpoints (versioned, exact field names):
  POST /v1/score   {"sequences": [[label,...],...]}        -> {"nll": [...]}
  POST /v1/sample  {"context": [...], "n", "temperature",
                    "max_length", "seed"}                  -> {"sequences": [...]}
  POST /v1/embed   {"kind": "text"|"image", "items": [...]} -> {"vectors": [...], "dimension": int}
  POST /v1/compose {compositor session state}              -> {"thought","name","concepts_used","prompt"}
  POST /v1/inspire {inspiration session state}             -> {"analysis","reasoning","suggested_concepts"}
  POST /v1/image   {"prompt": str}                         -> {"image_b64": str}
  GET  /v1/handshake                                       -> {"dimension": int, "vocab_hash": str}

The stub adapter exposes the in-process reference scorer and deterministic
embedders over this protocol, so engine behavior is identical in-process and
over the wire.
"""

from __future__ import annotations

import base64
from typing import Sequence

import httpx
import numpy as np

from .datasets import ConceptSequence
from .embed import (
    DeterministicImageEmbedder,
    DeterministicTextEmbedder,
    EmbeddingVector,
)
from .errors import BridgeError
from .scorer import SequenceScorer, sample_continuations
from .vocab import Vocabulary


class BridgeClient:
    """Typed client for the bridge protocol; one retry on transport errors."""

    def __init__(
        self,
        base_url: str = "",
        client: httpx.Client | None = None,
        timeout: float = 30.0,
    ) -> None:
        self._client = client or httpx.Client(base_url=base_url, timeout=timeout)

    def _post(self, path: str, payload: dict, required: Sequence[str]) -> dict:
        last_exc: Exception | None = None
        for _ in range(2):
            try:
                response = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if response.status_code != 200:
                raise BridgeError(f"{path} returned {response.status_code}: {response.text[:200]}")
            body = response.json()
            missing = [k for k in required if k not in body]
            if missing:
                raise BridgeError(f"{path} response missing fields: {missing}")
            return body
        raise BridgeError(f"{path} unreachable: {last_exc}")

    def handshake(self) -> dict:
        try:
            response = self._client.get("/v1/handshake")
        except httpx.HTTPError as exc:
            raise BridgeError(f"handshake failed: {exc}") from exc
        if response.status_code != 200:
            raise BridgeError(f"handshake returned {response.status_code}")
        return response.json()

    def score(self, sequences: list[list[str]]) -> list[float]:
        body = self._post("/v1/score", {"sequences": sequences}, ["nll"])
        return [float(x) for x in body["nll"]]

    def sample(
        self, context: list[str], n: int, temperature: float, max_length: int, seed: int
    ) -> list[list[str]]:
        body = self._post(
            "/v1/sample",
            {
                "context": context,
                "n": n,
                "temperature": temperature,
                "max_length": max_length,
                "seed": seed,
            },
            ["sequences"],
        )
        return body["sequences"]

    def embed(self, kind: str, items: list[str]) -> tuple[list[list[float]], int]:
        body = self._post("/v1/embed", {"kind": kind, "items": items}, ["vectors", "dimension"])
        return body["vectors"], int(body["dimension"])

    def compose(self, payload: dict) -> dict:
        return self._post("/v1/compose", payload, ["thought", "name", "concepts_used", "prompt"])

    def inspire(self, payload: dict) -> dict:
        return self._post(
            "/v1/inspire", payload, ["analysis", "reasoning", "suggested_concepts"]
        )

    def image(self, prompt: str) -> bytes:
        body = self._post("/v1/image", {"prompt": prompt}, ["image_b64"])
        try:
            return base64.b64decode(body["image_b64"])
        except Exception as exc:
            raise BridgeError(f"invalid image_b64 payload: {exc}") from exc


class BridgeScorer:
    """SequenceScorer backed by /v1/score and /v1/sample."""

    def __init__(self, client: BridgeClient, vocabulary: Vocabulary) -> None:
        self.client = client
        self.vocabulary = vocabulary
        info = client.handshake()
        remote_hash = info.get("vocab_hash")
        if remote_hash and remote_hash != vocabulary.content_hash():
            raise BridgeError("bridge scorer vocabulary hash does not match the engine")

    def _labels(self, tokens: Sequence[int]) -> list[str]:
        return [self.vocabulary.label_of(t) for t in tokens]

    def nll(self, sequence: ConceptSequence) -> float:
        return self.client.score([self._labels(sequence.tokens)])[0]

    def nll_batch(self, sequences: Sequence[ConceptSequence]) -> list[float]:
        return self.client.score([self._labels(s.tokens) for s in sequences])

    def sample(
        self, context: ConceptSequence, n: int, temperature: float, max_length: int, seed: int
    ) -> list[ConceptSequence]:
        raw = self.client.sample(self._labels(context.tokens), n, temperature, max_length, seed)
        return [
            ConceptSequence(tuple(self.vocabulary.id_of(lbl) for lbl in labels))
            for labels in raw
        ]

    def next_distribution(self, context: Sequence[int]) -> np.ndarray:
        raise NotImplementedError("bridge scorers expose sampling, not raw distributions")


def build_stub_bridge_app(
    vocabulary: Vocabulary,
    scorer: SequenceScorer,
    text_dim: int = 64,
    image_dim: int = 64,
    fixed_inspiration: list[str] | None = None,
):
    """FastAPI app exposing the reference components over the wire protocol.

    Used for bridge-equivalence testing and as the contract reference for
    real-model adapters.
    """
    from fastapi import FastAPI

    app = FastAPI(title="stub bridge adapter")
    text_embedder = DeterministicTextEmbedder(dim=text_dim)
    image_embedder = DeterministicImageEmbedder(dim=image_dim)

    @app.get("/v1/handshake")
    def handshake() -> dict:
        return {"dimension": text_dim, "vocab_hash": vocabulary.content_hash()}

    @app.post("/v1/score")
    def score(payload: dict) -> dict:
        nlls = []
        for labels in payload["sequences"]:
            seq = ConceptSequence(tuple(vocabulary.id_of(lbl) for lbl in labels))
            nlls.append(scorer.nll(seq))
        return {"nll": nlls}

    @app.post("/v1/sample")
    def sample(payload: dict) -> dict:
        context = ConceptSequence(tuple(vocabulary.id_of(lbl) for lbl in payload["context"]))
        sequences = sample_continuations(
            scorer,
            context,
            int(payload["n"]),
            float(payload["temperature"]),
            int(payload["max_length"]),
            int(payload["seed"]),
        )
        return {
            "sequences": [[vocabulary.label_of(t) for t in s.tokens] for s in sequences]
        }

    @app.post("/v1/embed")
    def embed(payload: dict) -> dict:
        kind = payload["kind"]
        vectors: list[list[float]] = []
        for item in payload["items"]:
            if kind == "text":
                vec = text_embedder.embed_text(item)
            elif kind == "image":
                vec = image_embedder.embed_image(base64.b64decode(item))
            else:
                return {"vectors": [], "dimension": 0}
            vectors.append([float(x) for x in vec.values])
        dim = text_dim if kind == "text" else image_dim
        return {"vectors": vectors, "dimension": dim}

    @app.post("/v1/compose")
    def compose(payload: dict) -> dict:
        from .agent import StubCompositor

        return StubCompositor().compose(payload)

    @app.post("/v1/inspire")
    def inspire(payload: dict) -> dict:
        suggestions = fixed_inspiration or []
        if not suggestions:
            # deterministic fallback: first label outside the supplied pool
            pool = set()
            for line in payload.get("user_prompt", "").splitlines():
                if line.startswith("["):
                    pool = {p.strip(" '") for p in line.strip("[]").split(",")}
                    break
            suggestions = [lbl for lbl in vocabulary.labels() if lbl not in pool][:1]
        return {
            "analysis": "stub analysis",
            "reasoning": "stub reasoning",
            "suggested_concepts": suggestions,
        }

    @app.post("/v1/image")
    def image(payload: dict) -> dict:
        import hashlib

        digest = hashlib.blake2b(payload["prompt"].encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        return {"image_b64": base64.b64encode(rng.bytes(1024)).decode("ascii")}

    return app


class BridgeTextEmbedder:
    def __init__(self, client: BridgeClient) -> None:
        self.client = client

    def embed_text(self, text: str) -> EmbeddingVector:
        vectors, _ = self.client.embed("text", [text])
        return EmbeddingVector(np.asarray(vectors[0]), kind="text", source="bridge")


class BridgeImageEmbedder:
    def __init__(self, client: BridgeClient) -> None:
        self.client = client

    def embed_image(self, data: bytes) -> EmbeddingVector:
        vectors, _ = self.client.embed("image", [base64.b64encode(data).decode("ascii")])
        return EmbeddingVector(np.asarray(vectors[0]), kind="image", source="bridge")


class BridgeImageGenerator:
    def __init__(self, client: BridgeClient) -> None:
        self.client = client

    def generate(self, prompt: str) -> bytes:
        return self.client.image(prompt)
