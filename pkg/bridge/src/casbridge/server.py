"""Bridge adapter server: the wire protocol backed by configured components.

Capabilities without a configured model fall back to the engine's
deterministic offline components, so the endpoint schemas and the handshake
are identical whether or not real models are loaded. A scorer vocabulary-hash
mismatch refuses /v1/score and /v1/sample with a typed 409 error.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from casengine.agent import StubCompositor, StubImageGenerator
from casengine.datasets import ConceptSequence
from casengine.embed import DeterministicImageEmbedder, DeterministicTextEmbedder
from casengine.errors import BridgeError, DataError, EmbeddingError
from casengine.scorer import sample_continuations
from casengine.vocab import Vocabulary

from .config import AdapterConfig


class OfflineScorer:
    """Uniform scorer used when no model is configured; schema-complete."""

    def __init__(self, vocabulary: Vocabulary) -> None:
        self.vocabulary = vocabulary

    def next_distribution(self, context) -> np.ndarray:
        return np.full(self.vocabulary.size, 1.0 / self.vocabulary.size)

    def nll(self, sequence: ConceptSequence) -> float:
        return len(sequence.tokens) * float(np.log(self.vocabulary.size))


def _build_components(config: AdapterConfig, vocabulary: Vocabulary, scorer=None) -> dict:
    """Instantiate one component per capability, model-backed where configured."""
    components: dict = {}
    if scorer is not None:
        components["scorer"] = scorer
    elif config.scorer_model:
        from .adapters import NeuralSequenceScorer

        components["scorer"] = NeuralSequenceScorer(
            config.scorer_model, vocabulary, config.device
        )
    else:
        components["scorer"] = OfflineScorer(vocabulary)

    if config.text_model:
        from .adapters import SentenceTextEmbedder

        embedder = SentenceTextEmbedder(config.text_model, config.device)
        components["text_embedder"], components["text_dim"] = embedder, embedder.dim
    else:
        components["text_embedder"] = DeterministicTextEmbedder(dim=config.embedding_dim)
        components["text_dim"] = config.embedding_dim

    if config.image_model:
        from .adapters import ClipImageEmbedder

        embedder = ClipImageEmbedder(config.image_model, config.device)
        components["image_embedder"], components["image_dim"] = embedder, embedder.dim
    else:
        components["image_embedder"] = DeterministicImageEmbedder(dim=config.embedding_dim)
        components["image_dim"] = config.embedding_dim

    if config.llm_base_url:
        from .adapters import ChatLLM

        components["llm"] = ChatLLM(
            config.llm_base_url, config.llm_api_key, config.llm_model or "default"
        )
    else:
        components["llm"] = None

    if config.image_gen_url:
        from .adapters import RemoteImageGenerator

        components["image_generator"] = RemoteImageGenerator(config.image_gen_url)
    else:
        components["image_generator"] = StubImageGenerator(size=1024)
    return components


def create_adapter_app(config: AdapterConfig, vocabulary: Vocabulary | None = None, scorer=None):
    """FastAPI app implementing the bridge wire protocol.

    `vocabulary` and `scorer` may be passed directly (tests, embedding); by
    default they are loaded from the config.
    """
    from fastapi import FastAPI, HTTPException

    if vocabulary is None:
        vocabulary = Vocabulary.load(config.vocabulary_path)
    components = _build_components(config, vocabulary, scorer=scorer)
    app = FastAPI(title="casengine bridge adapter")
    app.state.config = config
    app.state.vocabulary = vocabulary

    vocab_hash = vocabulary.content_hash()

    def _require_vocab(payload_hash: str | None) -> None:
        if payload_hash and payload_hash != vocab_hash:
            raise HTTPException(
                status_code=409,
                detail="scorer vocabulary hash does not match the engine vocabulary",
            )

    def _to_sequence(labels: list[str]) -> ConceptSequence:
        try:
            return ConceptSequence(tuple(vocabulary.id_of(lbl) for lbl in labels))
        except DataError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/v1/handshake")
    def handshake() -> dict:
        return {
            "dimension": components["text_dim"],
            "vocab_hash": vocab_hash,
            "capabilities": config.capabilities(),
        }

    @app.post("/v1/score")
    def score(payload: dict) -> dict:
        _require_vocab(payload.get("vocab_hash"))
        nlls = [
            float(components["scorer"].nll(_to_sequence(labels)))
            for labels in payload["sequences"]
        ]
        return {"nll": nlls}

    @app.post("/v1/sample")
    def sample(payload: dict) -> dict:
        _require_vocab(payload.get("vocab_hash"))
        context = _to_sequence(payload["context"])
        sequences = sample_continuations(
            components["scorer"],
            context,
            int(payload["n"]),
            float(payload["temperature"]),
            int(payload["max_length"]),
            int(payload["seed"]),
        )
        return {"sequences": [[vocabulary.label_of(t) for t in s.tokens] for s in sequences]}

    @app.post("/v1/embed")
    def embed(payload: dict) -> dict:
        kind = payload.get("kind")
        vectors: list[list[float]] = []
        try:
            for item in payload["items"]:
                if kind == "text":
                    vec = components["text_embedder"].embed_text(item)
                elif kind == "image":
                    vec = components["image_embedder"].embed_image(base64.b64decode(item))
                else:
                    raise HTTPException(status_code=422, detail=f"unknown kind: {kind!r}")
                vectors.append([float(x) for x in vec.values])
        except EmbeddingError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        dim = components["text_dim"] if kind == "text" else components["image_dim"]
        return {"vectors": vectors, "dimension": dim}

    @app.post("/v1/compose")
    def compose(payload: dict) -> dict:
        llm = components["llm"]
        if llm is None:
            return StubCompositor().compose(payload)
        from casengine.prompts import COMPOSITOR_SYSTEM_PROMPT

        try:
            out = llm.complete_json(
                COMPOSITOR_SYSTEM_PROMPT, payload.get("user_prompt", json.dumps(payload))
            )
        except BridgeError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        missing = [k for k in ("thought", "name", "concepts_used", "prompt") if k not in out]
        if missing:
            raise HTTPException(status_code=502, detail=f"model response missing {missing}")
        return out

    @app.post("/v1/inspire")
    def inspire(payload: dict) -> dict:
        llm = components["llm"]
        if llm is None:
            # Deterministic fallback: first labels not named in the prompt body.
            body = payload.get("user_prompt", "")
            suggestions = [lbl for lbl in vocabulary.labels() if lbl not in body][:1]
            return {
                "analysis": "offline fallback",
                "reasoning": "first vocabulary concept absent from the session context",
                "suggested_concepts": suggestions,
            }
        try:
            out = llm.complete_json(
                payload.get("system_prompt", ""), payload.get("user_prompt", "")
            )
        except BridgeError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        missing = [k for k in ("analysis", "reasoning", "suggested_concepts") if k not in out]
        if missing:
            raise HTTPException(status_code=502, detail=f"model response missing {missing}")
        return out

    @app.post("/v1/image")
    def image(payload: dict) -> dict:
        try:
            data = components["image_generator"].generate(payload["prompt"])
        except BridgeError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        return {"image_b64": base64.b64encode(data).decode("ascii")}

    return app


def cli_entry() -> None:
    import click

    @click.command()
    @click.option("--vocab", "vocabulary_path", required=True, type=click.Path(exists=True))
    @click.option("--host", default="127.0.0.1")
    @click.option("--port", default=8100, type=int)
    def serve(vocabulary_path: str, host: str, port: int) -> None:
        """Serve the bridge adapters; model selection comes from CASBRIDGE_* env."""
        import uvicorn

        config = AdapterConfig.from_env(vocabulary_path)
        uvicorn.run(create_adapter_app(config), host=host, port=port)

    serve()
