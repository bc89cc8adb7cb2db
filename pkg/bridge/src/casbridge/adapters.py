"""Model-backed components behind the bridge endpoints.

Heavy dependencies (torch, transformers, sentence-transformers) are imported
lazily inside constructors so the server can run in offline mode without them
installed. Every adapter exposes the same minimal interface as the engine's
in-process component it replaces.
"""

from __future__ import annotations

import json
from typing import Sequence

import httpx
import numpy as np

from casengine.datasets import ConceptSequence
from casengine.embed import EmbeddingVector
from casengine.errors import BridgeError, EmbeddingError
from casengine.vocab import Vocabulary


class NeuralSequenceScorer:
    """Causal LM over concept tokens, projected onto the engine vocabulary.

    Each concept label is mapped to a single model token (labels outside the
    model tokenizer are rejected at load time); next-token probabilities are
    renormalized over the vocabulary so the scorer's distributions are directly
    comparable with the reference co-occurrence model.
    """

    def __init__(self, model_id: str, vocabulary: Vocabulary, device: str = "cpu") -> None:
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self.vocabulary = vocabulary
        self._torch = torch
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id).to(device).eval()
        self._token_ids: list[int] = []
        for concept in vocabulary.concepts:
            ids = self.tokenizer.encode(" " + concept.label, add_special_tokens=False)
            if len(ids) != 1:
                raise BridgeError(
                    f"label {concept.label!r} does not map to a single model token; "
                    "fine-tune the model with the concept vocabulary first"
                )
            self._token_ids.append(ids[0])
        self._token_index = np.asarray(self._token_ids)

    def next_distribution(self, context: Sequence[int]) -> np.ndarray:
        torch = self._torch
        bos = self.tokenizer.bos_token_id or self.tokenizer.eos_token_id
        ids = [bos] + [self._token_ids[t] for t in context]
        with torch.no_grad():
            logits = self.model(torch.tensor([ids], device=self.device)).logits[0, -1]
        probs = torch.softmax(logits, dim=-1).cpu().numpy()[self._token_index]
        total = probs.sum()
        if total <= 0:
            raise BridgeError("model assigned zero mass to the concept vocabulary")
        return probs / total

    def nll(self, sequence: ConceptSequence) -> float:
        total = 0.0
        for i, token in enumerate(sequence.tokens):
            p = self.next_distribution(sequence.tokens[:i])
            total -= float(np.log(max(p[token], 1e-300)))
        return total


class SentenceTextEmbedder:
    """Text embedder backed by a sentence-transformers model."""

    def __init__(self, model_id: str, device: str = "cpu") -> None:
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(model_id, device=device)
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmbeddingError("cannot embed empty text")
        values = self.model.encode([text], normalize_embeddings=True)[0]
        return EmbeddingVector(np.asarray(values, dtype=float), kind="text", source="bridge")


class ClipImageEmbedder:
    """Image embedder backed by a CLIP-style sentence-transformers model."""

    def __init__(self, model_id: str, device: str = "cpu") -> None:
        import io

        from PIL import Image
        from sentence_transformers import SentenceTransformer

        self._io = io
        self._Image = Image
        self.model = SentenceTransformer(model_id, device=device)
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def embed_image(self, data: bytes) -> EmbeddingVector:
        if not data:
            raise EmbeddingError("cannot embed empty image bytes")
        image = self._Image.open(self._io.BytesIO(data)).convert("RGB")
        values = self.model.encode([image], normalize_embeddings=True)[0]
        return EmbeddingVector(np.asarray(values, dtype=float), kind="image", source="bridge")


class ChatLLM:
    """Minimal OpenAI-compatible chat client used by compose and inspire."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None,
        model: str,
        timeout: float = 60.0,
    ) -> None:
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.client = httpx.Client(base_url=base_url, headers=headers, timeout=timeout)
        self.model = model

    def complete_json(self, system_prompt: str, user_prompt: str) -> dict:
        """One chat completion parsed as a JSON object."""
        response = self.client.post(
            "/chat/completions",
            json={
                "model": self.model,
                "messages": [
                    {"role": "system", "content": system_prompt},
                    {"role": "user", "content": user_prompt},
                ],
                "response_format": {"type": "json_object"},
            },
        )
        if response.status_code != 200:
            raise BridgeError(f"chat endpoint returned {response.status_code}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
            return json.loads(content)
        except (KeyError, IndexError, ValueError) as exc:
            raise BridgeError(f"malformed chat completion: {exc}") from exc


class RemoteImageGenerator:
    """Image generation via a simple POST {prompt} -> raw bytes endpoint."""

    def __init__(self, url: str, timeout: float = 120.0) -> None:
        self.client = httpx.Client(timeout=timeout)
        self.url = url

    def generate(self, prompt: str) -> bytes:
        response = self.client.post(self.url, json={"prompt": prompt})
        if response.status_code != 200:
            raise BridgeError(f"image endpoint returned {response.status_code}")
        return response.content
