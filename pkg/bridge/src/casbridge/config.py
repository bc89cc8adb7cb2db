"""Adapter configuration, resolved from explicit arguments or environment.

Environment variables (all optional; unset means the deterministic offline
component is used for that capability):
    CASBRIDGE_SCORER_MODEL   path or hub id of a causal LM over concept tokens
    CASBRIDGE_TEXT_MODEL     sentence-embedding model id
    CASBRIDGE_IMAGE_MODEL    image-embedding model id
    CASBRIDGE_LLM_BASE_URL   OpenAI-compatible endpoint for compose/inspire
    CASBRIDGE_LLM_API_KEY    key for that endpoint
    CASBRIDGE_LLM_MODEL      chat model name
    CASBRIDGE_IMAGE_GEN_URL  endpoint for image generation
    CASBRIDGE_DEVICE         torch device ("cpu", "cuda", ...)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


@dataclass(frozen=True)
class AdapterConfig:
    vocabulary_path: str
    scorer_model: str | None = None
    context_scorer_model: str | None = None
    text_model: str | None = None
    image_model: str | None = None
    llm_base_url: str | None = None
    llm_api_key: str | None = field(default=None, repr=False)
    llm_model: str | None = None
    image_gen_url: str | None = None
    device: str = "cpu"
    embedding_dim: int = 64

    @classmethod
    def from_env(cls, vocabulary_path: str) -> "AdapterConfig":
        env = os.environ.get
        return cls(
            vocabulary_path=vocabulary_path,
            scorer_model=env("CASBRIDGE_SCORER_MODEL"),
            context_scorer_model=env("CASBRIDGE_CONTEXT_SCORER_MODEL"),
            text_model=env("CASBRIDGE_TEXT_MODEL"),
            image_model=env("CASBRIDGE_IMAGE_MODEL"),
            llm_base_url=env("CASBRIDGE_LLM_BASE_URL"),
            llm_api_key=env("CASBRIDGE_LLM_API_KEY"),
            llm_model=env("CASBRIDGE_LLM_MODEL"),
            image_gen_url=env("CASBRIDGE_IMAGE_GEN_URL"),
            device=env("CASBRIDGE_DEVICE", "cpu"),
        )

    def capabilities(self) -> dict[str, str]:
        """Which backend serves each capability: 'model' or 'offline'."""
        return {
            "score": "model" if self.scorer_model else "offline",
            "embed_text": "model" if self.text_model else "offline",
            "embed_image": "model" if self.image_model else "offline",
            "compose": "model" if self.llm_base_url else "offline",
            "inspire": "model" if self.llm_base_url else "offline",
            "image": "model" if self.image_gen_url else "offline",
        }
