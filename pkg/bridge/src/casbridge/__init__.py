"""Real-model adapters for the casengine bridge wire protocol.

The engine talks to models only through versioned HTTP endpoints
(/v1/score, /v1/sample, /v1/embed, /v1/compose, /v1/inspire, /v1/image,
/v1/handshake). This package provides a server that backs those endpoints
with neural models when they are configured, and with the engine's
deterministic offline components otherwise, so the wire contract is
identical either way.
"""

from .config import AdapterConfig
from .server import create_adapter_app

__all__ = ["AdapterConfig", "create_adapter_app"]
