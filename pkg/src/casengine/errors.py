"""Typed error hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(EngineError):
    """Invalid configuration or arguments at setup time."""


class DataError(EngineError):
    """Malformed or inconsistent input data (unknown tokens, empty sets)."""


class EmbeddingError(EngineError):
    """Embedding backend failure or dimension/kind mismatch."""


class ArgumentError(EngineError):
    """Operation called with out-of-contract arguments."""


class SamplerExhaustedError(EngineError):
    """No eligible concept could be proposed; caller may retry with a new seed."""


class InspirationFailureError(EngineError):
    """LLM inspiration produced no usable concept after retries."""


class CompositionError(EngineError):
    """Compositor response invalid after the repair round-trip."""


class BridgeError(EngineError):
    """Bridge endpoint unreachable, non-2xx, or schema-violating."""


class FittingError(EngineError):
    """Statistical fit cannot proceed (e.g. disconnected comparison graph)."""


class ValidationError(EngineError):
    """User-submitted value rejected by eligibility rules."""


class SessionError(EngineError):
    """Unknown session or conflicting concurrent step."""
