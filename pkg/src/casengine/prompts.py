"""Prompt templates for the compositor and inspiration backends.

The user prompts carry the session state (pool, original/expired lists, newly
added concepts, performance history) in a fixed plain-text layout so external
LLM adapters receive the same fields every generation.
"""

from __future__ import annotations

from typing import Sequence

COMPOSITOR_SYSTEM_PROMPT = """\
You are an AI artistic innovator in a long-running creative experiment. In each
generation you receive an updated concept pool and must create one artwork from
a strategically chosen subset of those concepts. Aim for unprecedented but
meaningful combinations; your fitness is the novelty score (combined, text, and
image novelty) of what you produce, computed against every previous generation.
Learn from earlier scores and keep your creations different from all prior ones.

Respond with a single valid JSON object, each key appearing exactly once:
{
    "thought": "Your reasoning: which concepts you picked, why this many, what
    connection between them is new, and how the combination drives novelty.",
    "name": "Name of your artwork",
    "concepts_used": ["concepts you selected for this combination"],
    "prompt": "The exact image-generation prompt. Name any artistic style
    explicitly, use concrete colors, spatial relationships, lighting, and
    physical detail. Describe only what is in the image."
}
Never mention a concept in the prompt that is not listed in concepts_used.
"""

PRESERVE_ORIGINAL_RULE = """\
ORIGINAL CONCEPTS PRESERVATION RULE ACTIVATED:
- The original concepts (those provided at the start) MUST ALWAYS be included
  in your recombination.
- Each artwork MUST incorporate ALL of the original concepts.
- You may add new concepts, but you cannot omit any original one.
"""

INSPIRATION_SYSTEM_PROMPT = """\
You are a Concept Inspiration Agent: the novelty introductor for an artistic
evolution system. Analyze the current concept pool and suggest NEW concepts
that maximize novelty when combined with the existing ones, pushing the
evolution into unexplored creative territory. Novelty is measured by embedding
similarity of prompts and images against all previous generations; higher
scores mean greater difference.

Respond with a single valid JSON object:
{
    "analysis": "Your analysis of the evolution state, the concept pool, and
    where the unexplored directions are.",
    "reasoning": "Why the suggested concepts create novel, meaningful
    combinations with the pool.",
    "suggested_concepts": ["concept1", "concept2", ...]
}
"""

CONSTRAINED_VOCABULARY_BLOCK = """\
ALLOWED VOCABULARY:
You MUST select concepts ONLY from this list: {vocabulary_list}

IMPORTANT: Your suggestions MUST be concepts from the ALLOWED VOCABULARY list
above. Suggesting a concept that is not in this vocabulary is FORBIDDEN.
"""

FREE_VOCABULARY_BLOCK = """\
VOCABULARY FREEDOM:
You can suggest ANY concepts you deem most appropriate for maximizing novelty.
You are not restricted to a predefined vocabulary.
"""


def _fmt_labels(labels: Sequence[str]) -> str:
    return "[" + ", ".join(f"'{lbl}'" for lbl in labels) + "]"


def render_compositor_user_prompt(
    generation: int,
    pool: Sequence[str],
    original: Sequence[str],
    expired: Sequence[str],
    newly_added: Sequence[str],
    previous_concepts_used: Sequence[str] | None = None,
    previous_novelty: dict | None = None,
    preserve_original: bool = False,
) -> str:
    lines = [
        f"Generation {generation}",
        f"Current concept pool: {_fmt_labels(pool)}",
    ]
    if preserve_original:
        lines.append(f"Original concepts (MUST BE INCLUDED): {_fmt_labels(original)}")
    else:
        lines.append(f"Original concepts: {_fmt_labels(original)}")
    lines.append(f"Expired concepts (cannot be used): {_fmt_labels(expired)}")
    lines.append(f"Newly added concepts: {_fmt_labels(newly_added)}")
    if previous_concepts_used is not None and previous_novelty is not None:
        lines += [
            "",
            "PREVIOUS GENERATION CONTEXT:",
            f"Previous generation concepts used: {_fmt_labels(previous_concepts_used)}",
            f"Previous generation fitness: {previous_novelty['combined']:.2f}",
            f"Previous generation novelty: {previous_novelty['combined']:.2f}",
            f"Previous generation text novelty: {previous_novelty['text']:.2f}",
            f"Previous generation image novelty: {previous_novelty['image']:.2f}",
        ]
    lines += [
        "",
        "New concept(s) have been added to your concept pool. Create the next "
        "artwork using your selected concepts from the concept pool. Combine as "
        "many concepts as you like, but be strategic: too many may turn vague, "
        "too few may limit depth. Aim for novel, unprecedented and interesting "
        "combinations.",
    ]
    return "\n".join(lines)


def render_inspiration_user_prompt(
    generation: int,
    pool: Sequence[str],
    original: Sequence[str],
    expired: Sequence[str],
    last_artwork_name: str | None = None,
    last_concepts_used: Sequence[str] | None = None,
    previous_novelty: dict | None = None,
    novelty_trend: str | None = None,
) -> str:
    lines = [
        f"CONCEPT INSPIRATION REQUEST - Generation {generation}",
        "",
        "CURRENT CONCEPT POOL (concepts used in previous generations):",
        "[" + ", ".join(pool) + "]",
        f"Original concepts: {_fmt_labels(original)}",
        f"Expired concepts (avoid these): {_fmt_labels(expired)}",
    ]
    if last_artwork_name is not None:
        lines.append(f'Last artwork: "{last_artwork_name}"')
    if last_concepts_used is not None:
        lines.append(f"Last concepts used: {_fmt_labels(last_concepts_used)}")
    lines += ["", "PERFORMANCE HISTORY:"]
    if previous_novelty is not None:
        lines += [
            "Previous Performance:",
            f"Fitness (Novelty): {previous_novelty['combined']:.2f}",
            f"Combined Novelty: {previous_novelty['combined']:.2f}",
            f"Text Novelty: {previous_novelty['text']:.2f}",
            f"Image Novelty: {previous_novelty['image']:.2f}",
        ]
    else:
        lines.append("No previous generations yet.")
    if novelty_trend is not None:
        lines += ["", f"Previous novelty trend: {novelty_trend}"]
    lines += [
        "",
        "INSPIRATION TASK:",
        "Analyze the current concept pool and select 1 NEW concept that will "
        "maximize novelty while being interesting and meaningful when combined "
        "with the existing concept pool.",
        "",
        "CONSTRAINTS:",
        "- Do NOT select any concepts that are already in the concept pool",
        "- Do NOT select any expired concepts",
        "- Focus on maximizing novelty (difference from previous generations)",
    ]
    return "\n".join(lines)
