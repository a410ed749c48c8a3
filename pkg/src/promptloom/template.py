"""Prompt template rendering.

Templates may contain the literal placeholder ``{{text}}``; every occurrence
is substituted with the input. Templates without the placeholder get the
input appended on a new line. There is no escape for a literal ``{{text}}``.
"""

from __future__ import annotations

from dataclasses import dataclass

PLACEHOLDER = "{{text}}"


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    used_placeholder: bool


def render_prompt(template: str, input_text: str) -> RenderedPrompt:
    """Substitute ``{{text}}`` with the input, or append the input on a new line."""
    if PLACEHOLDER in template:
        return RenderedPrompt(template.replace(PLACEHOLDER, input_text), True)
    return RenderedPrompt(template + "\n" + input_text, False)
