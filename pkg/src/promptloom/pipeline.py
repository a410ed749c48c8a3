"""One prompt run end-to-end: render, complete, parse, diff.

The run counter moves only after the whole pipeline succeeds; any gateway or
parsing failure leaves it untouched. Prompt-level temperature wins over the
model default.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diffing import ChangeSpan, diff_for_insertion_mode
from .errors import PromptLoomError, ValidationFailedError
from .gateway import CompletionRequest, LlmGateway
from .library import PromptLibrary
from .model import InsertionMode, ModelConfig, PromptRecord, validate_prompt
from .parsing import parse_output
from .template import render_prompt


class EmptyInputError(PromptLoomError):
    """run_prompt requires non-empty input text."""


@dataclass(frozen=True)
class RunResult:
    input: str
    rendered_prompt: str
    raw_output: str
    parsed_output: str
    parse_matched: bool
    spans: list[ChangeSpan]
    insertion_mode: InsertionMode
    model_id: str
    latency: float


class Runner:
    """Orchestrates runs against a library and a gateway."""

    def __init__(self, library: PromptLibrary, gateway: LlmGateway):
        self.library = library
        self.gateway = gateway

    def run_prompt(
        self, record: PromptRecord, input_text: str, model: ModelConfig
    ) -> RunResult:
        if not input_text:
            raise EmptyInputError("input text must be non-empty")
        result = validate_prompt(record)
        if not result.ok:
            raise ValidationFailedError(result.violations)

        rendered = render_prompt(record.template, input_text)
        completion = self.gateway.complete(
            CompletionRequest(
                prompt=rendered.text,
                temperature=record.temperature,
                model=model,
            )
        )
        parsed = parse_output(completion.text, record.parsing_rule)
        spans = diff_for_insertion_mode(input_text, parsed.text, record.insertion_mode)

        # Record the run only for prompts the library actually holds; ad-hoc
        # records (e.g. a hub preview) run without counting.
        if record.id in self.library.state().prompts:
            self.library.record_run(record.id)

        return RunResult(
            input=input_text,
            rendered_prompt=rendered.text,
            raw_output=completion.text,
            parsed_output=parsed.text,
            parse_matched=parsed.matched,
            spans=spans,
            insertion_mode=record.insertion_mode,
            model_id=completion.model_id,
            latency=completion.latency,
        )


def run_result_to_dict(result: RunResult) -> dict:
    return {
        "input": result.input,
        "rendered_prompt": result.rendered_prompt,
        "raw_output": result.raw_output,
        "parsed_output": result.parsed_output,
        "parse_matched": result.parse_matched,
        "spans": [
            {
                "index": span.index,
                "kind": span.kind.value,
                "original_text": span.original_text,
                "revised_text": span.revised_text,
                "original_offset": span.original_offset,
                "revised_offset": span.revised_offset,
            }
            for span in result.spans
        ],
        "insertion_mode": result.insertion_mode.value,
        "model_id": result.model_id,
        "latency": result.latency,
    }
