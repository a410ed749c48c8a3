#!/usr/bin/env python3
"""End-to-end walkthrough against an in-process hub and the scripted stub.

Shares a prompt to a throwaway hub, pulls it into a temp library, runs it
through the full pipeline (render -> complete -> parse -> diff), and prints
the change markers plus accept-all / reject-one outcomes.
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from promptloom.cli import render_change_markers
from promptloom.diffing import Decision, DecisionSet, apply_decisions
from promptloom.gateway import LlmGateway, prompt_sha256
from promptloom.hub.service import HubService
from promptloom.hub.storage import SqliteHubStore
from promptloom.library import PromptLibrary
from promptloom.model import EndpointKind, ModelConfig, ParsingRule, StubMode, new_prompt
from promptloom.pipeline import Runner


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="promptloom-demo-"))
    print(f"demo workspace: {workdir}\n")

    # a tiny hub with one community prompt
    store = SqliteHubStore(":memory:")
    hub = HubService(store)
    shared = new_prompt(
        "Improve flow",
        "Improve the flow of the following text: {{text}}",
        icon="🪄",
        parsing_rule=ParsingRule(".*<output>(.*)</output>.*", "$1"),
        description="Rewrites text so it reads smoothly.",
        tags=("writing",),
    )
    hub_id = hub.share(shared)
    print(f"shared to hub as {hub_id}")
    print(f"deep link: https://example.invalid/app?prompt={hub_id}\n")

    # copy it into a local library (directly; the CLI does this via `hub pull`)
    library = PromptLibrary(workdir / "library")
    entry = hub.get(hub_id)
    local_id = library.add_prompt(
        new_prompt(
            entry.title,
            entry.template,
            icon=entry.icon,
            parsing_rule=entry.parsing_rule,
            description=entry.description,
            tags=entry.tags,
            source_hub_id=entry.id,
        )
    )
    record = library.get_prompt(local_id)

    # a map-mode stub plays the part of the model
    input_text = "The cat sat on mat. It look comfortable."
    rendered = f"Improve the flow of the following text: {input_text}"
    response = (
        "Sure, I can help you! "
        "<output>The cat sat on the mat, looking comfortable.</output>"
    )
    map_path = workdir / "stub_map.json"
    map_path.write_text(
        json.dumps([{"prompt_sha256": prompt_sha256(rendered), "response": response}])
    )
    model = ModelConfig(
        "stub-map",
        EndpointKind.SCRIPTED_STUB,
        stub_mode=StubMode.MAP,
        stub_map_path=str(map_path),
    )

    with LlmGateway() as gateway:
        result = Runner(library, gateway).run_prompt(record, input_text, model)

    print(f"raw model output : {result.raw_output}")
    print(f"parsed output    : {result.parsed_output}")
    print(f"change markers   : {render_change_markers(result.input, result.spans)}")

    accept_all = apply_decisions(result.input, result.spans, DecisionSet.accept_all(result.spans))
    print(f"accept all       : {accept_all}")

    if result.spans:
        mixed = {span.index: Decision.ACCEPT for span in result.spans}
        mixed[result.spans[0].index] = Decision.REJECT
        partial = apply_decisions(result.input, result.spans, DecisionSet(mixed))
        print(f"reject first span: {partial}")

    print(f"\nlocal run count  : {library.get_prompt(local_id).run_count}")
    store.close()


if __name__ == "__main__":
    main()
