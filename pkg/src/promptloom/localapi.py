"""Local HTTP API consumed by the editor UI, served by the CLI.

Routes under ``/local`` mirror the run pipeline, library, and hub client;
the UI never computes diffs or applies decisions itself — final text always
comes from ``POST /local/apply``. When built UI assets are present they are
served at ``/``.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .config import CliConfig
from .diffing import ChangeSpan, Decision, DecisionSet, MissingDecisionError, SpanKind, apply_decisions
from .errors import (
    ConfigError,
    DuplicatePromptError,
    NotFoundError,
    ValidationFailedError,
)
from .gateway import GatewayError
from .hub.client import (
    HubClient,
    HubRequestError,
    HubUnavailableError,
    extract_prompt_id,
)
from .hub.service import BadRequestError
from .hub.storage import entry_to_dict
from .library import InvalidSlotError, PromptLibrary
from .model import record_from_dict, record_to_dict
from .pipeline import EmptyInputError, Runner, run_result_to_dict

if TYPE_CHECKING:
    from .hub.service import HubService

PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>promptloom</title></head>
<body><h1>promptloom local API</h1>
<p>No editor UI build found. The API lives under <code>/local</code>.</p>
</body></html>
"""


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _span_from_dict(data: dict) -> ChangeSpan:
    return ChangeSpan(
        index=int(data["index"]),
        kind=SpanKind(data["kind"]),
        original_text=data["original_text"],
        revised_text=data["revised_text"],
        original_offset=int(data["original_offset"]),
        revised_offset=int(data["revised_offset"]),
    )


def resolve_prompt_ref(library: PromptLibrary, ref: str):
    """A prompt reference is `slot:0..2`, a full id, or a unique id prefix."""
    if ref.startswith("slot:"):
        try:
            slot = int(ref.split(":", 1)[1])
        except ValueError:
            raise NotFoundError(f"bad slot reference {ref!r}") from None
        return library.slot_prompt(slot)
    return library.find_by_prefix(ref)


def create_local_app(
    config: CliConfig,
    library: PromptLibrary,
    runner: Runner,
    hub_client: HubClient | None = None,
    ui_dir: str | Path | None = None,
    embedded_hub: HubService | None = None,
) -> FastAPI:
    app = FastAPI(title="promptloom local API", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ValidationFailedError)
    async def _validation(request: Request, exc: ValidationFailedError) -> Response:
        return _error(400, "validation-error", "; ".join(exc.violations))

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError) -> Response:
        return _error(404, "not-found", str(exc))

    @app.exception_handler(DuplicatePromptError)
    async def _duplicate(request: Request, exc: DuplicatePromptError) -> Response:
        return _error(409, "duplicate", str(exc))

    @app.exception_handler(BadRequestError)
    async def _bad_request(request: Request, exc: BadRequestError) -> Response:
        return _error(400, "bad-request", str(exc))

    @app.exception_handler(InvalidSlotError)
    async def _bad_slot(request: Request, exc: InvalidSlotError) -> Response:
        return _error(400, "invalid-slot", str(exc))

    @app.exception_handler(EmptyInputError)
    async def _empty_input(request: Request, exc: EmptyInputError) -> Response:
        return _error(400, "empty-input", str(exc))

    @app.exception_handler(MissingDecisionError)
    async def _missing_decision(request: Request, exc: MissingDecisionError) -> Response:
        return _error(400, "missing-decision", str(exc))

    @app.exception_handler(GatewayError)
    async def _gateway(request: Request, exc: GatewayError) -> Response:
        return _error(502, "gateway-error", str(exc))

    @app.exception_handler(ConfigError)
    async def _config(request: Request, exc: ConfigError) -> Response:
        return _error(400, "config-error", str(exc))

    @app.exception_handler(HubUnavailableError)
    async def _hub_unreachable(request: Request, exc: HubUnavailableError) -> Response:
        return _error(502, "hub-unreachable", str(exc))

    @app.exception_handler(HubRequestError)
    async def _hub_error(request: Request, exc: HubRequestError) -> Response:
        return _error(502, "hub-error", str(exc))

    # -- run pipeline ------------------------------------------------------

    @app.post("/local/run")
    def run(payload: dict) -> dict:
        record = resolve_prompt_ref(library, str(payload.get("prompt_id", "")))
        model = config.model_by_id(payload.get("model_id") or config.default_model)
        result = runner.run_prompt(record, payload.get("input", ""), model)
        return run_result_to_dict(result)

    @app.post("/local/apply")
    def apply(payload: dict) -> dict:
        try:
            spans = [_span_from_dict(s) for s in payload.get("spans", [])]
            decisions = DecisionSet(
                {int(k): Decision(v) for k, v in payload.get("decisions", {}).items()}
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequestError(f"malformed spans or decisions: {exc}") from exc
        text = apply_decisions(payload.get("input", ""), spans, decisions)
        return {"text": text}

    @app.get("/local/models")
    def models() -> dict:
        return {
            "models": [
                {"model_id": m.model_id, "endpoint_kind": m.endpoint_kind.value}
                for m in config.models
            ],
            "default_model": config.default_model,
        }

    # -- library -----------------------------------------------------------

    @app.get("/local/library/prompts")
    def library_list(q: str | None = None, sort: str = "name") -> dict:
        records = library.search_prompts(q) if q else library.sort_prompts(sort)
        return {"prompts": [record_to_dict(r) for r in records]}

    @app.post("/local/library/prompts")
    def library_add(payload: dict) -> dict:
        try:
            record = record_from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequestError(f"malformed prompt payload: {exc}") from exc
        return {"id": library.add_prompt(record)}

    @app.get("/local/library/prompts/{prompt_id}")
    def library_get(prompt_id: str) -> dict:
        return record_to_dict(library.get_prompt(prompt_id))

    @app.patch("/local/library/prompts/{prompt_id}")
    def library_update(prompt_id: str, payload: dict) -> dict:
        changes = dict(payload)
        if "parsing_rule" in changes and changes["parsing_rule"] is not None:
            from .model import ParsingRule

            rule = changes["parsing_rule"]
            changes["parsing_rule"] = ParsingRule(rule["pattern"], rule["replacement"])
        if "tags" in changes and changes["tags"] is not None:
            changes["tags"] = tuple(changes["tags"])
        if "recommended_models" in changes and changes["recommended_models"] is not None:
            changes["recommended_models"] = tuple(changes["recommended_models"])
        return record_to_dict(library.update_prompt(prompt_id, changes))

    @app.delete("/local/library/prompts/{prompt_id}")
    def library_delete(prompt_id: str) -> dict:
        library.delete_prompt(prompt_id)
        return {"deleted": True}

    @app.post("/local/library/prompts/{prompt_id}/runs")
    def library_record_run(prompt_id: str) -> dict:
        return {"run_count": library.record_run(prompt_id)}

    @app.get("/local/library/slots")
    def library_slots() -> dict:
        return {"favorite_slots": list(library.state().favorite_slots)}

    @app.put("/local/library/slots/{slot}")
    def library_set_slot(slot: int, payload: dict) -> dict:
        prompt_id = payload.get("id")
        if prompt_id is None:
            state = library.clear_favorite_slot(slot)
        else:
            state = library.set_favorite_slot(slot, prompt_id)
        return {"favorite_slots": list(state.favorite_slots)}

    # -- hub proxy -----------------------------------------------------------

    def require_hub() -> HubClient:
        if hub_client is None:
            raise ConfigError("no hub configured; set hub_url")
        return hub_client

    @app.get("/local/hub/prompts")
    def hub_list(
        tag: str | None = None,
        sort: str = "new",
        limit: int = 20,
        cursor: str | None = None,
    ) -> dict:
        entries, next_cursor = require_hub().list_entries(
            tag=tag, sort=sort, limit=limit, cursor=cursor
        )
        return {"entries": [entry_to_dict(e) for e in entries], "next_cursor": next_cursor}

    @app.get("/local/hub/prompts/{entry_id}")
    def hub_get(entry_id: str) -> dict:
        return entry_to_dict(require_hub().get_entry(entry_id))

    @app.get("/local/hub/tags")
    def hub_tags(limit: int = 10) -> dict:
        tags = require_hub().top_tags(limit)
        return {"tags": [{"tag": t, "count": c} for t, c in tags]}

    @app.post("/local/hub/pull")
    def hub_pull(payload: dict) -> dict:
        try:
            entry_id = extract_prompt_id(str(payload.get("ref", "")))
        except ValueError as exc:
            raise BadRequestError(str(exc)) from exc
        record = require_hub().pull_to_library(entry_id, library)
        return record_to_dict(record)

    @app.post("/local/hub/share")
    def hub_share(payload: dict) -> dict:
        record = library.get_prompt(str(payload.get("id", "")))
        return {"id": require_hub().share(record)}

    # -- embedded hub and UI assets; routers must precede the "/" mount -------

    if embedded_hub is not None:
        from .hub.api import hub_router, install_hub_error_handlers

        install_hub_error_handlers(app)
        app.include_router(hub_router(embedded_hub))

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return PLACEHOLDER_PAGE

    return app
