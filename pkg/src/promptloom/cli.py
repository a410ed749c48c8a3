"""Command-line surface: run prompts, manage the library, talk to the hub,
and serve the local API plus editor UI.

Exit codes: 0 success, 1 gateway/network failure, 2 usage or validation
error, 3 decisions required (changes printed, stdin not a TTY). Errors are
emitted as one machine-readable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import CliConfig, load_config
from .diffing import ChangeSpan, Decision, DecisionSet, apply_decisions
from .errors import (
    ConfigError,
    DuplicatePromptError,
    NotFoundError,
    PromptLoomError,
    StorageError,
    ValidationFailedError,
)
from .gateway import GatewayError, LlmGateway
from .hub.client import HubClient, HubRequestError, HubSession, HubUnavailableError, extract_prompt_id
from .library import InvalidSlotError, PromptLibrary
from .localapi import create_local_app, resolve_prompt_ref
from .model import (
    ParsingRule,
    format_timestamp,
    loads_record,
    new_prompt,
    normalize_tags,
    record_to_dict,
    validate_prompt,
)
from .pipeline import EmptyInputError, Runner, run_result_to_dict

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_DECISIONS_REQUIRED = 3

USAGE_ERRORS = (
    ValidationFailedError,
    ConfigError,
    InvalidSlotError,
    EmptyInputError,
    NotFoundError,
    DuplicatePromptError,
    ValueError,
)
RUNTIME_ERRORS = (GatewayError, HubUnavailableError, HubRequestError, StorageError)


def _fail(code: str, message: str) -> None:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)


def _error_code(exc: BaseException) -> str:
    if isinstance(exc, ValidationFailedError):
        return "validation-error"
    if isinstance(exc, NotFoundError):
        return "not-found"
    if isinstance(exc, DuplicatePromptError):
        return "duplicate"
    if isinstance(exc, GatewayError):
        return "gateway-error"
    if isinstance(exc, (HubUnavailableError, HubRequestError)):
        return "hub-error"
    if isinstance(exc, ConfigError):
        return "config-error"
    return "error"


@dataclass
class AppContext:
    config: CliConfig
    library: PromptLibrary
    hub: HubClient | None

    def require_hub(self) -> HubClient:
        if self.hub is None:
            raise ConfigError("no hub configured; pass --hub-url or set hub_url in config")
        return self.hub

    def close(self) -> None:
        if self.hub is not None:
            self.hub.close()


def build_context(args: argparse.Namespace) -> AppContext:
    config = load_config(args.library_root)
    hub_url = getattr(args, "hub_url", None) or config.hub_url
    hub = HubClient(HubSession(hub_url)) if hub_url else None
    library = PromptLibrary(
        config.library_root, run_reporter=hub.report_run_async if hub else None
    )
    return AppContext(config=config, library=library, hub=hub)


# -- run ----------------------------------------------------------------------


def _read_input(path: str | None) -> str:
    if path and path != "-":
        return Path(path).read_text(encoding="utf-8")
    return sys.stdin.read()


def render_change_markers(input_text: str, spans: list[ChangeSpan]) -> str:
    """Unified inline markers: deletions as [-x-], insertions as {+y+}."""
    parts: list[str] = []
    pos = 0
    for span in spans:
        parts.append(input_text[pos : span.original_offset])
        if span.original_text:
            parts.append(f"[-{span.original_text}-]")
        if span.revised_text:
            parts.append(f"{{+{span.revised_text}+}}")
        pos = span.original_offset + len(span.original_text)
    parts.append(input_text[pos:])
    return "".join(parts)


def _decide_interactively(input_text: str, spans: list[ChangeSpan]) -> str:
    decisions: dict[int, Decision] = {}
    for span in spans:
        shown = span.kind.value
        detail = f"{span.original_text!r} -> {span.revised_text!r}"
        while True:
            print(f"[{span.index}] {shown} {detail}  accept? [y/n] ", end="", file=sys.stderr, flush=True)
            answer = sys.stdin.readline().strip().lower()
            if answer in ("y", "yes"):
                decisions[span.index] = Decision.ACCEPT
                break
            if answer in ("n", "no"):
                decisions[span.index] = Decision.REJECT
                break
    return apply_decisions(input_text, spans, DecisionSet(decisions))


def cmd_run(args: argparse.Namespace, ctx: AppContext) -> int:
    try:
        record = resolve_prompt_ref(ctx.library, args.prompt_ref)
    except NotFoundError:
        _fail("not-found", "prompt not found")
        return EXIT_USAGE
    input_text = _read_input(args.input)
    model = ctx.config.model_by_id(args.model or ctx.config.default_model)

    gateway = LlmGateway()
    try:
        runner = Runner(ctx.library, gateway)
        result = runner.run_prompt(record, input_text, model)
    finally:
        gateway.close()

    if args.json:
        print(json.dumps(run_result_to_dict(result), ensure_ascii=False))
        return EXIT_OK
    if args.accept_all:
        print(apply_decisions(result.input, result.spans, DecisionSet.accept_all(result.spans)))
        return EXIT_OK
    if not result.spans:
        print(result.input)
        return EXIT_OK
    if sys.stdin.isatty():
        print(render_change_markers(result.input, result.spans), file=sys.stderr)
        print(_decide_interactively(result.input, result.spans))
        return EXIT_OK
    print(render_change_markers(result.input, result.spans))
    _fail("decisions-required", "decisions required: rerun with --accept-all or on a TTY")
    return EXIT_DECISIONS_REQUIRED


# -- library -------------------------------------------------------------------


def _record_from_flags(args: argparse.Namespace):
    rule = None
    if args.pattern or args.replacement:
        if not (args.pattern and args.replacement):
            raise ValueError("--pattern and --replacement must be given together")
        rule = ParsingRule(args.pattern, args.replacement)
    return new_prompt(
        args.title or "",
        args.template or "",
        icon=args.icon or "✨",
        temperature=args.temperature if args.temperature is not None else 0.7,
        parsing_rule=rule,
        insertion_mode=args.insertion_mode or "replace",
        description=args.description,
        tags=normalize_tags(args.tags.split(",")) if args.tags else (),
        recommended_models=tuple(args.recommended_models.split(",")) if args.recommended_models else (),
    )


def cmd_library_add(args: argparse.Namespace, ctx: AppContext) -> int:
    if args.file:
        record = loads_record(Path(args.file).read_text(encoding="utf-8"))
    else:
        if not args.title or args.template is None:
            raise ValueError("either --file or both --title and --template are required")
        record = _record_from_flags(args)
    prompt_id = ctx.library.add_prompt(record)
    print(prompt_id)
    return EXIT_OK


def cmd_library_edit(args: argparse.Namespace, ctx: AppContext) -> int:
    record = ctx.library.find_by_prefix(args.id)
    changes: dict = {}
    for field in ("title", "template", "icon", "description"):
        value = getattr(args, field)
        if value is not None:
            changes[field] = value
    if args.temperature is not None:
        changes["temperature"] = args.temperature
    if args.insertion_mode is not None:
        changes["insertion_mode"] = args.insertion_mode
    if args.tags is not None:
        changes["tags"] = normalize_tags(args.tags.split(","))
    if args.recommended_models is not None:
        changes["recommended_models"] = tuple(
            m for m in args.recommended_models.split(",") if m
        )
    if args.clear_rule:
        changes["parsing_rule"] = None
    elif args.pattern or args.replacement:
        if not (args.pattern and args.replacement):
            raise ValueError("--pattern and --replacement must be given together")
        changes["parsing_rule"] = ParsingRule(args.pattern, args.replacement)
    if not changes:
        raise ValueError("nothing to change")
    updated = ctx.library.update_prompt(record.id, changes)
    print(updated.id)
    return EXIT_OK


def _print_prompt_table(records) -> None:
    for record in records:
        print(
            f"{record.id[:8]}  {record.icon:<2} {record.title[:40]:<40} "
            f"runs={record.run_count:<5} updated={format_timestamp(record.updated_at)[:19]}"
        )


def cmd_library_list(args: argparse.Namespace, ctx: AppContext) -> int:
    if args.slots:
        state = ctx.library.state()
        if args.json:
            print(json.dumps({"favorite_slots": list(state.favorite_slots)}))
        else:
            for index, slot in enumerate(state.favorite_slots):
                label = "(empty)"
                if slot:
                    label = f"{slot}  {state.prompts[slot].title}"
                print(f"slot {index}: {label}")
        return EXIT_OK
    records = ctx.library.sort_prompts(args.sort)
    if args.json:
        print(json.dumps({"prompts": [record_to_dict(r) for r in records]}, ensure_ascii=False))
    else:
        _print_prompt_table(records)
    return EXIT_OK


def cmd_library_search(args: argparse.Namespace, ctx: AppContext) -> int:
    records = ctx.library.search_prompts(args.query)
    if args.json:
        print(json.dumps({"prompts": [record_to_dict(r) for r in records]}, ensure_ascii=False))
    else:
        _print_prompt_table(records)
    return EXIT_OK


def cmd_library_favorite(args: argparse.Namespace, ctx: AppContext) -> int:
    record = ctx.library.find_by_prefix(args.id)
    state = ctx.library.set_favorite_slot(args.slot, record.id)
    print(json.dumps({"favorite_slots": list(state.favorite_slots)}))
    return EXIT_OK


def cmd_library_delete(args: argparse.Namespace, ctx: AppContext) -> int:
    record = ctx.library.find_by_prefix(args.id)
    ctx.library.delete_prompt(record.id)
    print(record.id)
    return EXIT_OK


# -- hub -----------------------------------------------------------------------


def cmd_hub_share(args: argparse.Namespace, ctx: AppContext) -> int:
    record = ctx.library.find_by_prefix(args.id)
    result = validate_prompt(record, for_sharing=True)
    if not result.ok:
        raise ValidationFailedError(result.violations)
    hub_id = ctx.require_hub().share(record)
    print(hub_id)
    return EXIT_OK


def cmd_hub_pull(args: argparse.Namespace, ctx: AppContext) -> int:
    entry_id = extract_prompt_id(args.ref)
    record = ctx.require_hub().pull_to_library(entry_id, ctx.library)
    print(record.id)
    return EXIT_OK


def cmd_hub_browse(args: argparse.Namespace, ctx: AppContext) -> int:
    entries, next_cursor = ctx.require_hub().list_entries(
        tag=args.tag, sort=args.sort, limit=args.limit, cursor=args.cursor
    )
    if args.json:
        from .hub.storage import entry_to_dict

        print(
            json.dumps(
                {"entries": [entry_to_dict(e) for e in entries], "next_cursor": next_cursor},
                ensure_ascii=False,
            )
        )
        return EXIT_OK
    for entry in entries:
        tags = ",".join(entry.tags)
        print(
            f"{entry.id[:8]}  {entry.icon:<2} {entry.title[:36]:<36} "
            f"runs={entry.run_count:<5} tags={tags}"
        )
    if next_cursor:
        print(f"next: --cursor {next_cursor}")
    return EXIT_OK


def cmd_hub_report(args: argparse.Namespace, ctx: AppContext) -> int:
    entry_id = extract_prompt_id(args.id)
    count = ctx.require_hub().report(entry_id, args.reason)
    print(json.dumps({"report_count": count}))
    return EXIT_OK


# -- serve ---------------------------------------------------------------------


def _check_port_free(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise ConfigError(f"port-in-use: {host}:{port} ({exc})") from exc
    finally:
        probe.close()


def cmd_serve(args: argparse.Namespace, ctx: AppContext) -> int:
    import uvicorn

    port = args.port or ctx.config.local_api_port
    host = args.host
    _check_port_free(host, port)

    gateway = LlmGateway()
    runner = Runner(ctx.library, gateway)
    ui_dir = args.ui_dist or _default_ui_dist()

    embedded_hub = None
    if args.with_hub:
        from .hub.service import HubService
        from .hub.storage import SqliteHubStore

        store = SqliteHubStore(str(ctx.config.library_root / "hub.sqlite3"))
        embedded_hub = HubService(store)

    app = create_local_app(
        ctx.config,
        ctx.library,
        runner,
        hub_client=ctx.hub,
        ui_dir=ui_dir,
        embedded_hub=embedded_hub,
    )

    try:
        uvicorn.run(app, host=host, port=port, log_level=args.log_level)
    finally:
        gateway.close()
    return EXIT_OK


def _default_ui_dist() -> str | None:
    candidate = Path.cwd() / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptloom",
        description="Create, run, share, and discover LLM prompt templates.",
    )
    parser.add_argument("--library-root", help="library directory (default: ~/.promptloom)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a prompt against input text")
    run.add_argument("prompt_ref", help="prompt id, unique id prefix, or slot:0..2")
    run.add_argument("input", nargs="?", help="input file (default: stdin)")
    run.add_argument("--model", help="model id (default from config)")
    run.add_argument("--accept-all", action="store_true", help="accept every change")
    run.add_argument("--json", action="store_true", help="emit the run result as JSON")
    run.add_argument("--hub-url", help="hub base URL for run reporting")
    run.set_defaults(handler=cmd_run)

    library = sub.add_parser("library", help="manage the local prompt library")
    lib_sub = library.add_subparsers(dest="subcommand", required=True)

    add = lib_sub.add_parser("add", help="add a prompt from a file or flags")
    add.add_argument("--file", help="prompt JSON document")
    _add_prompt_field_flags(add)
    add.set_defaults(handler=cmd_library_add)

    edit = lib_sub.add_parser("edit", help="edit fields of an existing prompt")
    edit.add_argument("id", help="prompt id or unique prefix")
    _add_prompt_field_flags(edit)
    edit.add_argument("--clear-rule", action="store_true", help="remove the parsing rule")
    edit.set_defaults(handler=cmd_library_edit)

    lst = lib_sub.add_parser("list", help="list prompts")
    lst.add_argument("--sort", choices=("name", "recency", "run_count"), default="name")
    lst.add_argument("--slots", action="store_true", help="show the three favorite slots")
    lst.add_argument("--json", action="store_true")
    lst.set_defaults(handler=cmd_library_list)

    search = lib_sub.add_parser("search", help="search title/description/template")
    search.add_argument("query")
    search.add_argument("--json", action="store_true")
    search.set_defaults(handler=cmd_library_search)

    favorite = lib_sub.add_parser("favorite", help="place a prompt in a favorite slot")
    favorite.add_argument("slot", type=int, choices=(0, 1, 2))
    favorite.add_argument("id")
    favorite.set_defaults(handler=cmd_library_favorite)

    delete = lib_sub.add_parser("delete", help="delete a prompt")
    delete.add_argument("id")
    delete.set_defaults(handler=cmd_library_delete)

    hub = sub.add_parser("hub", help="interact with a community hub")
    hub.add_argument("--hub-url", help="hub base URL (overrides config)")
    hub_sub = hub.add_subparsers(dest="subcommand", required=True)

    share = hub_sub.add_parser("share", help="share a library prompt")
    share.add_argument("id", help="local prompt id or unique prefix")
    share.set_defaults(handler=cmd_hub_share)

    pull = hub_sub.add_parser("pull", help="copy a hub prompt into the library")
    pull.add_argument("ref", help="prompt id or deep-link URL with ?prompt=<id>")
    pull.set_defaults(handler=cmd_hub_pull)

    browse = hub_sub.add_parser("browse", help="list hub prompts")
    browse.add_argument("--tag")
    browse.add_argument("--sort", choices=("new", "popular"), default="new")
    browse.add_argument("--limit", type=int, default=20)
    browse.add_argument("--cursor")
    browse.add_argument("--json", action="store_true")
    browse.set_defaults(handler=cmd_hub_browse)

    report = hub_sub.add_parser("report", help="report a hub prompt")
    report.add_argument("id")
    report.add_argument("--reason", required=True)
    report.set_defaults(handler=cmd_hub_report)

    serve = sub.add_parser("serve", help="serve the local API and editor UI")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, help="port (default from config, 7870)")
    serve.add_argument("--hub-url", help="hub base URL to proxy")
    serve.add_argument("--with-hub", action="store_true", help="embed a hub service at /v1")
    serve.add_argument("--ui-dist", help="directory of built UI assets to serve at /")
    serve.add_argument("--log-level", default="info")
    serve.set_defaults(handler=cmd_serve)

    return parser


def _add_prompt_field_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--title")
    parser.add_argument("--template")
    parser.add_argument("--icon")
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--description")
    parser.add_argument("--tags", help="comma-separated tags")
    parser.add_argument("--recommended-models", help="comma-separated model ids")
    parser.add_argument("--insertion-mode", choices=("replace", "append"))
    parser.add_argument("--pattern", help="parsing rule regex")
    parser.add_argument("--replacement", help="parsing rule replacement ($1..$9)")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = build_context(args)
    except PromptLoomError as exc:
        _fail(_error_code(exc), str(exc))
        return EXIT_USAGE
    try:
        return args.handler(args, ctx)
    except USAGE_ERRORS as exc:
        _fail(_error_code(exc), str(exc))
        return EXIT_USAGE
    except RUNTIME_ERRORS as exc:
        _fail(_error_code(exc), str(exc))
        return EXIT_RUNTIME
    finally:
        ctx.close()


if __name__ == "__main__":
    raise SystemExit(main())
