"""Shared domain types: prompt records, parsing rules, model configs.

A prompt's identity is derived from its content (title, template, parsing
rule, insertion mode), so identical prompts share an id wherever they are
stored and edited copies get a fresh one.
"""

from __future__ import annotations

import json
import re
import unicodedata
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

PROMPT_ID_RE = re.compile(r"^[0-9a-f]{8}(-[0-9a-f]{4}){3}-[0-9a-f]{12}$")
TAG_RE = re.compile(r"^[a-z0-9-]{1,32}$")

TEMPERATURE_MIN = 0.0
TEMPERATURE_MAX = 2.0
DEFAULT_TEMPERATURE = 0.7
MAX_ICON_CHARS = 4

# Fixed namespace so content-derived ids are identical across processes and hosts.
ID_NAMESPACE = uuid.UUID("f4cc24fe-b3f0-5598-a857-92e2fa4c7775")


class InsertionMode(str, Enum):
    """How parsed model output lands in the document."""

    REPLACE = "replace"
    APPEND = "append"


class EndpointKind(str, Enum):
    REMOTE_CHAT_API = "remote_chat_api"
    SCRIPTED_STUB = "scripted_stub"


class StubMode(str, Enum):
    """Behavior of the deterministic stub endpoint."""

    ECHO = "echo"
    MAP = "map"
    SCRIPT = "script"


@dataclass(frozen=True)
class ParsingRule:
    """Regex pattern plus a ``$1``-style replacement applied to raw model output."""

    pattern: str
    replacement: str


@dataclass(frozen=True)
class PromptRecord:
    """A prompt template plus metadata; the unit stored, run, and shared."""

    id: str
    title: str
    template: str
    icon: str = "✨"
    temperature: float = DEFAULT_TEMPERATURE
    parsing_rule: ParsingRule | None = None
    insertion_mode: InsertionMode = InsertionMode.REPLACE
    description: str | None = None
    tags: tuple[str, ...] = ()
    recommended_models: tuple[str, ...] = ()
    run_count: int = 0
    created_at: datetime = field(default_factory=lambda: now_utc())
    updated_at: datetime = field(default_factory=lambda: now_utc())
    source_hub_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "recommended_models", tuple(self.recommended_models))
        if isinstance(self.insertion_mode, str) and not isinstance(
            self.insertion_mode, InsertionMode
        ):
            object.__setattr__(self, "insertion_mode", InsertionMode(self.insertion_mode))


@dataclass(frozen=True)
class ModelConfig:
    """Which model endpoint to call and with what defaults.

    The stub_* fields configure the scripted stub endpoint and are ignored
    for remote models.
    """

    model_id: str
    endpoint_kind: EndpointKind
    base_url: str | None = None
    api_key_ref: str | None = None
    default_temperature: float = DEFAULT_TEMPERATURE
    stub_mode: StubMode = StubMode.ECHO
    stub_map_path: str | None = None
    stub_script: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.endpoint_kind, str) and not isinstance(
            self.endpoint_kind, EndpointKind
        ):
            object.__setattr__(self, "endpoint_kind", EndpointKind(self.endpoint_kind))
        if isinstance(self.stub_mode, str) and not isinstance(self.stub_mode, StubMode):
            object.__setattr__(self, "stub_mode", StubMode(self.stub_mode))
        object.__setattr__(self, "stub_script", tuple(self.stub_script))


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of a validation pass; empty violations means ok."""

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def now_utc() -> datetime:
    return datetime.now(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 with fixed microsecond precision, so text order is time order."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.%f") + "+00:00"


def parse_timestamp(text: str) -> datetime:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def visible_length(text: str) -> int:
    """Count visible characters, treating joined emoji sequences as one glyph."""
    count = 0
    joined = False
    for ch in text:
        cp = ord(ch)
        # Combining marks, variation selectors, and skin tone modifiers attach
        # to the preceding glyph.
        if unicodedata.combining(ch) or cp in (0xFE0E, 0xFE0F) or 0x1F3FB <= cp <= 0x1F3FF:
            continue
        if cp == 0x200D:  # zero-width joiner glues the next glyph on
            joined = True
            continue
        if joined:
            joined = False
            continue
        count += 1
    return count


def normalize_tag(raw: str) -> str:
    """Lowercase kebab-case: spaces/underscores become dashes, the rest is dropped."""
    lowered = raw.strip().lower()
    lowered = re.sub(r"[\s_]+", "-", lowered)
    lowered = re.sub(r"[^a-z0-9-]", "", lowered)
    lowered = re.sub(r"-{2,}", "-", lowered).strip("-")
    return lowered[:32]


def normalize_tags(raw_tags: Iterable[str]) -> tuple[str, ...]:
    """Normalize and deduplicate tags, preserving first-seen order."""
    seen: dict[str, None] = {}
    for raw in raw_tags:
        tag = normalize_tag(raw)
        if tag:
            seen.setdefault(tag)
    return tuple(seen)


def validate_prompt(record: PromptRecord, for_sharing: bool = False) -> ValidationResult:
    """Check every PromptRecord invariant; sharing adds description/tag requirements."""
    violations: list[str] = []
    if not record.title.strip():
        violations.append("title must be non-empty")
    if not PROMPT_ID_RE.fullmatch(record.id):
        violations.append("id must match the 8-4-4-4-12 lowercase hex layout")
    if not TEMPERATURE_MIN <= record.temperature <= TEMPERATURE_MAX:
        violations.append("temperature out of range")
    if visible_length(record.icon) > MAX_ICON_CHARS:
        violations.append(f"icon must be at most {MAX_ICON_CHARS} visible characters")
    if record.run_count < 0:
        violations.append("run_count must be non-negative")
    for tag in record.tags:
        if not TAG_RE.fullmatch(tag):
            violations.append(f"tag {tag!r} must be lowercase kebab-case (1-32 chars)")
    if len(set(record.tags)) != len(record.tags):
        violations.append("tags must be deduplicated")
    if record.parsing_rule is not None:
        from . import parsing

        rule_result = parsing.validate_rule(record.parsing_rule)
        violations.extend(f"parsing_rule: {v}" for v in rule_result.violations)
    if record.source_hub_id is not None and not PROMPT_ID_RE.fullmatch(record.source_hub_id):
        violations.append("source_hub_id must match the 8-4-4-4-12 lowercase hex layout")
    if for_sharing:
        if not (record.description or "").strip():
            violations.append("description must be non-empty when sharing")
        if not record.tags:
            violations.append("tags must be non-empty when sharing")
    return ValidationResult(tuple(violations))


def validate_model_config(config: ModelConfig) -> ValidationResult:
    violations: list[str] = []
    if not config.model_id.strip():
        violations.append("model_id must be non-empty")
    if not TEMPERATURE_MIN <= config.default_temperature <= TEMPERATURE_MAX:
        violations.append("default_temperature out of range")
    if config.endpoint_kind is EndpointKind.REMOTE_CHAT_API and not config.base_url:
        violations.append("remote_chat_api requires base_url")
    if config.endpoint_kind is EndpointKind.SCRIPTED_STUB and config.base_url:
        violations.append("scripted_stub forbids base_url")
    if config.stub_mode is StubMode.MAP and not config.stub_map_path:
        violations.append("stub map mode requires stub_map_path")
    return ValidationResult(tuple(violations))


def derive_prompt_id_from(
    title: str,
    template: str,
    parsing_rule: ParsingRule | None,
    insertion_mode: InsertionMode,
) -> str:
    """Content-derived id: same content fields always hash to the same id."""
    payload = {
        "title": title,
        "template": template,
        "parsing_rule": (
            [parsing_rule.pattern, parsing_rule.replacement] if parsing_rule else None
        ),
        "insertion_mode": InsertionMode(insertion_mode).value,
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return str(uuid.uuid5(ID_NAMESPACE, canonical))


def derive_prompt_id(record: PromptRecord) -> str:
    return derive_prompt_id_from(
        record.title, record.template, record.parsing_rule, record.insertion_mode
    )


def new_prompt(
    title: str,
    template: str,
    *,
    icon: str = "✨",
    temperature: float = DEFAULT_TEMPERATURE,
    parsing_rule: ParsingRule | None = None,
    insertion_mode: InsertionMode = InsertionMode.REPLACE,
    description: str | None = None,
    tags: Iterable[str] = (),
    recommended_models: Iterable[str] = (),
    source_hub_id: str | None = None,
) -> PromptRecord:
    """Build a fresh record with a derived id, normalized tags, and timestamps."""
    now = now_utc()
    return PromptRecord(
        id=derive_prompt_id_from(title, template, parsing_rule, insertion_mode),
        title=title,
        template=template,
        icon=icon,
        temperature=temperature,
        parsing_rule=parsing_rule,
        insertion_mode=InsertionMode(insertion_mode),
        description=description,
        tags=normalize_tags(tags),
        recommended_models=tuple(recommended_models),
        run_count=0,
        created_at=now,
        updated_at=now,
        source_hub_id=source_hub_id,
    )


def record_to_dict(record: PromptRecord) -> dict[str, Any]:
    """Serialize to the prompt file format (UTF-8 JSON, RFC 3339 timestamps)."""
    return {
        "id": record.id,
        "title": record.title,
        "icon": record.icon,
        "template": record.template,
        "temperature": record.temperature,
        "parsing_rule": (
            {"pattern": record.parsing_rule.pattern, "replacement": record.parsing_rule.replacement}
            if record.parsing_rule
            else None
        ),
        "insertion_mode": record.insertion_mode.value,
        "description": record.description,
        "tags": list(record.tags),
        "recommended_models": list(record.recommended_models),
        "run_count": record.run_count,
        "created_at": format_timestamp(record.created_at),
        "updated_at": format_timestamp(record.updated_at),
        "source_hub_id": record.source_hub_id,
    }


def record_from_dict(data: dict[str, Any]) -> PromptRecord:
    """Parse the prompt file format; tolerates missing id/timestamps on input."""
    rule_data = data.get("parsing_rule")
    rule = (
        ParsingRule(pattern=rule_data["pattern"], replacement=rule_data["replacement"])
        if rule_data
        else None
    )
    insertion_mode = InsertionMode(data.get("insertion_mode", InsertionMode.REPLACE.value))
    title = data["title"]
    template = data["template"]
    record_id = data.get("id") or derive_prompt_id_from(title, template, rule, insertion_mode)
    now = now_utc()
    created = parse_timestamp(data["created_at"]) if data.get("created_at") else now
    updated = parse_timestamp(data["updated_at"]) if data.get("updated_at") else created
    return PromptRecord(
        id=record_id,
        title=title,
        template=template,
        icon=data.get("icon", "✨"),
        temperature=float(data.get("temperature", DEFAULT_TEMPERATURE)),
        parsing_rule=rule,
        insertion_mode=insertion_mode,
        description=data.get("description"),
        tags=tuple(data.get("tags", ())),
        recommended_models=tuple(data.get("recommended_models", ())),
        run_count=int(data.get("run_count", 0)),
        created_at=created,
        updated_at=updated,
        source_hub_id=data.get("source_hub_id"),
    )


def dumps_record(record: PromptRecord) -> str:
    return json.dumps(record_to_dict(record), ensure_ascii=False, indent=2) + "\n"


def loads_record(text: str) -> PromptRecord:
    return record_from_dict(json.loads(text))
