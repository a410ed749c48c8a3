"""Hub service core: share, browse, fetch, run counting, and moderation.

Entries are content-addressed (share is idempotent) and ranked either by
recency or by run-count popularity. Entries reported at least
``hidden_threshold`` times disappear from listings and tag counts but stay
fetchable by id, so moderation evidence is preserved rather than deleted.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass

from ..errors import NotFoundError, PromptLoomError, ValidationFailedError
from ..model import (
    PROMPT_ID_RE,
    PromptRecord,
    derive_prompt_id,
    format_timestamp,
    now_utc,
    validate_prompt,
)
from .storage import SORT_NEW, SORT_POPULAR, HubEntry, HubStore

DEFAULT_HIDDEN_THRESHOLD = 10
MAX_LIST_LIMIT = 100
MAX_TAG_LIMIT = 50
MAX_REPORT_REASON = 2000

SORTS = (SORT_NEW, SORT_POPULAR)


class BadRequestError(PromptLoomError):
    """Malformed id, out-of-range limit, or oversized payload."""


class InvalidCursorError(BadRequestError):
    """Cursor token is garbage or belongs to a different query."""


@dataclass(frozen=True)
class HubPage:
    entries: list[HubEntry]
    next_cursor: str | None


def _encode_cursor(sort: str, tag: str | None, entry: HubEntry) -> str:
    sort_value = (
        str(entry.run_count) if sort == SORT_POPULAR else format_timestamp(entry.shared_at)
    )
    payload = json.dumps({"sort": sort, "tag": tag, "key": [sort_value, entry.id]})
    return base64.urlsafe_b64encode(payload.encode("utf-8")).decode("ascii")


def _decode_cursor(cursor: str, sort: str, tag: str | None) -> tuple[str, str]:
    try:
        payload = json.loads(base64.urlsafe_b64decode(cursor.encode("ascii")))
        cursor_sort = payload["sort"]
        cursor_tag = payload["tag"]
        sort_value, entry_id = payload["key"]
    except (ValueError, KeyError, TypeError, binascii.Error) as exc:
        raise InvalidCursorError("cursor is not decodable") from exc
    if cursor_sort != sort or cursor_tag != tag:
        raise InvalidCursorError("cursor does not match this query")
    if not isinstance(sort_value, str) or not isinstance(entry_id, str):
        raise InvalidCursorError("cursor key is malformed")
    return sort_value, entry_id


class HubService:
    """All hub operations over a pluggable store."""

    def __init__(self, store: HubStore, hidden_threshold: int = DEFAULT_HIDDEN_THRESHOLD):
        self.store = store
        self.hidden_threshold = hidden_threshold

    def share(self, record: PromptRecord) -> str:
        """Store a shareable prompt under its content-derived id; idempotent."""
        result = validate_prompt(record, for_sharing=True)
        if not result.ok:
            raise ValidationFailedError(result.violations)
        entry_id = derive_prompt_id(record)
        entry = HubEntry(
            id=entry_id,
            title=record.title,
            icon=record.icon,
            template=record.template,
            parsing_rule=record.parsing_rule,
            insertion_mode=record.insertion_mode,
            temperature=record.temperature,
            description=record.description or "",
            tags=record.tags,
            recommended_models=record.recommended_models,
            run_count=0,
            shared_at=now_utc(),
            report_count=0,
        )
        self.store.insert_entry(entry)
        return entry_id

    def get(self, entry_id: str) -> HubEntry:
        if not PROMPT_ID_RE.fullmatch(entry_id):
            raise BadRequestError(f"malformed prompt id: {entry_id!r}")
        entry = self.store.get(entry_id)
        if entry is None:
            raise NotFoundError(f"no hub entry with id {entry_id}")
        return entry

    def list(
        self,
        tag: str | None = None,
        sort: str = SORT_NEW,
        limit: int = 20,
        cursor: str | None = None,
    ) -> HubPage:
        if sort not in SORTS:
            raise BadRequestError(f"sort must be one of {SORTS}")
        if not 1 <= limit <= MAX_LIST_LIMIT:
            raise BadRequestError(f"limit must be between 1 and {MAX_LIST_LIMIT}")
        after = _decode_cursor(cursor, sort, tag) if cursor else None
        entries = self.store.list_visible(
            tag, sort, limit + 1, after, self.hidden_threshold
        )
        if len(entries) > limit:
            entries = entries[:limit]
            next_cursor = _encode_cursor(sort, tag, entries[-1])
        else:
            next_cursor = None
        return HubPage(entries=entries, next_cursor=next_cursor)

    def record_run(self, entry_id: str) -> int:
        if not PROMPT_ID_RE.fullmatch(entry_id):
            raise BadRequestError(f"malformed prompt id: {entry_id!r}")
        new_count = self.store.increment_run(entry_id)
        if new_count is None:
            raise NotFoundError(f"no hub entry with id {entry_id}")
        return new_count

    def report(self, entry_id: str, reason: str) -> int:
        if not PROMPT_ID_RE.fullmatch(entry_id):
            raise BadRequestError(f"malformed prompt id: {entry_id!r}")
        if len(reason) > MAX_REPORT_REASON:
            raise BadRequestError(f"reason must be at most {MAX_REPORT_REASON} characters")
        new_count = self.store.add_report(entry_id, reason, now_utc())
        if new_count is None:
            raise NotFoundError(f"no hub entry with id {entry_id}")
        return new_count

    def top_tags(self, limit: int = 10) -> list[tuple[str, int]]:
        if not 1 <= limit <= MAX_TAG_LIMIT:
            raise BadRequestError(f"limit must be between 1 and {MAX_TAG_LIMIT}")
        return self.store.top_tags(limit, self.hidden_threshold)
