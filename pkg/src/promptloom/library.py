"""Local persistent prompt store: search, sort, favorite slots, run counts.

Layout on disk: ``<root>/prompts/<id>.json`` (one document per prompt, see
the record file format) plus ``<root>/slots.json`` for the three favorite
slots. Every mutation writes temp-then-rename so a crash never leaves a
half-written file, and holds an advisory lock on ``<root>/.lock`` so two
processes cannot interleave writes.
"""

from __future__ import annotations

import dataclasses
import fcntl
import json
import logging
import os
import tempfile
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import (
    DuplicatePromptError,
    NotFoundError,
    StorageError,
    ValidationFailedError,
)
from .model import (
    PromptRecord,
    derive_prompt_id,
    now_utc,
    record_from_dict,
    record_to_dict,
    validate_prompt,
)

log = logging.getLogger(__name__)

SLOT_COUNT = 3
SORT_KEYS = ("name", "recency", "run_count")

# Fields a caller may change through update_prompt; identity and counters are
# managed by the library itself.
UPDATABLE_FIELDS = frozenset(
    {
        "title",
        "icon",
        "template",
        "temperature",
        "parsing_rule",
        "insertion_mode",
        "description",
        "tags",
        "recommended_models",
    }
)


class InvalidSlotError(StorageError):
    """Favorite slot index outside 0..2."""


@dataclasses.dataclass(frozen=True)
class LibraryState:
    """Snapshot of the whole library; favorite_slots always has length 3."""

    prompts: dict[str, PromptRecord]
    favorite_slots: tuple[str | None, str | None, str | None]


class PromptLibrary:
    """Single-writer, multi-reader store of prompt records under one directory.

    run_reporter, when set, is called with the source hub id after every
    successful run of a pulled prompt; failures in the reporter never
    propagate to the caller.
    """

    def __init__(self, root: str | Path, run_reporter: Callable[[str], None] | None = None):
        self.root = Path(root)
        self.prompts_dir = self.root / "prompts"
        self.slots_path = self.root / "slots.json"
        self.run_reporter = run_reporter
        self._mutex = threading.RLock()
        self.prompts_dir.mkdir(parents=True, exist_ok=True)
        self._prompts: dict[str, PromptRecord] = {}
        self._slots: list[str | None] = [None] * SLOT_COUNT
        self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        for path in sorted(self.prompts_dir.glob("*.json")):
            try:
                record = record_from_dict(json.loads(path.read_text(encoding="utf-8")))
            except (ValueError, KeyError) as exc:
                raise StorageError(f"corrupt prompt file {path}: {exc}") from exc
            self._prompts[record.id] = record
        if self.slots_path.exists():
            try:
                data = json.loads(self.slots_path.read_text(encoding="utf-8"))
                slots = data["favorite_slots"]
            except (ValueError, KeyError) as exc:
                raise StorageError(f"corrupt slots file {self.slots_path}: {exc}") from exc
            if len(slots) != SLOT_COUNT:
                raise StorageError(f"slots file must list exactly {SLOT_COUNT} slots")
            self._slots = [s if s in self._prompts else None for s in slots]

    @contextmanager
    def _locked(self) -> Iterator[None]:
        """In-process mutex plus a cross-process advisory file lock."""
        with self._mutex:
            lock_path = self.root / ".lock"
            with open(lock_path, "w") as lock_file:
                fcntl.flock(lock_file, fcntl.LOCK_EX)
                try:
                    yield
                finally:
                    fcntl.flock(lock_file, fcntl.LOCK_UN)

    def _write_json(self, path: Path, payload: Any) -> None:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(payload, handle, ensure_ascii=False, indent=2)
                handle.write("\n")
            os.replace(tmp_name, path)
        except OSError as exc:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise StorageError(f"could not write {path}: {exc}") from exc

    def _persist_record(self, record: PromptRecord) -> None:
        self._write_json(self.prompts_dir / f"{record.id}.json", record_to_dict(record))

    def _persist_slots(self) -> None:
        self._write_json(self.slots_path, {"favorite_slots": list(self._slots)})

    # -- operations -------------------------------------------------------

    def add_prompt(self, record: PromptRecord) -> str:
        result = validate_prompt(record)
        if not result.ok:
            raise ValidationFailedError(result.violations)
        derived = derive_prompt_id(record)
        with self._locked():
            if derived in self._prompts:
                raise DuplicatePromptError(f"identical prompt already stored as {derived}")
            now = now_utc()
            stored = dataclasses.replace(record, id=derived, created_at=now, updated_at=now)
            self._prompts[derived] = stored
            self._persist_record(stored)
        return derived

    def get_prompt(self, prompt_id: str) -> PromptRecord:
        try:
            return self._prompts[prompt_id]
        except KeyError:
            raise NotFoundError(f"prompt not found: {prompt_id}") from None

    def find_by_prefix(self, prefix: str) -> PromptRecord:
        """Resolve a full id or an unambiguous id prefix."""
        if prefix in self._prompts:
            return self._prompts[prefix]
        matches = [r for pid, r in self._prompts.items() if pid.startswith(prefix)]
        if not matches:
            raise NotFoundError("prompt not found")
        if len(matches) > 1:
            raise NotFoundError(f"ambiguous prompt id prefix {prefix!r}")
        return matches[0]

    def update_prompt(self, prompt_id: str, changes: dict[str, Any]) -> PromptRecord:
        """Apply field changes; the record keeps its library id and run count."""
        unknown = set(changes) - UPDATABLE_FIELDS
        if unknown:
            raise ValidationFailedError([f"field not updatable: {name}" for name in sorted(unknown)])
        with self._locked():
            current = self.get_prompt(prompt_id)
            updated = dataclasses.replace(current, **changes, updated_at=now_utc())
            result = validate_prompt(updated)
            if not result.ok:
                raise ValidationFailedError(result.violations)
            self._prompts[prompt_id] = updated
            self._persist_record(updated)
            return updated

    def delete_prompt(self, prompt_id: str) -> None:
        with self._locked():
            if prompt_id not in self._prompts:
                raise NotFoundError(f"prompt not found: {prompt_id}")
            del self._prompts[prompt_id]
            try:
                (self.prompts_dir / f"{prompt_id}.json").unlink()
            except FileNotFoundError:
                pass
            if prompt_id in self._slots:
                self._slots = [None if s == prompt_id else s for s in self._slots]
                self._persist_slots()

    def list_prompts(self) -> list[PromptRecord]:
        return self.sort_prompts("name")

    def search_prompts(self, query: str) -> list[PromptRecord]:
        """Case-insensitive substring match over title, description, template."""
        needle = query.strip().lower()
        records = self._prompts.values()
        if not needle:
            matched = list(records)
        else:
            matched = [
                r
                for r in records
                if needle in r.title.lower()
                or needle in (r.description or "").lower()
                or needle in r.template.lower()
            ]
        return sorted(matched, key=lambda r: (r.title.lower(), r.id))

    def sort_prompts(self, key: str) -> list[PromptRecord]:
        records = list(self._prompts.values())
        if key == "name":
            return sorted(records, key=lambda r: (r.title.lower(), r.id))
        if key == "recency":
            return sorted(records, key=lambda r: (-r.updated_at.timestamp(), r.id))
        if key == "run_count":
            return sorted(records, key=lambda r: (-r.run_count, r.id))
        raise ValueError(f"unknown sort key {key!r}; expected one of {SORT_KEYS}")

    def set_favorite_slot(self, slot: int, prompt_id: str) -> LibraryState:
        """Place a prompt in one of the three slots; a prompt holds at most one."""
        if not 0 <= slot < SLOT_COUNT:
            raise InvalidSlotError(f"invalid slot {slot}; expected 0..{SLOT_COUNT - 1}")
        with self._locked():
            if prompt_id not in self._prompts:
                raise NotFoundError(f"prompt not found: {prompt_id}")
            self._slots = [None if s == prompt_id else s for s in self._slots]
            self._slots[slot] = prompt_id
            self._persist_slots()
            return self.state()

    def clear_favorite_slot(self, slot: int) -> LibraryState:
        if not 0 <= slot < SLOT_COUNT:
            raise InvalidSlotError(f"invalid slot {slot}; expected 0..{SLOT_COUNT - 1}")
        with self._locked():
            self._slots[slot] = None
            self._persist_slots()
            return self.state()

    def slot_prompt(self, slot: int) -> PromptRecord:
        if not 0 <= slot < SLOT_COUNT:
            raise InvalidSlotError(f"invalid slot {slot}; expected 0..{SLOT_COUNT - 1}")
        prompt_id = self._slots[slot]
        if prompt_id is None:
            raise NotFoundError(f"favorite slot {slot} is empty")
        return self._prompts[prompt_id]

    def record_run(self, prompt_id: str) -> int:
        """Increment the run counter by exactly one and persist it."""
        with self._locked():
            current = self.get_prompt(prompt_id)
            updated = dataclasses.replace(current, run_count=current.run_count + 1)
            self._prompts[prompt_id] = updated
            self._persist_record(updated)
            new_count = updated.run_count
            source_hub_id = updated.source_hub_id
        if source_hub_id and self.run_reporter is not None:
            try:
                self.run_reporter(source_hub_id)
            except Exception:
                log.debug("run reporter failed for %s", source_hub_id, exc_info=True)
        return new_count

    def state(self) -> LibraryState:
        slots = list(self._slots) + [None] * SLOT_COUNT
        return LibraryState(
            prompts=dict(self._prompts),
            favorite_slots=(slots[0], slots[1], slots[2]),
        )
