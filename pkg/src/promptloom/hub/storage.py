"""Durable hub storage behind a small interface.

The default backend is embedded SQLite in WAL mode (write-ahead durability,
atomic counters). The interface is narrow enough that a cloud table adapter
can replace it without touching the service layer.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Protocol

from ..model import (
    InsertionMode,
    ParsingRule,
    format_timestamp,
    parse_timestamp,
)

SORT_NEW = "new"
SORT_POPULAR = "popular"


@dataclass(frozen=True)
class HubEntry:
    """A community-shared prompt with popularity and moderation counters."""

    id: str
    title: str
    icon: str
    template: str
    parsing_rule: ParsingRule | None
    insertion_mode: InsertionMode
    temperature: float
    description: str
    tags: tuple[str, ...]
    recommended_models: tuple[str, ...]
    run_count: int
    shared_at: datetime
    report_count: int


def entry_to_dict(entry: HubEntry) -> dict:
    return {
        "id": entry.id,
        "title": entry.title,
        "icon": entry.icon,
        "template": entry.template,
        "parsing_rule": (
            {"pattern": entry.parsing_rule.pattern, "replacement": entry.parsing_rule.replacement}
            if entry.parsing_rule
            else None
        ),
        "insertion_mode": entry.insertion_mode.value,
        "temperature": entry.temperature,
        "description": entry.description,
        "tags": list(entry.tags),
        "recommended_models": list(entry.recommended_models),
        "run_count": entry.run_count,
        "shared_at": format_timestamp(entry.shared_at),
        "report_count": entry.report_count,
    }


def entry_from_dict(data: dict) -> HubEntry:
    rule_data = data.get("parsing_rule")
    return HubEntry(
        id=data["id"],
        title=data["title"],
        icon=data.get("icon", "✨"),
        template=data["template"],
        parsing_rule=(
            ParsingRule(rule_data["pattern"], rule_data["replacement"]) if rule_data else None
        ),
        insertion_mode=InsertionMode(data.get("insertion_mode", "replace")),
        temperature=float(data.get("temperature", 0.7)),
        description=data["description"],
        tags=tuple(data.get("tags", ())),
        recommended_models=tuple(data.get("recommended_models", ())),
        run_count=int(data.get("run_count", 0)),
        shared_at=parse_timestamp(data["shared_at"]),
        report_count=int(data.get("report_count", 0)),
    )


class HubStore(Protocol):
    """Persistence operations the hub service relies on."""

    def insert_entry(self, entry: HubEntry) -> bool: ...

    def get(self, entry_id: str) -> HubEntry | None: ...

    def list_visible(
        self,
        tag: str | None,
        sort: str,
        limit: int,
        after: tuple[str, str] | None,
        hidden_threshold: int,
    ) -> list[HubEntry]: ...

    def increment_run(self, entry_id: str) -> int | None: ...

    def add_report(self, entry_id: str, reason: str, created_at: datetime) -> int | None: ...

    def top_tags(self, limit: int, hidden_threshold: int) -> list[tuple[str, int]]: ...

    def close(self) -> None: ...


class SqliteHubStore:
    """Embedded single-node store; one connection serialized by a lock."""

    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._conn.executescript(
                """
                CREATE TABLE IF NOT EXISTS entries (
                    id TEXT PRIMARY KEY,
                    doc TEXT NOT NULL,
                    run_count INTEGER NOT NULL DEFAULT 0,
                    shared_at TEXT NOT NULL,
                    report_count INTEGER NOT NULL DEFAULT 0
                );
                CREATE TABLE IF NOT EXISTS entry_tags (
                    entry_id TEXT NOT NULL REFERENCES entries(id),
                    tag TEXT NOT NULL,
                    PRIMARY KEY (entry_id, tag)
                );
                CREATE TABLE IF NOT EXISTS reports (
                    report_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    entry_id TEXT NOT NULL REFERENCES entries(id),
                    reason TEXT NOT NULL,
                    created_at TEXT NOT NULL
                );
                CREATE INDEX IF NOT EXISTS idx_entries_shared_at ON entries(shared_at);
                CREATE INDEX IF NOT EXISTS idx_entries_run_count ON entries(run_count);
                CREATE INDEX IF NOT EXISTS idx_entry_tags_tag ON entry_tags(tag);
                """
            )
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def insert_entry(self, entry: HubEntry) -> bool:
        """Store a new entry; False when the id already exists (idempotent share)."""
        doc = json.dumps(entry_to_dict(entry), ensure_ascii=False)
        with self._lock:
            cursor = self._conn.execute(
                "INSERT OR IGNORE INTO entries (id, doc, run_count, shared_at, report_count)"
                " VALUES (?, ?, ?, ?, ?)",
                (entry.id, doc, entry.run_count, format_timestamp(entry.shared_at), 0),
            )
            if cursor.rowcount == 0:
                return False
            self._conn.executemany(
                "INSERT OR IGNORE INTO entry_tags (entry_id, tag) VALUES (?, ?)",
                [(entry.id, tag) for tag in entry.tags],
            )
            self._conn.commit()
            return True

    def _row_to_entry(self, row: sqlite3.Row) -> HubEntry:
        data = json.loads(row["doc"])
        data["run_count"] = row["run_count"]
        data["report_count"] = row["report_count"]
        data["shared_at"] = row["shared_at"]
        return entry_from_dict(data)

    def get(self, entry_id: str) -> HubEntry | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM entries WHERE id = ?", (entry_id,)
            ).fetchone()
        return self._row_to_entry(row) if row else None

    def list_visible(
        self,
        tag: str | None,
        sort: str,
        limit: int,
        after: tuple[str, str] | None,
        hidden_threshold: int,
    ) -> list[HubEntry]:
        sort_column = "run_count" if sort == SORT_POPULAR else "shared_at"
        clauses = ["report_count < ?"]
        params: list[object] = [hidden_threshold]
        if tag is not None:
            clauses.append("id IN (SELECT entry_id FROM entry_tags WHERE tag = ?)")
            params.append(tag)
        if after is not None:
            after_value: object = int(after[0]) if sort == SORT_POPULAR else after[0]
            clauses.append(f"({sort_column} < ? OR ({sort_column} = ? AND id > ?))")
            params.extend([after_value, after_value, after[1]])
        query = (
            f"SELECT * FROM entries WHERE {' AND '.join(clauses)}"
            f" ORDER BY {sort_column} DESC, id ASC LIMIT ?"
        )
        params.append(limit)
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [self._row_to_entry(row) for row in rows]

    def increment_run(self, entry_id: str) -> int | None:
        with self._lock:
            row = self._conn.execute(
                "UPDATE entries SET run_count = run_count + 1 WHERE id = ?"
                " RETURNING run_count",
                (entry_id,),
            ).fetchone()
            self._conn.commit()
        return row["run_count"] if row else None

    def add_report(self, entry_id: str, reason: str, created_at: datetime) -> int | None:
        with self._lock:
            row = self._conn.execute(
                "UPDATE entries SET report_count = report_count + 1 WHERE id = ?"
                " RETURNING report_count",
                (entry_id,),
            ).fetchone()
            if row is None:
                return None
            self._conn.execute(
                "INSERT INTO reports (entry_id, reason, created_at) VALUES (?, ?, ?)",
                (entry_id, reason, format_timestamp(created_at)),
            )
            self._conn.commit()
        return row["report_count"]

    def top_tags(self, limit: int, hidden_threshold: int) -> list[tuple[str, int]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT t.tag AS tag, COUNT(*) AS n FROM entry_tags t"
                " JOIN entries e ON e.id = t.entry_id"
                " WHERE e.report_count < ?"
                " GROUP BY t.tag ORDER BY n DESC, t.tag ASC LIMIT ?",
                (hidden_threshold, limit),
            ).fetchall()
        return [(row["tag"], row["n"]) for row in rows]
