"""Client for a hub service instance: browse, share, pull, and run reporting.

Run reports are fire-and-forget: they queue into a bounded buffer drained by
a background thread, so a local run never waits on (or fails because of) hub
availability. The buffer drops its oldest report on overflow; popularity is a
soft signal and losing events under outage is acceptable.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from dataclasses import dataclass
from urllib.parse import parse_qs, urlparse

import httpx

from ..errors import NotFoundError, PromptLoomError, ValidationFailedError
from ..library import PromptLibrary
from ..model import (
    PROMPT_ID_RE,
    InsertionMode,
    ParsingRule,
    PromptRecord,
    now_utc,
    record_to_dict,
)
from .storage import HubEntry, entry_from_dict

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0
REPORT_QUEUE_SIZE = 1024


class HubUnavailableError(PromptLoomError):
    """The hub endpoint could not be reached."""


class HubRequestError(PromptLoomError):
    """The hub answered with an error payload."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.status = status
        self.code = code


@dataclass(frozen=True)
class HubSession:
    base_url: str
    timeout: float = DEFAULT_TIMEOUT
    retry_budget: int = 2

    def __post_init__(self) -> None:
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"base_url is not a well-formed http(s) URL: {self.base_url!r}")


def extract_prompt_id(ref: str) -> str:
    """Accept a bare prompt id or a deep-link URL carrying ``?prompt=<id>``."""
    candidate = ref.strip()
    if PROMPT_ID_RE.fullmatch(candidate):
        return candidate
    parsed = urlparse(candidate)
    values = parse_qs(parsed.query).get("prompt", [])
    if len(values) == 1 and PROMPT_ID_RE.fullmatch(values[0]):
        return values[0]
    raise ValueError(f"no prompt id found in {ref!r}")


class HubClient:
    """Thread-safe hub access over HTTP."""

    def __init__(self, session: HubSession, transport: httpx.BaseTransport | None = None):
        self.session = session
        self._http = httpx.Client(
            base_url=session.base_url.rstrip("/"),
            timeout=session.timeout,
            transport=transport,
        )
        self._queue: deque[str] = deque(maxlen=REPORT_QUEUE_SIZE)
        self._queue_cv = threading.Condition()
        self._inflight = 0
        self._stopping = False
        self._worker: threading.Thread | None = None

    def close(self) -> None:
        with self._queue_cv:
            self._stopping = True
            self._queue_cv.notify_all()
        if self._worker is not None:
            self._worker.join(timeout=2.0)
        self._http.close()

    def __enter__(self) -> HubClient:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- request plumbing ---------------------------------------------------

    def _request(self, method: str, path: str, *, retry: bool = False, **kwargs) -> httpx.Response:
        attempts = 1 + (self.session.retry_budget if retry else 0)
        last_exc: Exception | None = None
        for _ in range(attempts):
            try:
                response = self._http.request(method, path, **kwargs)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if response.status_code >= 400:
                payload = _error_payload(response)
                if response.status_code == 404:
                    raise NotFoundError(payload["message"])
                if payload["code"] == "validation-error":
                    raise ValidationFailedError(payload["message"].split("; "))
                raise HubRequestError(response.status_code, payload["code"], payload["message"])
            return response
        raise HubUnavailableError(f"hub unreachable at {self.session.base_url}: {last_exc}")

    # -- operations -----------------------------------------------------------

    def share(self, record: PromptRecord) -> str:
        response = self._request("POST", "/v1/prompts", json=record_to_dict(record))
        return response.json()["id"]

    def get_entry(self, entry_id: str) -> HubEntry:
        response = self._request("GET", f"/v1/prompts/{entry_id}", retry=True)
        return entry_from_dict(response.json())

    def list_entries(
        self,
        tag: str | None = None,
        sort: str = "new",
        limit: int = 20,
        cursor: str | None = None,
    ) -> tuple[list[HubEntry], str | None]:
        params: dict[str, str | int] = {"sort": sort, "limit": limit}
        if tag:
            params["tag"] = tag
        if cursor:
            params["cursor"] = cursor
        response = self._request("GET", "/v1/prompts", params=params, retry=True)
        body = response.json()
        return [entry_from_dict(e) for e in body["entries"]], body["next_cursor"]

    def top_tags(self, limit: int = 10) -> list[tuple[str, int]]:
        response = self._request("GET", "/v1/tags", params={"limit": limit}, retry=True)
        return [(t["tag"], t["count"]) for t in response.json()["tags"]]

    def report(self, entry_id: str, reason: str) -> int:
        response = self._request(
            "POST", f"/v1/prompts/{entry_id}/reports", json={"reason": reason}
        )
        return response.json()["report_count"]

    def pull_to_library(self, entry_id: str, library: PromptLibrary) -> PromptRecord:
        """Copy a hub entry into the local library with provenance attached."""
        entry = self.get_entry(entry_id)
        now = now_utc()
        record = PromptRecord(
            id=entry.id,
            title=entry.title,
            template=entry.template,
            icon=entry.icon,
            temperature=entry.temperature,
            parsing_rule=entry.parsing_rule,
            insertion_mode=entry.insertion_mode,
            description=entry.description,
            tags=entry.tags,
            recommended_models=entry.recommended_models,
            run_count=0,
            created_at=now,
            updated_at=now,
            source_hub_id=entry.id,
        )
        local_id = library.add_prompt(record)
        return library.get_prompt(local_id)

    # -- fire-and-forget run reporting ---------------------------------------

    def report_run_async(self, hub_id: str) -> None:
        """Queue one run report; delivery is best-effort, at most once."""
        with self._queue_cv:
            if self._stopping:
                return
            self._queue.append(hub_id)
            if self._worker is None:
                self._worker = threading.Thread(
                    target=self._drain_reports, name="hub-run-reports", daemon=True
                )
                self._worker.start()
            self._queue_cv.notify()

    def flush_run_reports(self, timeout: float = 5.0) -> bool:
        """Wait until queued reports are delivered or dropped; for tests."""
        with self._queue_cv:
            return self._queue_cv.wait_for(
                lambda: not self._queue and self._inflight == 0, timeout=timeout
            )

    def _drain_reports(self) -> None:
        while True:
            with self._queue_cv:
                self._queue_cv.wait_for(lambda: self._queue or self._stopping)
                if self._stopping and not self._queue:
                    return
                hub_id = self._queue.popleft()
                self._inflight += 1
            try:
                self._http.post(f"/v1/prompts/{hub_id}/runs")
            except httpx.HTTPError as exc:
                log.debug("run report for %s dropped: %s", hub_id, exc)
            finally:
                with self._queue_cv:
                    self._inflight -= 1
                    self._queue_cv.notify_all()


def _error_payload(response: httpx.Response) -> dict:
    try:
        body = response.json()
        return {"code": body["code"], "message": body["message"]}
    except (ValueError, KeyError):
        return {"code": f"http-{response.status_code}", "message": response.text[:200]}
