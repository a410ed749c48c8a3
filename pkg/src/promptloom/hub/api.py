"""HTTP+JSON wire layer for the hub service.

Routes::

    POST /v1/prompts                   share a prompt, returns {"id": ...}
    GET  /v1/prompts?tag=&sort=&limit=&cursor=
    GET  /v1/prompts/{id}
    POST /v1/prompts/{id}/runs         returns {"run_count": ...}
    POST /v1/prompts/{id}/reports      body {"reason": ...}
    GET  /v1/tags?limit=

Errors are JSON ``{code, message}`` with conventional status codes. There is
no authentication; a per-client-address rate limit guards against abuse.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict, deque

from fastapi import APIRouter, FastAPI, Request, Response
from fastapi.responses import JSONResponse

from ..errors import NotFoundError, ValidationFailedError
from ..model import record_from_dict
from .service import BadRequestError, HubService
from .storage import entry_to_dict

DEFAULT_RATE_LIMIT_PER_MINUTE = 60


class RateLimiter:
    """Sliding one-minute window per client address; None disables limiting."""

    def __init__(self, per_minute: int | None):
        self.per_minute = per_minute
        self._events: dict[str, deque[float]] = defaultdict(deque)
        self._lock = threading.Lock()

    def allow(self, client: str) -> bool:
        if not self.per_minute:
            return True
        now = time.monotonic()
        with self._lock:
            window = self._events[client]
            while window and window[0] <= now - 60.0:
                window.popleft()
            if len(window) >= self.per_minute:
                return False
            window.append(now)
            return True


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def hub_router(service: HubService) -> APIRouter:
    router = APIRouter(prefix="/v1")

    @router.post("/prompts")
    def share(payload: dict) -> dict:
        try:
            record = record_from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequestError(f"malformed prompt payload: {exc}") from exc
        return {"id": service.share(record)}

    @router.get("/prompts")
    def list_entries(
        tag: str | None = None,
        sort: str = "new",
        limit: int = 20,
        cursor: str | None = None,
    ) -> dict:
        page = service.list(tag=tag, sort=sort, limit=limit, cursor=cursor)
        return {
            "entries": [entry_to_dict(e) for e in page.entries],
            "next_cursor": page.next_cursor,
        }

    @router.get("/prompts/{entry_id}")
    def get_entry(entry_id: str) -> dict:
        return entry_to_dict(service.get(entry_id))

    @router.post("/prompts/{entry_id}/runs")
    def record_run(entry_id: str) -> dict:
        return {"run_count": service.record_run(entry_id)}

    @router.post("/prompts/{entry_id}/reports")
    def report(entry_id: str, payload: dict) -> dict:
        reason = payload.get("reason", "")
        if not isinstance(reason, str):
            raise BadRequestError("reason must be a string")
        return {"report_count": service.report(entry_id, reason)}

    @router.get("/tags")
    def top_tags(limit: int = 10) -> dict:
        return {"tags": [{"tag": tag, "count": count} for tag, count in service.top_tags(limit)]}

    return router


def install_hub_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(ValidationFailedError)
    async def _validation(request: Request, exc: ValidationFailedError) -> Response:
        return _error(400, "validation-error", "; ".join(exc.violations))

    @app.exception_handler(BadRequestError)
    async def _bad_request(request: Request, exc: BadRequestError) -> Response:
        return _error(400, "bad-request", str(exc))

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError) -> Response:
        return _error(404, "not-found", str(exc))


def create_hub_app(
    service: HubService,
    rate_limit_per_minute: int | None = DEFAULT_RATE_LIMIT_PER_MINUTE,
) -> FastAPI:
    app = FastAPI(title="prompt hub", docs_url=None, redoc_url=None)
    limiter = RateLimiter(rate_limit_per_minute)

    @app.middleware("http")
    async def rate_limit(request: Request, call_next):
        client = request.client.host if request.client else "unknown"
        if not limiter.allow(client):
            return _error(429, "rate-limited", "too many requests; slow down")
        return await call_next(request)

    install_hub_error_handlers(app)
    app.include_router(hub_router(service))
    return app
