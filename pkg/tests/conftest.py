"""Shared fixtures: an in-process hub server over a real socket."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import pytest
import uvicorn

from promptloom.hub.api import create_hub_app
from promptloom.hub.service import HubService
from promptloom.hub.storage import SqliteHubStore


@dataclass
class HubHandle:
    base_url: str
    service: HubService


class ServerThread:
    """Runs an ASGI app under uvicorn on an ephemeral port in this process."""

    def __init__(self, app):
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> str:
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)


@pytest.fixture
def hub_server():
    store = SqliteHubStore(":memory:")
    service = HubService(store)
    server = ServerThread(create_hub_app(service, rate_limit_per_minute=None))
    base_url = server.start()
    yield HubHandle(base_url=base_url, service=service)
    server.stop()
    store.close()
