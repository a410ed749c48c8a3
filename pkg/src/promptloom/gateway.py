"""Model endpoint adapter: remote chat-completions APIs plus a scripted stub.

Remote wire format is the de facto chat-completions JSON protocol:
``POST {base_url}/chat/completions`` with ``model``, ``temperature``, and a
single user message carrying the rendered prompt; the first choice's message
content is the completion. Retries (default 2, backoff 1 s then 2 s) apply
only to network errors and 429s.

The scripted stub keeps tests offline and reproducible:

* ``echo``   — returns the prompt verbatim
* ``map``    — looks the prompt up in a JSON file of
               ``[{"prompt_sha256": ..., "response": ...}]`` entries; a miss
               is an error so golden tests catch drift instead of asserting
               on empty output
* ``script`` — returns the configured canned responses in order

Prompt and response bodies never reach the logs at default verbosity; they
may carry confidential text.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx

from .errors import ConfigError, PromptLoomError
from .model import (
    TEMPERATURE_MAX,
    TEMPERATURE_MIN,
    EndpointKind,
    ModelConfig,
    StubMode,
    validate_model_config,
)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60.0
DEFAULT_RETRY_BUDGET = 2
DEFAULT_BACKOFF_BASE = 1.0


class GatewayError(PromptLoomError):
    """Base class for completion failures."""


class NetworkError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class RateLimitedError(GatewayError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class ProtocolError(GatewayError):
    pass


class StubMissError(GatewayError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float
    model: ModelConfig
    timeout: float = DEFAULT_TIMEOUT


@dataclass(frozen=True)
class CompletionResult:
    text: str
    model_id: str
    latency: float


@dataclass(frozen=True)
class ModelDescriptor:
    model_id: str
    endpoint_kind: EndpointKind


def list_models(configs: list[ModelConfig]) -> list[ModelDescriptor]:
    """Configured model ids in config order; never touches the network."""
    seen: set[str] = set()
    for config in configs:
        if config.model_id in seen:
            raise ConfigError(f"duplicate model_id {config.model_id!r}")
        seen.add(config.model_id)
    return [ModelDescriptor(c.model_id, c.endpoint_kind) for c in configs]


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class LlmGateway:
    """Sends rendered prompts to a configured endpoint and returns raw text.

    Safe for concurrent calls: the HTTP connection pool is shared, the only
    other mutable state is the script-mode cursor, which is lock-guarded.
    """

    def __init__(
        self,
        retry_budget: int = DEFAULT_RETRY_BUDGET,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        self.retry_budget = retry_budget
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._http = httpx.Client(transport=transport)
        self._script_cursors: dict[str, int] = {}
        self._script_lock = threading.Lock()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> LlmGateway:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        """Run one completion; returns the first choice's text."""
        if not request.prompt:
            raise ValueError("prompt must be non-empty")
        if not TEMPERATURE_MIN <= request.temperature <= TEMPERATURE_MAX:
            raise ValueError("temperature out of range")
        config_result = validate_model_config(request.model)
        if not config_result.ok:
            raise ConfigError("; ".join(config_result.violations))

        started = time.perf_counter()
        if request.model.endpoint_kind is EndpointKind.SCRIPTED_STUB:
            text = self._complete_stub(request)
        else:
            text = self._complete_remote(request)
        latency = time.perf_counter() - started
        return CompletionResult(text=text, model_id=request.model.model_id, latency=latency)

    # -- scripted stub ------------------------------------------------------

    def _complete_stub(self, request: CompletionRequest) -> str:
        model = request.model
        if model.stub_mode is StubMode.ECHO:
            return request.prompt
        if model.stub_mode is StubMode.MAP:
            assert model.stub_map_path is not None  # enforced by config validation
            entries = self._load_stub_map(model.stub_map_path)
            key = prompt_sha256(request.prompt)
            if key not in entries:
                raise StubMissError(f"stub map has no entry for prompt hash {key}")
            return entries[key]
        with self._script_lock:
            cursor = self._script_cursors.get(model.model_id, 0)
            if cursor >= len(model.stub_script):
                raise StubMissError(
                    f"stub script exhausted after {len(model.stub_script)} responses"
                )
            self._script_cursors[model.model_id] = cursor + 1
            return model.stub_script[cursor]

    @staticmethod
    def _load_stub_map(path: str) -> dict[str, str]:
        try:
            with open(path, encoding="utf-8") as handle:
                entries = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read stub map {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"stub map {path} is not valid JSON: {exc}") from exc
        try:
            return {e["prompt_sha256"]: e["response"] for e in entries}
        except (TypeError, KeyError) as exc:
            raise ConfigError(
                f"stub map {path} must be a JSON array of {{prompt_sha256, response}}"
            ) from exc

    # -- remote chat API -----------------------------------------------------

    def _complete_remote(self, request: CompletionRequest) -> str:
        model = request.model
        headers = {}
        if model.api_key_ref:
            api_key = os.environ.get(model.api_key_ref)
            if not api_key:
                raise AuthError(
                    f"API key environment variable {model.api_key_ref} is not set"
                )
            headers["Authorization"] = f"Bearer {api_key}"
        url = model.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": model.model_id,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        }

        attempts = self.retry_budget + 1
        last_error: GatewayError | None = None
        for attempt in range(attempts):
            try:
                return self._post_once(url, payload, headers, request.timeout)
            except (NetworkError, RateLimitedError) as exc:
                last_error = exc
                if attempt + 1 >= attempts:
                    break
                delay = self.backoff_base * (2**attempt)
                if isinstance(exc, RateLimitedError) and exc.retry_after:
                    delay = max(delay, exc.retry_after)
                log.debug("retrying %s after %.1fs (attempt %d)", url, delay, attempt + 1)
                self._sleep(delay)
        assert last_error is not None
        raise last_error

    def _post_once(self, url: str, payload: dict, headers: dict, timeout: float) -> str:
        try:
            response = self._http.post(url, json=payload, headers=headers, timeout=timeout)
        except httpx.TimeoutException as exc:
            raise NetworkError(f"request to {url} timed out") from exc
        except httpx.HTTPError as exc:
            raise NetworkError(f"request to {url} failed: {exc.__class__.__name__}") from exc

        log.debug("POST %s -> %d", url, response.status_code)
        if response.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
        if response.status_code == 429:
            retry_after = _parse_retry_after(response.headers.get("retry-after"))
            raise RateLimitedError("endpoint rate limited (HTTP 429)", retry_after)
        if response.status_code >= 500:
            raise NetworkError(f"endpoint unavailable (HTTP {response.status_code})")
        if response.status_code >= 400:
            raise ProtocolError(f"endpoint rejected request (HTTP {response.status_code})")

        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed completion response from {url}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"completion content is not text ({type(content).__name__})")
        return content


def _parse_retry_after(header: str | None) -> float | None:
    if header is None:
        return None
    try:
        return float(header)
    except ValueError:
        return None
