"""Gateway behavior against the scripted stub and a mocked remote endpoint."""

from __future__ import annotations

import json

import httpx
import pytest

from promptloom.errors import ConfigError
from promptloom.gateway import (
    AuthError,
    CompletionRequest,
    LlmGateway,
    NetworkError,
    ProtocolError,
    RateLimitedError,
    StubMissError,
    list_models,
    prompt_sha256,
)
from promptloom.model import EndpointKind, ModelConfig, StubMode

ECHO = ModelConfig("stub", EndpointKind.SCRIPTED_STUB, stub_mode=StubMode.ECHO)


def remote(base_url="https://llm.example.test/v1", api_key_ref=None):
    return ModelConfig(
        "test-model",
        EndpointKind.REMOTE_CHAT_API,
        base_url=base_url,
        api_key_ref=api_key_ref,
    )


def make_gateway(handler=None, **kwargs):
    transport = httpx.MockTransport(handler) if handler else None
    kwargs.setdefault("sleep", lambda _: None)
    return LlmGateway(transport=transport, **kwargs)


class TestStub:
    def test_echo_returns_prompt(self):
        result = make_gateway().complete(CompletionRequest("xyz", 0.7, ECHO))
        assert result.text == "xyz"
        assert result.model_id == "stub"
        assert result.latency >= 0

    def test_map_lookup(self, tmp_path):
        map_path = tmp_path / "map.json"
        map_path.write_text(
            json.dumps([{"prompt_sha256": prompt_sha256("Fix: a"), "response": "b"}])
        )
        config = ModelConfig(
            "stub-map",
            EndpointKind.SCRIPTED_STUB,
            stub_mode=StubMode.MAP,
            stub_map_path=str(map_path),
        )
        result = make_gateway().complete(CompletionRequest("Fix: a", 0.7, config))
        assert result.text == "b"

    def test_map_miss_is_error(self, tmp_path):
        map_path = tmp_path / "map.json"
        map_path.write_text("[]")
        config = ModelConfig(
            "stub-map",
            EndpointKind.SCRIPTED_STUB,
            stub_mode=StubMode.MAP,
            stub_map_path=str(map_path),
        )
        with pytest.raises(StubMissError):
            make_gateway().complete(CompletionRequest("anything", 0.7, config))

    def test_script_mode_plays_responses_in_order(self):
        config = ModelConfig(
            "stub-script",
            EndpointKind.SCRIPTED_STUB,
            stub_mode=StubMode.SCRIPT,
            stub_script=("first", "second"),
        )
        gateway = make_gateway()
        assert gateway.complete(CompletionRequest("p", 0.7, config)).text == "first"
        assert gateway.complete(CompletionRequest("p", 0.7, config)).text == "second"
        with pytest.raises(StubMissError):
            gateway.complete(CompletionRequest("p", 0.7, config))

    def test_stub_is_deterministic(self):
        gateway = make_gateway()
        request = CompletionRequest("same prompt", 0.7, ECHO)
        assert gateway.complete(request).text == gateway.complete(request).text

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            make_gateway().complete(CompletionRequest("", 0.7, ECHO))

    def test_temperature_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            make_gateway().complete(CompletionRequest("p", 2.5, ECHO))


class TestRemote:
    def test_happy_path(self):
        def handler(request: httpx.Request) -> httpx.Response:
            assert request.url.path.endswith("/chat/completions")
            body = json.loads(request.content)
            assert body["messages"] == [{"role": "user", "content": "hello"}]
            assert body["model"] == "test-model"
            assert body["temperature"] == 0.3
            return httpx.Response(
                200, json={"choices": [{"message": {"content": "world"}}]}
            )

        result = make_gateway(handler).complete(CompletionRequest("hello", 0.3, remote()))
        assert result.text == "world"

    def test_auth_header_from_env(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "sk-secret")
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json={"choices": [{"message": {"content": "x"}}]})

        make_gateway(handler).complete(
            CompletionRequest("p", 0.7, remote(api_key_ref="TEST_LLM_KEY"))
        )
        assert seen["auth"] == "Bearer sk-secret"

    def test_missing_api_key_env(self, monkeypatch):
        monkeypatch.delenv("TEST_LLM_KEY", raising=False)
        with pytest.raises(AuthError):
            make_gateway().complete(
                CompletionRequest("p", 0.7, remote(api_key_ref="TEST_LLM_KEY"))
            )

    def test_http_401_maps_to_auth_error(self):
        handler = lambda _: httpx.Response(401, json={})
        with pytest.raises(AuthError):
            make_gateway(handler).complete(CompletionRequest("p", 0.7, remote()))

    def test_http_429_maps_to_rate_limited_with_retry_after(self):
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(1)
            return httpx.Response(429, headers={"retry-after": "7"}, json={})

        gateway = make_gateway(handler)
        with pytest.raises(RateLimitedError) as exc_info:
            gateway.complete(CompletionRequest("p", 0.7, remote()))
        assert exc_info.value.retry_after == 7.0
        # default budget: initial call + 2 retries
        assert len(calls) == 3

    def test_network_error_retries_then_surfaces(self):
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(1)
            raise httpx.ConnectError("refused")

        sleeps = []
        gateway = LlmGateway(transport=httpx.MockTransport(handler), sleep=sleeps.append)
        with pytest.raises(NetworkError):
            gateway.complete(CompletionRequest("p", 0.7, remote()))
        assert len(calls) == 3
        assert sleeps == [1.0, 2.0]

    def test_retry_recovers(self):
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(1)
            if len(calls) == 1:
                raise httpx.ConnectError("flaky")
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        result = make_gateway(handler).complete(CompletionRequest("p", 0.7, remote()))
        assert result.text == "ok"
        assert len(calls) == 2

    def test_protocol_errors_do_not_retry(self):
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(1)
            return httpx.Response(200, json={"unexpected": True})

        with pytest.raises(ProtocolError):
            make_gateway(handler).complete(CompletionRequest("p", 0.7, remote()))
        assert len(calls) == 1

    def test_http_500_maps_to_network_error(self):
        handler = lambda _: httpx.Response(500, json={})
        with pytest.raises(NetworkError):
            make_gateway(handler, retry_budget=0).complete(
                CompletionRequest("p", 0.7, remote())
            )


class TestListModels:
    def test_orders_follow_config(self):
        configs = [ECHO, remote()]
        descriptors = list_models(configs)
        assert [d.model_id for d in descriptors] == ["stub", "test-model"]
        assert descriptors[0].endpoint_kind is EndpointKind.SCRIPTED_STUB

    def test_empty(self):
        assert list_models([]) == []

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ConfigError):
            list_models([ECHO, ECHO])
