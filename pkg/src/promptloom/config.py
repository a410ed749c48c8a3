"""Runtime configuration for the CLI and local API host.

Config lives at ``<library_root>/config.json`` and can be overridden with
``PROMPTLOOM_*`` environment variables. API keys are never part of the
config or flags; models reference them by environment variable name only.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .model import EndpointKind, ModelConfig, StubMode, validate_model_config

DEFAULT_PORT = 7870
ENV_LIBRARY_ROOT = "PROMPTLOOM_HOME"
ENV_HUB_URL = "PROMPTLOOM_HUB_URL"
ENV_PORT = "PROMPTLOOM_PORT"
ENV_DEFAULT_MODEL = "PROMPTLOOM_DEFAULT_MODEL"


def default_models() -> tuple[ModelConfig, ...]:
    return (ModelConfig("stub", EndpointKind.SCRIPTED_STUB, stub_mode=StubMode.ECHO),)


@dataclass(frozen=True)
class CliConfig:
    library_root: Path
    hub_url: str | None = None
    models: tuple[ModelConfig, ...] = field(default_factory=default_models)
    default_model: str = "stub"
    local_api_port: int = DEFAULT_PORT

    def model_by_id(self, model_id: str) -> ModelConfig:
        for model in self.models:
            if model.model_id == model_id:
                return model
        raise ConfigError(f"model {model_id!r} is not configured")


def _model_from_dict(data: dict[str, Any]) -> ModelConfig:
    return ModelConfig(
        model_id=data["model_id"],
        endpoint_kind=EndpointKind(data["endpoint_kind"]),
        base_url=data.get("base_url"),
        api_key_ref=data.get("api_key_ref"),
        default_temperature=float(data.get("default_temperature", 0.7)),
        stub_mode=StubMode(data.get("stub_mode", "echo")),
        stub_map_path=data.get("stub_map_path"),
        stub_script=tuple(data.get("stub_script", ())),
    )


def _model_to_dict(model: ModelConfig) -> dict[str, Any]:
    data: dict[str, Any] = {
        "model_id": model.model_id,
        "endpoint_kind": model.endpoint_kind.value,
        "default_temperature": model.default_temperature,
    }
    if model.base_url:
        data["base_url"] = model.base_url
    if model.api_key_ref:
        data["api_key_ref"] = model.api_key_ref
    if model.endpoint_kind is EndpointKind.SCRIPTED_STUB:
        data["stub_mode"] = model.stub_mode.value
        if model.stub_map_path:
            data["stub_map_path"] = model.stub_map_path
        if model.stub_script:
            data["stub_script"] = list(model.stub_script)
    return data


def load_config(
    library_root: str | Path | None = None,
    env: Mapping[str, str] = os.environ,
) -> CliConfig:
    """Read config.json under the library root, then apply env overrides."""
    root = Path(
        library_root
        or env.get(ENV_LIBRARY_ROOT)
        or Path.home() / ".promptloom"
    ).expanduser()

    data: dict[str, Any] = {}
    config_path = root / "config.json"
    if config_path.exists():
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}") from exc

    models_data = data.get("models")
    models = (
        tuple(_model_from_dict(m) for m in models_data) if models_data else default_models()
    )
    for model in models:
        result = validate_model_config(model)
        if not result.ok:
            raise ConfigError(f"model {model.model_id!r}: {'; '.join(result.violations)}")

    hub_url = env.get(ENV_HUB_URL) or data.get("hub_url")
    default_model = env.get(ENV_DEFAULT_MODEL) or data.get("default_model") or models[0].model_id
    port_text = env.get(ENV_PORT) or data.get("local_api_port") or DEFAULT_PORT
    try:
        port = int(port_text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid port {port_text!r}") from exc

    config = CliConfig(
        library_root=root,
        hub_url=hub_url,
        models=models,
        default_model=default_model,
        local_api_port=port,
    )
    if not any(m.model_id == config.default_model for m in config.models):
        raise ConfigError(
            f"default_model {config.default_model!r} is not among configured models"
        )
    return config


def save_config(config: CliConfig) -> Path:
    config.library_root.mkdir(parents=True, exist_ok=True)
    path = config.library_root / "config.json"
    payload = {
        "hub_url": config.hub_url,
        "default_model": config.default_model,
        "local_api_port": config.local_api_port,
        "models": [_model_to_dict(m) for m in config.models],
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path
