"""Server configuration: defaults < config file < environment < CLI flags."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from ..errors import ValidationError

ENV_DATA_DIR = "GEOLAB_DATA_DIR"


@dataclass
class ServerConfig:
    listen_address: str = "127.0.0.1"
    port: int = 8750
    data_dir: str = "./geolab-data"
    token_ttl_seconds: float = 12 * 3600.0
    heartbeat_timeout_seconds: float = 30.0
    coordinate_bound: float = 1e4
    log_level: str = "info"
    hash_iterations: int = 60_000
    durable: bool = True


def load_config(config_path: str | None = None,
                env: Mapping[str, str] | None = None,
                **overrides: Any) -> ServerConfig:
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ValidationError(f"config file not found: {config_path}")
        try:
            raw = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        known = {f.name for f in fields(ServerConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config key {sorted(unknown)[0]!r}")
        values.update(raw)
    if env.get(ENV_DATA_DIR):
        values["data_dir"] = env[ENV_DATA_DIR]
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    return ServerConfig(**values)
