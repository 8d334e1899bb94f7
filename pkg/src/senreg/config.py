"""Service configuration from environment variables, file and overrides.

Environment (prefix SENREG_) is the primary channel; an optional JSON
config file fills in anything unset, and explicit keyword overrides
(CLI flags) win over both.
"""

from __future__ import annotations

import json
import os
import secrets
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

ENV_PREFIX = "SENREG_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8500
    base_url: str = ""
    data_dir: Path = Path("senreg-data")
    blob_limit: int = 64 * 1024 * 1024
    handle_endpoint: str = ""
    handle_token: str = ""
    token_secret: str = ""
    token_issuer: str = "senreg-local"
    token_ttl_minutes: int = 480
    token_verifier: str = "local"
    cv_webhook_url: str = ""
    deterministic: bool = False

    def resolved_base_url(self) -> str:
        return (self.base_url or f"http://{self.host}:{self.port}").rstrip("/")

    def ensure_token_secret(self) -> str:
        """Generated secrets are ephemeral: restarts invalidate old tokens."""
        if not self.token_secret:
            self.token_secret = secrets.token_urlsafe(32)
        return self.token_secret


_BOOL_TRUE = {"1", "true", "yes", "on"}


def _coerce(name: str, kind: type, raw: Any):
    if issubclass(kind, Path):
        return Path(raw)
    if kind is int:
        return int(raw)
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in _BOOL_TRUE
    return str(raw)


def load_config(
    config_path: Optional[Path] = None,
    env: Optional[Mapping[str, str]] = None,
    **overrides: Any,
) -> ServiceConfig:
    env = os.environ if env is None else env
    config = ServiceConfig()
    file_values: dict[str, Any] = {}
    if config_path is not None:
        file_values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(file_values, dict):
            raise ValueError(f"{config_path}: config file must hold a JSON object")
    for spec in fields(ServiceConfig):
        kind = type(getattr(config, spec.name))
        if spec.name in file_values:
            setattr(config, spec.name, _coerce(spec.name, kind, file_values[spec.name]))
        env_key = ENV_PREFIX + spec.name.upper()
        if env_key in env:
            setattr(config, spec.name, _coerce(spec.name, kind, env[env_key]))
        if spec.name in overrides and overrides[spec.name] is not None:
            setattr(config, spec.name, _coerce(spec.name, kind, overrides[spec.name]))
    return config
