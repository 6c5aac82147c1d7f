"""Configuration: simsforge.toml plus flag overrides, provider factory."""

from __future__ import annotations

import dataclasses
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ImportError:  # pragma: no cover - depends on interpreter version
    import tomli as tomllib

from .errors import SimsForgeError
from .provider.base import Provider
from .provider.mock import MockProvider
from .provider.openai_http import OpenAIChatProvider
from .provider.policy import PolicyProvider, RetryPolicy

CONFIG_FILENAME = "simsforge.toml"


@dataclasses.dataclass
class Settings:
    provider: str = "mock"          # mock | openai
    model: str = ""
    base_url: str = "https://api.openai.com/v1"
    seed: int = 0
    fixtures_dir: str | None = None
    strict_fixtures: bool = False
    data_dir: str = "."
    catalog_path: str | None = None
    max_retries: int = 3
    base_backoff: float = 1.0
    max_parallel: int = 8
    token_budget: int = 4096

    def merged(self, overrides: dict) -> "Settings":
        values = dataclasses.asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Settings(**values)


def load_settings(path: str | Path | None = None) -> Settings:
    """Read simsforge.toml if present; missing file means defaults."""
    p = Path(path) if path else Path(CONFIG_FILENAME)
    if not p.exists():
        return Settings()
    try:
        raw = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise SimsForgeError(f"bad config file {p}: {e}") from None

    known = {f.name for f in dataclasses.fields(Settings)}
    values = {k: v for k, v in raw.items() if k in known}
    return Settings(**values)


def build_provider(settings: Settings) -> Provider:
    policy = RetryPolicy(
        max_retries=settings.max_retries,
        base_backoff=settings.base_backoff,
        max_parallel=settings.max_parallel,
    )
    if settings.provider == "mock":
        return MockProvider(
            seed=settings.seed,
            fixtures_dir=settings.fixtures_dir,
            strict=settings.strict_fixtures,
        )
    if settings.provider == "openai":
        return PolicyProvider(
            OpenAIChatProvider(base_url=settings.base_url, model=settings.model),
            policy,
        )
    raise ValueError(f"unknown provider: {settings.provider!r}")
