"""Chat completion boundary: request/reply types and the provider protocol."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

DEFAULT_TEMPERATURE = 0.8

# Pipeline stage tags; fixture lookup and mock synthesis key off these.
TAGS = ("character", "scene", "dialogue", "interview", "judge")


@dataclass(frozen=True)
class ChatRequest:
    user: str
    system: str | None = None
    model: str = ""
    temperature: float = DEFAULT_TEMPERATURE
    max_output: int | None = None
    tag: str = "dialogue"

    def __post_init__(self):
        if not self.user:
            raise ValueError("user prompt must be non-empty")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature outside [0, 2]: {self.temperature}")
        if self.tag not in TAGS:
            raise ValueError(f"unknown request tag: {self.tag!r}")
        if self.max_output is not None and self.max_output <= 0:
            raise ValueError("max_output must be positive when set")


@dataclass(frozen=True)
class ChatReply:
    text: str
    usage: dict | None = None
    latency: float = 0.0


@runtime_checkable
class Provider(Protocol):
    def chat(self, request: ChatRequest) -> ChatReply: ...


def prompt_digest(request: ChatRequest) -> str:
    """Stable content hash of a request's prompt text (system + user)."""
    h = hashlib.sha256()
    h.update((request.system or "").encode("utf-8"))
    h.update(b"\x00")
    h.update(request.user.encode("utf-8"))
    return h.hexdigest()[:16]
