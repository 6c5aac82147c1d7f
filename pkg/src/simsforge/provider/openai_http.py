"""Chat-completions client over the common HTTP wire protocol."""

from __future__ import annotations

import os
import time

import requests

from ..errors import AuthError, RateLimited, TransportError
from .base import ChatReply, ChatRequest

API_KEY_ENV = "SIMSFORGE_API_KEY"


class OpenAIChatProvider:
    """Talks to any endpoint speaking the chat-completions protocol."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 120.0, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self.session = session or requests.Session()

    def chat(self, request: ChatRequest) -> ChatReply:
        messages = []
        if request.system is not None:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.user})
        payload: dict = {
            "model": request.model or self.model,
            "messages": messages,
            "temperature": request.temperature,
        }
        if request.max_output is not None:
            payload["max_tokens"] = request.max_output
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        started = time.monotonic()
        try:
            resp = self.session.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise TransportError(str(e)) from None
        latency = time.monotonic() - started

        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code == 429:
            raise RateLimited(f"HTTP 429: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")

        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed completion body: {e}") from None
        return ChatReply(text=text, usage=body.get("usage"), latency=latency)
