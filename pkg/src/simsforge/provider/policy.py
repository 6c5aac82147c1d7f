"""Retry and concurrency policy around any provider."""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass

from ..errors import AuthError, ExhaustedRetries, RateLimited, TransportError
from .base import ChatReply, ChatRequest, Provider


@dataclass
class RetryPolicy:
    max_retries: int = 3
    base_backoff: float = 1.0  # seconds
    max_parallel: int = 8


class PolicyProvider:
    """Wraps a provider with bounded retries, backoff and a parallelism cap.

    Retries transient failures (rate limits, transport errors) with
    exponential backoff plus jitter; auth failures propagate immediately.
    """

    def __init__(self, inner: Provider, policy: RetryPolicy | None = None,
                 sleep=time.sleep, rng: random.Random | None = None):
        self.inner = inner
        self.policy = policy or RetryPolicy()
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._gate = threading.BoundedSemaphore(self.policy.max_parallel)

    def chat(self, request: ChatRequest) -> ChatReply:
        with self._gate:
            return self._chat_with_retries(request)

    def _chat_with_retries(self, request: ChatRequest) -> ChatReply:
        last: Exception | None = None
        attempts = self.policy.max_retries + 1
        for attempt in range(attempts):
            try:
                return self.inner.chat(request)
            except AuthError:
                raise
            except (RateLimited, TransportError) as e:
                last = e
                if attempt + 1 < attempts:
                    # full jitter: anywhere up to the doubling cap
                    cap = self.policy.base_backoff * (2 ** attempt)
                    self._sleep(cap * self._rng.random())
        assert last is not None
        raise ExhaustedRetries(attempts, last)
