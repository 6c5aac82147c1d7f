from .base import DEFAULT_TEMPERATURE, TAGS, ChatReply, ChatRequest, Provider, prompt_digest
from .mock import MockProvider
from .openai_http import OpenAIChatProvider
from .policy import PolicyProvider, RetryPolicy

__all__ = [
    "DEFAULT_TEMPERATURE",
    "TAGS",
    "ChatReply",
    "ChatRequest",
    "Provider",
    "prompt_digest",
    "MockProvider",
    "OpenAIChatProvider",
    "PolicyProvider",
    "RetryPolicy",
]
