from __future__ import annotations

import json
import random
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from simsforge.errors import (
    AuthError,
    ExhaustedRetries,
    FixtureMissing,
    RateLimited,
    TransportError,
)
from simsforge.provider.base import ChatReply, ChatRequest, prompt_digest
from simsforge.provider.mock import MockProvider
from simsforge.provider.openai_http import OpenAIChatProvider
from simsforge.provider.policy import PolicyProvider, RetryPolicy

# -- request shape ---------------------------------------------------------------


def test_request_defaults():
    r = ChatRequest(user="hi")
    assert r.temperature == 0.8
    assert r.system is None
    assert r.tag == "dialogue"


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(user="")
    with pytest.raises(ValueError):
        ChatRequest(user="hi", temperature=-0.1)
    with pytest.raises(ValueError):
        ChatRequest(user="hi", temperature=2.5)
    with pytest.raises(ValueError):
        ChatRequest(user="hi", tag="poetry")
    with pytest.raises(ValueError):
        ChatRequest(user="hi", max_output=0)


def test_prompt_digest_shape_and_sensitivity():
    a = prompt_digest(ChatRequest(user="hello"))
    b = prompt_digest(ChatRequest(user="hello", system="be brief"))
    c = prompt_digest(ChatRequest(user="hello", system="be brief"))
    assert len(a) == 16 and all(ch in "0123456789abcdef" for ch in a)
    assert a != b
    assert b == c


def test_prompt_digest_separates_system_from_user():
    # moving text across the boundary must change the digest
    a = prompt_digest(ChatRequest(user="xy", system="z"))
    b = prompt_digest(ChatRequest(user="y", system="zx"))
    assert a != b


# -- mock provider ----------------------------------------------------------------


def test_mock_push_is_fifo():
    m = MockProvider(seed=0)
    m.push("judge", "first", "second")
    assert m.chat(ChatRequest(user="q", tag="judge")).text == "first"
    assert m.chat(ChatRequest(user="q", tag="judge")).text == "second"


def test_mock_synthesis_is_seed_deterministic():
    req = ChatRequest(user="Score the response on a scale of 1-7.", tag="judge")
    a = MockProvider(seed=5).chat(req).text
    b = MockProvider(seed=5).chat(req).text
    c = MockProvider(seed=6).chat(req).text
    assert a == b
    assert a != c or True  # different seeds usually differ; never required


def test_mock_same_seed_different_prompts_differ():
    m = MockProvider(seed=5)
    a = m.chat(ChatRequest(user="Tell me about your day.", tag="interview")).text
    b = m.chat(ChatRequest(user="Tell me about your week.", tag="interview")).text
    assert a != b


def test_mock_fixture_lookup(tmp_path):
    req = ChatRequest(user="canned?", tag="judge")
    d = tmp_path / "judge"
    d.mkdir()
    (d / f"{prompt_digest(req)}.txt").write_text("from disk", encoding="utf-8")
    m = MockProvider(seed=0, fixtures_dir=tmp_path)
    assert m.chat(req).text == "from disk"


def test_mock_strict_requires_fixture(tmp_path):
    m = MockProvider(seed=0, fixtures_dir=tmp_path, strict=True)
    with pytest.raises(FixtureMissing):
        m.chat(ChatRequest(user="no file for this", tag="judge"))


def test_mock_capture_and_reset():
    m = MockProvider(seed=0)
    m.chat(ChatRequest(user="one", tag="judge"))
    m.chat(ChatRequest(user="two", tag="judge"))
    assert [r.user for r in m.requests] == ["one", "two"]
    m.reset_capture()
    assert m.requests == []


def test_mock_reports_usage():
    m = MockProvider(seed=0)
    reply = m.chat(ChatRequest(user="x" * 8, tag="judge"))
    assert reply.usage is not None
    assert reply.usage["prompt_tokens"] == 2


# -- retry policy ------------------------------------------------------------------


class FlakyProvider:
    """Fails a scripted number of times, then succeeds."""

    def __init__(self, failures: list[Exception]):
        self.failures = list(failures)
        self.calls = 0

    def chat(self, request: ChatRequest) -> ChatReply:
        self.calls += 1
        if self.failures:
            raise self.failures.pop(0)
        return ChatReply(text="ok", usage=None, latency=0.0)


def test_policy_retries_transient_failures():
    inner = FlakyProvider([RateLimited("429"), RateLimited("429")])
    p = PolicyProvider(inner, RetryPolicy(max_retries=3), sleep=lambda s: None)
    assert p.chat(ChatRequest(user="go")).text == "ok"
    assert inner.calls == 3


def test_policy_gives_up_after_budget():
    inner = FlakyProvider([TransportError("boom")] * 10)
    p = PolicyProvider(inner, RetryPolicy(max_retries=3), sleep=lambda s: None)
    with pytest.raises(ExhaustedRetries) as e:
        p.chat(ChatRequest(user="go"))
    assert inner.calls == 4  # initial call plus three retries
    assert isinstance(e.value.last, TransportError)


def test_policy_auth_error_is_immediate():
    inner = FlakyProvider([AuthError("bad key")])
    p = PolicyProvider(inner, RetryPolicy(max_retries=3), sleep=lambda s: None)
    with pytest.raises(AuthError):
        p.chat(ChatRequest(user="go"))
    assert inner.calls == 1


def test_policy_backoff_is_capped_exponential():
    sleeps: list[float] = []
    inner = FlakyProvider([RateLimited("429")] * 3)
    p = PolicyProvider(
        inner,
        RetryPolicy(max_retries=3, base_backoff=1.0),
        sleep=sleeps.append,
        rng=random.Random(1),
    )
    p.chat(ChatRequest(user="go"))
    assert len(sleeps) == 3
    for attempt, s in enumerate(sleeps):
        assert 0.0 <= s <= 1.0 * 2 ** attempt


def test_policy_caps_parallelism():
    limit = 4
    active = 0
    peak = 0
    lock = threading.Lock()

    class SlowProvider:
        def chat(self, request: ChatRequest) -> ChatReply:
            nonlocal active, peak
            with lock:
                active += 1
                peak = max(peak, active)
            time.sleep(0.02)
            with lock:
                active -= 1
            return ChatReply(text="ok", usage=None, latency=0.0)

    p = PolicyProvider(SlowProvider(), RetryPolicy(max_parallel=limit))
    threads = [
        threading.Thread(target=p.chat, args=(ChatRequest(user=f"j{i}"),))
        for i in range(12)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert peak <= limit


# -- http client -------------------------------------------------------------------


class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list = []  # (status, body dict or text) consumed per request
    seen: list = []

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        type(self).seen.append(json.loads(self.rfile.read(n)))
        status, body = type(self).script.pop(0)
        payload = json.dumps(body).encode() if isinstance(body, dict) else body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    _ScriptedHandler.script = []
    _ScriptedHandler.seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/v1", _ScriptedHandler
    server.shutdown()


def _completion(text: str) -> dict:
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 1, "completion_tokens": 1},
    }


def test_http_provider_happy_path(stub_server):
    base, handler = stub_server
    handler.script = [(200, _completion("hello there"))]
    p = OpenAIChatProvider(base, model="test-model", api_key="k")
    reply = p.chat(ChatRequest(user="hi", system="be kind", temperature=0.3))
    assert reply.text == "hello there"
    assert reply.usage == {"prompt_tokens": 1, "completion_tokens": 1}
    assert reply.latency >= 0
    sent = handler.seen[0]
    assert sent["model"] == "test-model"
    assert sent["temperature"] == 0.3
    assert sent["messages"][0] == {"role": "system", "content": "be kind"}
    assert sent["messages"][1] == {"role": "user", "content": "hi"}


def test_http_provider_status_mapping(stub_server):
    base, handler = stub_server
    p = OpenAIChatProvider(base, model="m", api_key="k")

    handler.script = [(401, {"error": "no"})]
    with pytest.raises(AuthError):
        p.chat(ChatRequest(user="hi"))

    handler.script = [(429, {"error": "slow down"})]
    with pytest.raises(RateLimited):
        p.chat(ChatRequest(user="hi"))

    handler.script = [(500, {"error": "oops"})]
    with pytest.raises(TransportError):
        p.chat(ChatRequest(user="hi"))


def test_http_provider_malformed_body(stub_server):
    base, handler = stub_server
    handler.script = [(200, "not json at all")]
    p = OpenAIChatProvider(base, model="m")
    with pytest.raises(TransportError):
        p.chat(ChatRequest(user="hi"))


def test_http_provider_connection_refused():
    p = OpenAIChatProvider("http://127.0.0.1:1/v1", model="m", timeout=0.5)
    with pytest.raises(TransportError):
        p.chat(ChatRequest(user="hi"))
