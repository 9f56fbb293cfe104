"""Shared fixtures: a small Thai dictionary and a scriptable HTTP backend."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from csmt.textseg import SegmenterConfig

SMALL_WORDS = frozenset(
    {
        "ผู้ป่วย",
        "แพทย์",
        "โรค",
        "ยา",
        "มี",
        "ไม่",
        "และ",
        "ของ",
        "ใน",
        "ที่",
        "เป็น",
        "ตา",
        "บอด",
        "ตาบอด",
        "ความ",
        "ใจ",
        "ดี",
        "ความดี",
        "วัคซีน",
        "ป้องกัน",
        "เลือด",
        "หัวใจ",
    }
)


@pytest.fixture(scope="session")
def small_cfg() -> SegmenterConfig:
    return SegmenterConfig(SMALL_WORDS)


class FakeBackend:
    """In-process HTTP server with per-path scripted handlers.

    script values are callables taking the request JSON and returning
    either a response dict or an (http_status, dict) pair.  Requests are
    logged with their path, payload, and auth header.
    """

    def __init__(self):
        self.calls: list[dict] = []
        self.scripts: dict[str, object] = {}
        self._lock = threading.Lock()
        backend = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                with backend._lock:
                    backend.calls.append(
                        {
                            "path": self.path,
                            "payload": payload,
                            "auth": self.headers.get("Authorization"),
                        }
                    )
                    script = backend.scripts.get(self.path)
                if script is None:
                    self._reply(404, {"error": "no script"})
                    return
                result = script(payload)
                if isinstance(result, tuple):
                    status, body = result
                else:
                    status, body = 200, result
                self._reply(status, body)

            def _reply(self, status, body):
                raw = (
                    body.encode("utf-8")
                    if isinstance(body, str)
                    else json.dumps(body, ensure_ascii=False).encode("utf-8")
                )
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )
        self._thread.start()

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return self.base_url + path

    def count(self, path: str) -> int:
        with self._lock:
            return sum(1 for c in self.calls if c["path"] == path)

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def fake_backend():
    backend = FakeBackend()
    yield backend
    backend.close()


def echo_translator(payload):
    """Marks the text so tests can tell a translation happened."""
    return {"translation": "TH:" + payload["text"]}


def tagging_annotator(tag_map):
    """Annotator script wrapping known surfaces from tag_map in tags."""

    def handle(payload):
        prompt = payload["prompt"]
        text = prompt.rstrip("\n").rsplit("\n", 1)[-1]
        for surface, tag in tag_map.items():
            text = text.replace(surface, f"<{tag}>{surface}</{tag}>")
        return {"text": f"<annotated>{text}</annotated>"}

    return handle


def write_backend_config(tmp_path, backend, monkeypatch, cache=True, **overrides):
    """Backend config file pointing every role at the fake server."""
    monkeypatch.setenv("CSMT_TEST_TOKEN", "sekret")
    sections = {
        "translator": {"endpoint": backend.url("/translate")},
        "annotator": {"endpoint": backend.url("/annotate")},
        "rephraser": {"endpoint": backend.url("/rephrase")},
        "scorer": {"endpoint": backend.url("/score")},
    }
    for name, section in sections.items():
        section.update(
            {
                "auth_env": "CSMT_TEST_TOKEN",
                "timeout_s": 5.0,
                "max_retries": 1,
                "rpm": 100000.0,
            }
        )
        section.update(overrides.get(name, {}))
    config = dict(sections)
    if cache:
        config["cache_dir"] = str(tmp_path / "cache")
    path = tmp_path / "backends.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
