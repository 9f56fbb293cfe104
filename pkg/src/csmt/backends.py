"""JSON-over-HTTP clients for translation, annotation, rephrasing, and
semantic scoring.

Every client shares one request path: a requests-per-minute gate, a
bounded in-flight semaphore, retries with exponential backoff and
jitter for transient failures (timeouts, HTTP 429, 5xx, transport
errors), and an optional content-addressed disk cache so interrupted
batch jobs resume without re-querying.  Auth tokens are read from an
environment variable named in the config and sent as a bearer header;
config files never hold secrets.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass, replace as _replace
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import (
    BackendError,
    BackendTimeout,
    BadResponse,
    ExhaustedRetries,
    RateLimited,
)

__all__ = [
    "BackendConfig",
    "BackendResult",
    "BackendSuite",
    "TranslatorClient",
    "AnnotatorClient",
    "RephraserClient",
    "RemoteScoreProvider",
    "Translator",
    "Annotator",
    "Rephraser",
    "load_backend_suite",
    "default_annotator_template",
    "default_rephrase_template",
]

_BACKOFF_BASE_S = 1.0
_BACKOFF_FACTOR = 2.0
_JITTER_FRACTION = 0.1


@dataclass(frozen=True)
class BackendConfig:
    """Connection and behavior settings for one backend endpoint."""

    endpoint: str
    auth_env: str | None = None
    timeout_s: float = 30.0
    max_retries: int = 3
    rpm: float = 60.0
    max_in_flight: int = 4
    temperature: float = 0.1
    prompt_template: str | None = None
    cache_dir: str | None = None
    name: str | None = None

    def __post_init__(self):
        if not self.endpoint:
            raise ValueError("endpoint is required")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.rpm <= 0:
            raise ValueError("rpm must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class BackendResult:
    """One backend answer; attempts is 0 on a cache hit."""

    text: str
    latency_ms: float
    attempts: int
    cache_hit: bool


class Translator(Protocol):
    def translate(self, text: str, source: str = "en", target: str = "th") -> BackendResult: ...


class Annotator(Protocol):
    def annotate(self, text: str) -> BackendResult: ...


class Rephraser(Protocol):
    def rephrase(self, text: str) -> BackendResult: ...


def default_annotator_template() -> str:
    return resources.files("csmt").joinpath("templates/annotator_prompt.txt").read_text(
        encoding="utf-8"
    )


def default_rephrase_template() -> str:
    return resources.files("csmt").joinpath("templates/rephrase_prompt.txt").read_text(
        encoding="utf-8"
    )


class _RateGate:
    """Spaces request starts at least 60/rpm seconds apart."""

    def __init__(self, rpm: float, clock: Callable[[], float], sleep: Callable[[float], None]):
        self._interval = 60.0 / rpm
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self):
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self._interval
            delay = start - now
        if delay > 0:
            self._sleep(delay)


class _DiskCache:
    """Content-addressed text cache; writes go through a temp file so
    readers never see partial entries."""

    def __init__(self, root: str | Path):
        self._root = Path(root)
        self._lock = threading.Lock()

    def path(self, key: str) -> Path:
        return self._root / key[:2] / f"{key}.json"

    def get(self, key: str) -> str | None:
        p = self.path(key)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        text = data.get("text")
        return text if isinstance(text, str) else None

    def put(self, key: str, text: str):
        p = self.path(key)
        with self._lock:
            p.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(json.dumps({"text": text}, ensure_ascii=False))
                os.replace(tmp, p)
            except BaseException:
                try:
                    os.unlink(tmp)
                except OSError:
                    pass
                raise


class JsonHttpClient:
    """Shared request path for the concrete backend clients."""

    role = "generic"

    def __init__(
        self,
        cfg: BackendConfig,
        transport: httpx.BaseTransport | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self._cfg = cfg
        self._client = httpx.Client(timeout=cfg.timeout_s, transport=transport)
        self._gate = _RateGate(cfg.rpm, clock, sleep)
        self._sem = threading.BoundedSemaphore(cfg.max_in_flight)
        self._cache = _DiskCache(cfg.cache_dir) if cfg.cache_dir else None
        self._clock = clock
        self._sleep = sleep
        self._rng = rng or random.Random()
        template = cfg.prompt_template or ""
        self._template_digest = hashlib.sha256(template.encode("utf-8")).hexdigest()[:16]

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _cache_key(self, input_text: str) -> str:
        ident = "\x1f".join(
            (
                self.role,
                self._cfg.endpoint,
                self._template_digest,
                repr(self._cfg.temperature),
                input_text,
            )
        )
        return hashlib.sha256(ident.encode("utf-8")).hexdigest()

    def _headers(self) -> dict[str, str]:
        if not self._cfg.auth_env:
            return {}
        token = os.environ.get(self._cfg.auth_env)
        if not token:
            raise BackendError(
                f"auth environment variable {self._cfg.auth_env} is not set"
            )
        return {"Authorization": f"Bearer {token}"}

    def _call(self, payload: dict, cache_text: str, extract: Callable[[dict], str]) -> BackendResult:
        if self._cache is not None:
            key = self._cache_key(cache_text)
            hit = self._cache.get(key)
            if hit is not None:
                return BackendResult(hit, 0.0, 0, True)
        started = self._clock()
        data, attempts = self._post_with_retries(payload)
        text = extract(data)
        latency_ms = (self._clock() - started) * 1000.0
        if self._cache is not None:
            self._cache.put(key, text)
        return BackendResult(text, latency_ms, attempts, False)

    def _post_with_retries(self, payload: dict) -> tuple[dict, int]:
        headers = self._headers()
        max_attempts = self._cfg.max_retries + 1
        last: Exception | None = None
        with self._sem:
            for attempt in range(1, max_attempts + 1):
                self._gate.wait()
                try:
                    resp = self._client.post(
                        self._cfg.endpoint, json=payload, headers=headers
                    )
                except httpx.TimeoutException as exc:
                    last = BackendTimeout(str(exc))
                except httpx.HTTPError as exc:
                    last = BackendError(str(exc))
                else:
                    if resp.status_code == 429:
                        last = RateLimited(f"{self.role}: HTTP 429")
                    elif resp.status_code >= 500:
                        last = BackendError(f"{self.role}: HTTP {resp.status_code}")
                    elif resp.status_code >= 400:
                        raise BadResponse(f"{self.role}: HTTP {resp.status_code}")
                    else:
                        try:
                            data = resp.json()
                        except ValueError as exc:
                            raise BadResponse(
                                f"{self.role}: response is not JSON"
                            ) from exc
                        if not isinstance(data, dict):
                            raise BadResponse(f"{self.role}: response is not an object")
                        return data, attempt
                if attempt < max_attempts:
                    base = _BACKOFF_BASE_S * _BACKOFF_FACTOR ** (attempt - 1)
                    self._sleep(base + self._rng.uniform(0.0, base * _JITTER_FRACTION))
        raise ExhaustedRetries(max_attempts, last or BackendError("unknown"))


def _extract_str(data: dict, field: str, role: str) -> str:
    value = data.get(field)
    if not isinstance(value, str):
        raise BadResponse(f"{role}: missing or non-string {field!r}")
    return value


class TranslatorClient(JsonHttpClient):
    """POST {text, source, target} -> {translation}."""

    role = "translate"

    def translate(self, text: str, source: str = "en", target: str = "th") -> BackendResult:
        payload = {"text": text, "source": source, "target": target}
        cache_text = "\x1f".join((source, target, text))
        return self._call(
            payload, cache_text, lambda d: _extract_str(d, "translation", self.role)
        )


class AnnotatorClient(JsonHttpClient):
    """POST {prompt, temperature} -> {text} with the keyword-tagging
    prompt template applied to the input."""

    role = "annotate"

    def __init__(self, cfg: BackendConfig, **kw):
        if cfg.prompt_template is None:
            cfg = _replace(cfg, prompt_template=default_annotator_template())
        super().__init__(cfg, **kw)

    def annotate(self, text: str) -> BackendResult:
        prompt = self._cfg.prompt_template.replace("{input}", text)
        payload = {"prompt": prompt, "temperature": self._cfg.temperature}
        return self._call(payload, text, lambda d: _extract_str(d, "text", self.role))


class RephraserClient(JsonHttpClient):
    """POST {prompt, temperature} -> {text} with the rephrase template."""

    role = "rephrase"

    def __init__(self, cfg: BackendConfig, **kw):
        if cfg.prompt_template is None:
            cfg = _replace(cfg, prompt_template=default_rephrase_template())
        super().__init__(cfg, **kw)

    def rephrase(self, text: str) -> BackendResult:
        prompt = self._cfg.prompt_template.replace("{input}", text)
        payload = {"prompt": prompt, "temperature": self._cfg.temperature}
        return self._call(payload, text, lambda d: _extract_str(d, "text", self.role))


class RemoteScoreProvider(JsonHttpClient):
    """POST {src, mt, ref} -> {score in [0, 1]}; satisfies
    metrics.ScoreProvider."""

    role = "score"

    def __init__(self, cfg: BackendConfig, **kw):
        super().__init__(cfg, **kw)
        self.name = cfg.name or "semantic"

    def score(self, source: str, hypothesis: str, reference: str | None = None) -> float:
        payload = {"src": source, "mt": hypothesis, "ref": reference or ""}
        cache_text = "\x1f".join((source, hypothesis, reference or ""))

        def extract(data: dict) -> str:
            value = data.get("score")
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise BadResponse(f"{self.role}: missing or non-numeric 'score'")
            if not 0.0 <= float(value) <= 1.0:
                raise BadResponse(f"{self.role}: score {value} outside [0, 1]")
            return repr(float(value))

        return float(self._call(payload, cache_text, extract).text)


@dataclass
class BackendSuite:
    """The clients a pipeline run needs, any subset may be present."""

    translator: TranslatorClient | None = None
    annotator: AnnotatorClient | None = None
    rephraser: RephraserClient | None = None
    scorer: RemoteScoreProvider | None = None

    def close(self):
        for client in (self.translator, self.annotator, self.rephraser, self.scorer):
            if client is not None:
                client.close()


_SECTION_CLIENTS = {
    "translator": TranslatorClient,
    "annotator": AnnotatorClient,
    "rephraser": RephraserClient,
    "scorer": RemoteScoreProvider,
}


def load_backend_suite(path: str | Path, rng: random.Random | None = None) -> BackendSuite:
    """Build clients from a JSON config file.

    Top-level cache_dir applies to sections that set none; a section's
    template_path is read relative to the config file.  Section fields
    mirror BackendConfig.
    """
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("backend config must be a JSON object")
    shared_cache = raw.get("cache_dir")
    suite = BackendSuite()
    for section, client_cls in _SECTION_CLIENTS.items():
        entry = raw.get(section)
        if entry is None:
            continue
        if not isinstance(entry, dict):
            raise ValueError(f"backend config section {section!r} must be an object")
        entry = dict(entry)
        template_path = entry.pop("template_path", None)
        if template_path is not None:
            entry["prompt_template"] = (
                (path.parent / template_path).read_text(encoding="utf-8")
            )
        if shared_cache is not None and "cache_dir" not in entry:
            entry["cache_dir"] = shared_cache
        try:
            cfg = BackendConfig(**entry)
        except TypeError as exc:
            raise ValueError(f"backend config section {section!r}: {exc}") from exc
        setattr(suite, section, client_cls(cfg, rng=rng))
    return suite
