"""Uniform chat-completion access with retries, a scripted mock, and call logging.

The remote backend speaks the common chat-completions wire format:

    POST {"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}
    ->   {"choices": [{"message": {"content": ...}}]}

with bearer-token auth read from the environment variable named in the
config. The mock backend replays an ordered script of (matcher, response)
entries so pipeline behaviour is fully deterministic offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import httpx


class GatewayError(Exception):
    """Base class for chat gateway failures."""


class TransportFailure(GatewayError):
    """Transport or server failure that persisted through all retries."""


class MockScriptError(GatewayError):
    """A mock request matched no script entry: a test configuration error."""


@dataclass(frozen=True)
class MockScriptEntry:
    match: str
    response: str
    one_shot: bool = False
    regex: bool = False

    def fires(self, user_text: str) -> bool:
        if self.regex:
            return re.search(self.match, user_text) is not None
        return self.match in user_text


@dataclass(frozen=True)
class GatewayConfig:
    kind: str  # "remote" or "mock"
    endpoint: str | None = None
    model_name: str | None = None
    auth_env: str | None = None
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    script: tuple[MockScriptEntry, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("remote", "mock"):
            raise ValueError(f"unknown gateway kind {self.kind!r}")
        if self.kind == "remote" and not (self.endpoint and self.model_name):
            raise ValueError("remote gateway requires endpoint and model_name")
        if self.kind == "mock" and not self.script:
            raise ValueError("mock gateway requires a script")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> GatewayConfig:
        """Load a JSON config; ``script`` may be inline or a path to a script file."""
        path = Path(path)
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: gateway config must be an object")
        script = data.pop("script", None)
        if isinstance(script, str):
            with open(path.parent / script, encoding="utf-8") as handle:
                script = json.load(handle)
        entries: tuple[MockScriptEntry, ...] = ()
        if script is not None:
            if not isinstance(script, list):
                raise ValueError(f"{path}: script must be an array of entries")
            entries = tuple(MockScriptEntry(**entry) for entry in script)
        return cls(script=entries, **data)


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency: float
    attempt_count: int


@dataclass(frozen=True)
class CallRecord:
    request_digest: str
    response_digest: str
    latency: float
    attempt_count: int


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class LlmGateway:
    """Shareable gateway handle with an in-flight cap and an ordered call log.

    One logical call yields exactly one ChatResponse and one log record, no
    matter how many transport retries it took.
    """

    def __init__(
        self,
        config: GatewayConfig,
        *,
        transport: httpx.BaseTransport | None = None,
    ):
        self._config = config
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._lock = threading.Lock()
        self._log: list[CallRecord] = []
        self._consumed: set[int] = set()
        self._client: httpx.Client | None = None
        if config.kind == "remote":
            self._client = httpx.Client(
                timeout=config.timeout,
                transport=transport,
                headers=self._auth_headers(),
            )

    @property
    def config(self) -> GatewayConfig:
        return self._config

    def _auth_headers(self) -> dict[str, str]:
        if self._config.auth_env:
            token = os.environ.get(self._config.auth_env, "")
            if token:
                return {"Authorization": f"Bearer {token}"}
        return {}

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> LlmGateway:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Run one chat completion against the configured backend."""
        started = time.perf_counter()
        with self._semaphore:
            if self._config.kind == "mock":
                text, attempts = self._complete_mock(request), 1
                backend_id = "mock"
            else:
                text, attempts = self._complete_remote(request)
                backend_id = self._config.model_name or "remote"
        latency = time.perf_counter() - started
        response = ChatResponse(
            text=text, backend_id=backend_id, latency=latency, attempt_count=attempts
        )
        record = CallRecord(
            request_digest=_digest(
                f"{request.system_text or ''}\x00{request.user_text}"
                f"\x00{request.temperature}\x00{request.max_output_tokens}"
            ),
            response_digest=_digest(text),
            latency=latency,
            attempt_count=attempts,
        )
        with self._lock:
            self._log.append(record)
        return response

    def call_log(self) -> tuple[CallRecord, ...]:
        """Audit trail of completed calls, in completion order."""
        with self._lock:
            return tuple(self._log)

    def _complete_mock(self, request: ChatRequest) -> str:
        with self._lock:
            for position, entry in enumerate(self._config.script):
                if entry.one_shot and position in self._consumed:
                    continue
                if entry.fires(request.user_text):
                    if entry.one_shot:
                        self._consumed.add(position)
                    return entry.response
        raise MockScriptError(
            "no mock script entry matched prompt starting: "
            f"{request.user_text[:80]!r} ({len(self._consumed)} one-shot entries consumed)"
        )

    def _complete_remote(self, request: ChatRequest) -> tuple[str, int]:
        assert self._client is not None
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        payload = {
            "model": self._config.model_name,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(1, self._config.max_attempts + 1):
            try:
                response = self._client.post(self._config.endpoint, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
            else:
                if response.status_code in (429,) or response.status_code >= 500:
                    last_error = TransportFailure(
                        f"gateway returned {response.status_code}: {response.text[:200]}"
                    )
                elif response.status_code >= 300:
                    raise GatewayError(
                        f"gateway returned {response.status_code}: {response.text[:200]}"
                    )
                else:
                    return self._parse_chat_response(response), attempt
            if attempt < self._config.max_attempts:
                time.sleep(self._config.backoff_base * 2 ** (attempt - 1))
        raise TransportFailure(
            f"request failed after {self._config.max_attempts} attempts: {last_error}"
        )

    @staticmethod
    def _parse_chat_response(response: httpx.Response) -> str:
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise GatewayError(f"malformed chat response: {exc}") from exc
        if not isinstance(text, str):
            raise GatewayError("chat response content is not text")
        return text


def script_from_pairs(pairs: Iterable[tuple[str, str]]) -> tuple[MockScriptEntry, ...]:
    """Convenience: build a substring-matched script from (match, response) pairs."""
    return tuple(MockScriptEntry(match=m, response=r) for m, r in pairs)
