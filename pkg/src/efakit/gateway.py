"""Model completion gateway: one retrying, budgeted entry point.

Workflows never talk to a model API directly; they call
``Gateway.complete(prompt, cfg)`` and always get back exactly ``cfg.n``
completions, with failures surfaced as completions whose finish_reason is
"error" rather than as exceptions. That count conservation is what lets
sampling loops stay simple: index i of the result is attempt i, full stop.

Backends are swappable: an HTTP chat-completions client for real runs, a
canned mock for tests, and a record/replay pair for deterministic reruns of
real traffic. Retries apply to transport faults only (timeouts, 5xx,
connection errors); a well-formed model response is never retried, and auth
failures abort immediately since retrying cannot fix a bad key.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

API_KEY_ENV = "EFA_LLM_API_KEY"


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Retryable: the request may succeed if tried again."""


class AuthError(GatewayError):
    """Not retryable: credentials are wrong or missing."""


class BudgetExceededError(GatewayError):
    pass


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.7
    max_tokens: int = 4096
    n: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str  # "stop" | "length" | "error"
    latency_ms: int = 0
    backend_id: str = ""

    def __post_init__(self):
        if self.finish_reason not in ("stop", "length", "error"):
            raise ValueError(f"bad finish_reason {self.finish_reason!r}")
        if not self.text and self.finish_reason != "error":
            raise ValueError("empty completion text requires finish_reason='error'")

    @property
    def ok(self) -> bool:
        return self.finish_reason != "error"


def request_key(prompt: str, cfg: SamplingConfig, n: int) -> str:
    """Stable identity of a request, used by the record/replay backends."""
    material = json.dumps(
        {
            "prompt": prompt,
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
            "n": n,
            "seed": cfg.seed,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _error_completion(backend_id: str, message: str) -> Completion:
    return Completion(text="", finish_reason="error", backend_id=f"{backend_id}:{message[:80]}")


class Backend:
    """Interface: request(prompt, cfg, n) -> list[Completion] of length n.

    Implementations raise TransportError for retryable faults and AuthError
    for credential problems; anything else they return as completions.
    """

    id = "backend"
    supports_batch = True

    def request(self, prompt: str, cfg: SamplingConfig, n: int) -> list[Completion]:
        raise NotImplementedError


class MockBackend(Backend):
    """Canned responses for tests: a list consumed in order, or a callable
    (prompt, cfg, index) -> text."""

    def __init__(self, responses, id: str = "mock", latency_ms: int = 0):
        self.id = id
        self._latency_ms = latency_ms
        self._lock = threading.Lock()
        self._cursor = 0
        self._responses = responses

    def _next_text(self, prompt, cfg):
        with self._lock:
            index = self._cursor
            self._cursor += 1
        if callable(self._responses):
            return self._responses(prompt, cfg, index)
        if index >= len(self._responses):
            raise TransportError("mock backend ran out of canned responses")
        return self._responses[index]

    def request(self, prompt, cfg, n):
        out = []
        for _ in range(n):
            text = self._next_text(prompt, cfg)
            out.append(
                Completion(
                    text=text,
                    finish_reason="stop",
                    latency_ms=self._latency_ms,
                    backend_id=self.id,
                )
            )
        return out


class ReplayBackend(Backend):
    """Serves recorded completions keyed by request identity.

    Multiple recorded entries under one key are handed out in recording
    order, so loops that issue the same request repeatedly replay exactly.
    A request with no remaining recording yields error completions.
    """

    id = "replay"

    def __init__(self, recording_path):
        self._queues: dict[str, list] = {}
        with open(recording_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._queues.setdefault(entry["key"], []).append(entry)
        self._lock = threading.Lock()

    def request(self, prompt, cfg, n):
        key = request_key(prompt, cfg, n)
        with self._lock:
            queue = self._queues.get(key)
            entry = queue.pop(0) if queue else None
        if entry is None:
            return [_error_completion(self.id, "no recording for request") for _ in range(n)]
        texts = entry["texts"]
        reasons = entry.get("finish_reasons", ["stop"] * len(texts))
        return [
            Completion(text=t, finish_reason=r, backend_id=self.id)
            for t, r in zip(texts, reasons)
        ]


class RecordingBackend(Backend):
    """Wraps another backend and journals (key, texts) for later replay."""

    def __init__(self, inner: Backend, recording_path):
        self.inner = inner
        self.id = f"recording({inner.id})"
        self.supports_batch = inner.supports_batch
        self._path = Path(recording_path)
        self._lock = threading.Lock()

    def request(self, prompt, cfg, n):
        completions = self.inner.request(prompt, cfg, n)
        entry = {
            "key": request_key(prompt, cfg, n),
            "texts": [c.text for c in completions],
            "finish_reasons": [c.finish_reason for c in completions],
        }
        line = json.dumps(entry, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return completions


class HttpBackend(Backend):
    """OpenAI-style chat completions over HTTP."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = API_KEY_ENV,
        timeout_s: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.id = f"http({model})"
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def request(self, prompt, cfg, n):
        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
            "n": n,
        }
        if cfg.seed is not None:
            payload["seed"] = cfg.seed
        started = time.monotonic()
        try:
            resp = self.session.post(
                f"{self.endpoint}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        latency_ms = int((time.monotonic() - started) * 1000)
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code} from {self.endpoint}")
        if resp.status_code in (408, 429) or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            # malformed request: retrying identical content cannot help
            return [
                _error_completion(self.id, f"HTTP {resp.status_code}") for _ in range(n)
            ]
        try:
            body = resp.json()
            choices = body["choices"]
        except (ValueError, KeyError) as exc:
            raise TransportError(f"malformed response body: {exc}") from exc
        out = []
        for choice in choices[:n]:
            text = (choice.get("message") or {}).get("content") or ""
            reason = choice.get("finish_reason") or "stop"
            if reason not in ("stop", "length"):
                reason = "error"
            if not text:
                reason = "error"
            out.append(
                Completion(
                    text=text if reason != "error" else "",
                    finish_reason=reason,
                    latency_ms=latency_ms,
                    backend_id=self.id,
                )
            )
        while len(out) < n:
            out.append(_error_completion(self.id, "missing choice"))
        return out


@dataclass
class Budget:
    """Hard ceilings for one run. None means unlimited."""

    max_requests: int | None = None
    max_tokens: int | None = None
    requests_used: int = 0
    tokens_used: int = 0

    def charge_request(self):
        if self.max_requests is not None and self.requests_used >= self.max_requests:
            raise BudgetExceededError(
                f"request budget exhausted ({self.max_requests})"
            )
        self.requests_used += 1

    def charge_tokens(self, count: int):
        self.tokens_used += count
        if self.max_tokens is not None and self.tokens_used > self.max_tokens:
            raise BudgetExceededError(
                f"token budget exhausted ({self.tokens_used}/{self.max_tokens})"
            )


def _estimate_tokens(text: str) -> int:
    # coarse chars/4 heuristic; budgets are ceilings, not accounting
    return max(1, len(text) // 4)


class Gateway:
    """Retrying, budgeted, concurrency-bounded completion dispatcher."""

    def __init__(
        self,
        backend: Backend,
        max_in_flight: int = 4,
        retry_max: int = 3,
        retry_base_ms: int = 200,
        budget: Budget | None = None,
        sleeper=time.sleep,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.backend = backend
        self.max_in_flight = max_in_flight
        self.retry_max = retry_max
        self.retry_base_ms = retry_base_ms
        self.budget = budget
        self._sleeper = sleeper
        self._slots = threading.Semaphore(max_in_flight)

    def _attempt(self, prompt, cfg, n) -> list[Completion]:
        last_error = "transport failure"
        for attempt in range(self.retry_max + 1):
            if attempt:
                self._sleeper(self.retry_base_ms * (2 ** (attempt - 1)) / 1000.0)
            if self.budget is not None:
                self.budget.charge_request()
            with self._slots:
                try:
                    completions = self.backend.request(prompt, cfg, n)
                except TransportError as exc:
                    last_error = str(exc)
                    continue
            if len(completions) != n:
                raise GatewayError(
                    f"backend {self.backend.id} returned {len(completions)} "
                    f"completions for n={n}"
                )
            if self.budget is not None:
                self.budget.charge_tokens(
                    sum(_estimate_tokens(c.text) for c in completions if c.text)
                )
            return completions
        return [_error_completion(self.backend.id, last_error) for _ in range(n)]

    def complete(self, prompt: str, cfg: SamplingConfig) -> list[Completion]:
        """Exactly cfg.n completions, errors included in the count.

        Raises BudgetExceededError when the run budget is exhausted and
        AuthError on credential failure; every other failure mode is an
        error completion.
        """
        if self.backend.supports_batch:
            return self._attempt(prompt, cfg, cfg.n)
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            futures = [
                pool.submit(self._attempt, prompt, cfg, 1) for _ in range(cfg.n)
            ]
            results = []
            for future in futures:
                results.extend(future.result())
        return results

    def complete_many(
        self, prompts: list[str], cfg: SamplingConfig
    ) -> list[list[Completion]]:
        """Batch over distinct prompts, preserving order."""
        if not prompts:
            return []
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            futures = [pool.submit(self.complete, p, cfg) for p in prompts]
            return [f.result() for f in futures]
