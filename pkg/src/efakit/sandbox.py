"""Supervisor for sandboxed guest-program execution.

Candidate programs are untrusted model output: they hang, allocate without
bound, print garbage, or try to open sockets. Each one therefore runs in a
separate runner process under OS resource limits, driven over a
newline-delimited JSON protocol on stdin/stdout. The supervisor never
crashes because a guest misbehaved; every failure mode collapses to a typed
error on the call that triggered it:

    syntax    guest code failed to compile
    runtime   guest code raised
    timeout   no response within the wall deadline (worker killed)
    killed    worker process died (resource limit, crash)
    protocol  worker wrote something that is not a well-formed response

Wire format, one JSON object per line, compact separators:

    -> {"op": "ping", "call_id": 0}
    <- {"call_id": 0, "ok": true, "value": "pong"}
    -> {"op": "load", "code": "...", "call_id": 1}
    -> {"op": "sample", "rng_seed": 7, "call_id": 2}
    -> {"op": "solve", "params": {...}, "call_id": 3}

Request keys are ordered op, (code|params|rng_seed), call_id; response keys
call_id, ok, (value|error). Ops: load, original, sample, render, solve,
ping, shutdown.

One candidate per worker process: after a session ends the worker is
retired and the pool spawns a fresh one, so no guest state (monkeypatched
preloaded modules included) can leak between candidates. After any kill the
handle is poisoned and further calls fail fast.
"""

from __future__ import annotations

import json
import os
import queue
import resource
import signal
import subprocess
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

OPS = ("load", "original", "sample", "render", "solve", "ping", "shutdown")
ERROR_TYPES = ("syntax", "runtime", "timeout", "protocol", "killed")

NO_NET_ENV = "EFA_RUNNER_NO_NET"
MAX_OUTPUT_ENV = "EFA_RUNNER_MAX_OUTPUT"


class SandboxError(Exception):
    """Supervisor-side infrastructure fault (not a guest failure)."""


class SpawnError(SandboxError):
    pass


class HandlePoisonedError(SandboxError):
    pass


@dataclass(frozen=True)
class ResourceLimits:
    wall_timeout_ms: int = 10_000
    memory_cap_bytes: int | None = 512 * 1024 * 1024
    max_output_bytes: int = 64 * 1024

    def __post_init__(self):
        if self.wall_timeout_ms < 1:
            raise ValueError("wall_timeout_ms must be positive")
        if self.max_output_bytes < 1024:
            raise ValueError("max_output_bytes must be at least 1 KiB")


@dataclass(frozen=True)
class RunnerError:
    type: str
    message: str
    traceback: str | None = None

    def __post_init__(self):
        if self.type not in ERROR_TYPES:
            raise ValueError(f"unknown error type {self.type!r}")

    def to_wire(self) -> dict:
        wire = {"type": self.type, "message": self.message}
        if self.traceback is not None:
            wire["traceback"] = self.traceback
        return wire

    @classmethod
    def from_wire(cls, wire: dict) -> "RunnerError":
        return cls(
            type=wire["type"],
            message=wire.get("message", ""),
            traceback=wire.get("traceback"),
        )


@dataclass(frozen=True)
class RunnerRequest:
    op: str
    call_id: int
    code: str | None = None
    params: dict | None = None
    rng_seed: int | None = None

    def to_line(self) -> str:
        body: dict = {"op": self.op}
        if self.code is not None:
            body["code"] = self.code
        if self.params is not None:
            body["params"] = self.params
        if self.rng_seed is not None:
            body["rng_seed"] = self.rng_seed
        body["call_id"] = self.call_id
        return json.dumps(body, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "RunnerRequest":
        raw = json.loads(line)
        return cls(
            op=raw["op"],
            call_id=raw["call_id"],
            code=raw.get("code"),
            params=raw.get("params"),
            rng_seed=raw.get("rng_seed"),
        )


@dataclass(frozen=True)
class RunnerResponse:
    call_id: int
    ok: bool
    value: object = None
    error: RunnerError | None = None

    def to_line(self) -> str:
        body: dict = {"call_id": self.call_id, "ok": self.ok}
        if self.ok:
            body["value"] = self.value
        else:
            body["error"] = self.error.to_wire()
        return json.dumps(body, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "RunnerResponse":
        raw = json.loads(line)
        error = raw.get("error")
        return cls(
            call_id=raw["call_id"],
            ok=raw["ok"],
            value=raw.get("value"),
            error=RunnerError.from_wire(error) if error else None,
        )


def _make_preexec(limits: ResourceLimits):
    def preexec():
        os.setsid()
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        if limits.memory_cap_bytes is not None:
            cap = limits.memory_cap_bytes
            resource.setrlimit(resource.RLIMIT_AS, (cap, cap))

    return preexec


class RunnerHandle:
    """One worker process: spawn, call, kill. Not thread-safe by design;
    a handle is owned by exactly one task at a time."""

    def __init__(
        self,
        command: list[str],
        limits: ResourceLimits | None = None,
        env_extra: dict | None = None,
        handshake_timeout_ms: int = 30_000,
    ):
        self.limits = limits or ResourceLimits()
        self.command = list(command)
        self._call_counter = 0
        self.poisoned = False
        # envelope slack on top of the per-value cap before the supervisor
        # declares the stream hostile
        self._line_cap = self.limits.max_output_bytes + 64 * 1024
        env = dict(os.environ)
        env[NO_NET_ENV] = "1"
        env[MAX_OUTPUT_ENV] = str(self.limits.max_output_bytes)
        if env_extra:
            env.update(env_extra)
        try:
            self.proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                env=env,
                preexec_fn=_make_preexec(self.limits),
            )
        except OSError as exc:
            raise SpawnError(f"cannot spawn runner {self.command!r}: {exc}") from exc
        self._events: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        hello = self.call("ping", timeout_ms=handshake_timeout_ms)
        if not hello.ok or hello.value != "pong":
            self.kill()
            raise SpawnError(f"runner handshake failed: {hello}")

    def _read_loop(self):
        stream = self.proc.stdout
        while True:
            try:
                chunk = stream.readline(self._line_cap)
            except ValueError:  # stream closed under us
                chunk = b""
            if not chunk:
                self._events.put(("eof", b""))
                return
            if not chunk.endswith(b"\n"):
                # either an oversized line or a partial line at EOF
                if len(chunk) >= self._line_cap:
                    self._events.put(("oversize", chunk))
                    return
                self._events.put(("eof", chunk))
                return
            self._events.put(("line", chunk.rstrip(b"\n")))

    def kill(self):
        self.poisoned = True
        if self.proc.poll() is None:
            try:
                os.killpg(self.proc.pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError):
                self.proc.kill()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:  # pragma: no cover
                pass
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:  # pragma: no cover
                pass

    def alive(self) -> bool:
        return not self.poisoned and self.proc.poll() is None

    def _fail(self, error_type: str, message: str, call_id: int) -> RunnerResponse:
        self.kill()
        return RunnerResponse(
            call_id=call_id, ok=False, error=RunnerError(error_type, message)
        )

    def call(
        self,
        op: str,
        code: str | None = None,
        params: dict | None = None,
        rng_seed: int | None = None,
        timeout_ms: int | None = None,
    ) -> RunnerResponse:
        """Issue one request; always returns exactly one response.

        Guest failures come back as ok=false responses. Supervisor-side
        detection (timeout, death, stream corruption) kills the worker and
        synthesizes the corresponding error response.
        """
        if self.poisoned:
            raise HandlePoisonedError("handle was killed; acquire a fresh worker")
        if op not in OPS:
            raise ValueError(f"unknown op {op!r}")
        call_id = self._call_counter
        self._call_counter += 1
        request = RunnerRequest(
            op=op, call_id=call_id, code=code, params=params, rng_seed=rng_seed
        )
        try:
            self.proc.stdin.write(request.to_line().encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            return self._fail("killed", "worker died before accepting request", call_id)
        deadline = (timeout_ms or self.limits.wall_timeout_ms) / 1000.0
        try:
            kind, data = self._events.get(timeout=deadline)
        except queue.Empty:
            return self._fail(
                "timeout",
                f"no response within {timeout_ms or self.limits.wall_timeout_ms} ms",
                call_id,
            )
        if kind == "eof":
            code_info = self.proc.poll()
            return self._fail(
                "killed", f"worker exited (status {code_info})", call_id
            )
        if kind == "oversize":
            return self._fail(
                "protocol", f"response line exceeded {self._line_cap} bytes", call_id
            )
        try:
            response = RunnerResponse.from_line(data.decode("utf-8"))
        except (ValueError, KeyError, UnicodeDecodeError):
            return self._fail("protocol", "unparseable response line", call_id)
        if response.call_id != call_id:
            return self._fail(
                "protocol",
                f"response call_id {response.call_id} does not match {call_id}",
                call_id,
            )
        return response

    def shutdown(self):
        """Polite stop: ask, then make sure."""
        if not self.poisoned and self.proc.poll() is None:
            try:
                self.call("shutdown", timeout_ms=2000)
            except HandlePoisonedError:  # pragma: no cover
                pass
        self.kill()


class WorkerPool:
    """Fixed-size pool of warm runner processes.

    Checkout hands a worker to one task; checkin retires it (one candidate
    per worker process) and replaces it with a fresh one, so the pool
    self-heals back to its configured size no matter how workers die.
    """

    def __init__(
        self,
        command: list[str],
        limits: ResourceLimits | None = None,
        size: int | None = None,
        env_extra: dict | None = None,
    ):
        if size is None:
            size = min(4, os.cpu_count() or 1)
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self.command = list(command)
        self.limits = limits or ResourceLimits()
        self.size = size
        self.env_extra = env_extra
        self._lock = threading.Lock()
        self._idle: list[RunnerHandle] = []
        self._checked_out = 0
        self._slots = threading.BoundedSemaphore(size)
        self._closed = False
        for _ in range(size):
            self._idle.append(self._spawn())

    def _spawn(self) -> RunnerHandle:
        return RunnerHandle(self.command, self.limits, self.env_extra)

    def live_count(self) -> int:
        with self._lock:
            idle_alive = sum(1 for h in self._idle if h.alive())
            return idle_alive + self._checked_out

    def acquire(self, timeout_s: float | None = None) -> RunnerHandle:
        if self._closed:
            raise SandboxError("pool is closed")
        if not self._slots.acquire(timeout=timeout_s):
            raise SandboxError("timed out waiting for a free worker")
        with self._lock:
            handle = None
            while self._idle:
                candidate = self._idle.pop()
                if candidate.alive():
                    handle = candidate
                    break
                candidate.kill()
            self._checked_out += 1
        if handle is None:
            try:
                handle = self._spawn()
            except SpawnError:
                with self._lock:
                    self._checked_out -= 1
                self._slots.release()
                raise
        return handle

    def release(self, handle: RunnerHandle):
        handle.shutdown()
        replacement = None
        try:
            if not self._closed:
                replacement = self._spawn()
        except SpawnError:
            replacement = None  # heal lazily on the next acquire
        with self._lock:
            self._checked_out -= 1
            if replacement is not None:
                self._idle.append(replacement)
        self._slots.release()

    @contextmanager
    def session(self) -> Iterator[RunnerHandle]:
        handle = self.acquire()
        try:
            yield handle
        finally:
            self.release(handle)

    def close(self):
        self._closed = True
        with self._lock:
            idle, self._idle = self._idle, []
        for handle in idle:
            handle.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EfaCallError(Exception):
    """A guest call failed. ``error_type`` is one of ERROR_TYPES."""

    def __init__(self, error_type: str, message: str):
        super().__init__(f"{error_type}: {message}")
        self.error_type = error_type
        self.message = message


class SandboxRuntime:
    """Loaded program in a pooled worker, exposed as plain method calls.

    The interface workflows and validation consume: original/sample/render/
    solve return values or raise EfaCallError. Use as a context manager;
    entering loads the code, exiting retires the worker.
    """

    def __init__(self, pool: WorkerPool, code: str):
        self.pool = pool
        self.code = code
        self._handle: RunnerHandle | None = None

    def __enter__(self):
        self._handle = self.pool.acquire()
        try:
            self._unwrap(self._handle.call("load", code=self.code))
        except EfaCallError:
            self.pool.release(self._handle)
            self._handle = None
            raise
        return self

    def __exit__(self, *exc):
        if self._handle is not None:
            self.pool.release(self._handle)
            self._handle = None

    def _unwrap(self, response: RunnerResponse):
        if response.ok:
            return response.value
        raise EfaCallError(response.error.type, response.error.message)

    def _call(self, op, **kw):
        if self._handle is None:
            raise SandboxError("runtime used outside its context")
        if self._handle.poisoned:
            raise EfaCallError("killed", "worker already gone for this candidate")
        return self._unwrap(self._handle.call(op, **kw))

    def original(self) -> dict:
        return self._call("original")

    def sample(self, rng_seed: int) -> dict:
        return self._call("sample", rng_seed=rng_seed)

    def render(self, params: dict) -> str:
        return self._call("render", params=params)

    def solve(self, params: dict) -> str:
        return self._call("solve", params=params)


def runtime_factory(pool: WorkerPool):
    """code -> context manager yielding a loaded runtime."""

    def factory(code: str) -> SandboxRuntime:
        return SandboxRuntime(pool, code)

    return factory


def profile_command(profile, python_fallback: bool = True) -> list[str]:
    """Resolve a guest profile's runner command line."""
    command = [
        part.replace("{python}", sys.executable) for part in profile.runner_command
    ]
    if not command:
        raise SandboxError(f"profile {profile.name!r} declares no runner command")
    return command


def wall_elapsed_ms(started: float) -> int:
    return int((time.monotonic() - started) * 1000)
