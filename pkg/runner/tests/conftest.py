import json
import os
import resource
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
HELPERS_DIR = TESTS_DIR / "helpers"

sys.path.insert(0, str(HELPERS_DIR))


def runner_command() -> list[str]:
    exe = shutil.which("efa-guest-runner")
    if exe:
        return [exe, "--profile", "python"]
    return [sys.executable, "-m", "efa_guest_runner.serve", "--profile", "python"]


def candidate_code(name: str) -> str:
    return (DATA_DIR / "candidates" / f"{name}.py").read_text()


def request_line(op, code=None, params=None, rng_seed=None, call_id=0) -> str:
    """Supervisor framing: op first, then the payload, call_id last."""
    body = {"op": op}
    if code is not None:
        body["code"] = code
    if params is not None:
        body["params"] = params
    if rng_seed is not None:
        body["rng_seed"] = rng_seed
    body["call_id"] = call_id
    return json.dumps(body, separators=(",", ":"), ensure_ascii=False)


class RunnerSession:
    """One runner subprocess driven over the real pipe, as a supervisor would."""

    def __init__(self, cwd=None, env=None, memory_cap_bytes=None):
        full_env = dict(os.environ)
        full_env.update(env or {})
        preexec = None
        if memory_cap_bytes is not None:
            def preexec():  # noqa: F811 - intentional rebind
                resource.setrlimit(
                    resource.RLIMIT_AS, (memory_cap_bytes, memory_cap_bytes)
                )
        self.proc = subprocess.Popen(
            runner_command(),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            cwd=cwd,
            env=full_env,
            preexec_fn=preexec,
        )
        self._next_call_id = 0

    def send_raw(self, line: str) -> str:
        """One raw request line out, one raw response line back."""
        self.proc.stdin.write((line + "\n").encode("utf-8"))
        self.proc.stdin.flush()
        return self.proc.stdout.readline().decode("utf-8").rstrip("\n")

    def call(self, op, code=None, params=None, rng_seed=None) -> dict:
        call_id = self._next_call_id
        self._next_call_id += 1
        reply = self.send_raw(request_line(op, code, params, rng_seed, call_id))
        if not reply:
            raise AssertionError(f"runner died answering {op!r}")
        response = json.loads(reply)
        assert response["call_id"] == call_id
        return response

    def value(self, op, **kwargs):
        response = self.call(op, **kwargs)
        assert response["ok"], response
        return response["value"]

    def error(self, op, **kwargs) -> dict:
        response = self.call(op, **kwargs)
        assert not response["ok"], response
        return response["error"]

    def wait(self, timeout=10) -> int:
        self.proc.stdin.close()
        return self.proc.wait(timeout=timeout)

    def close(self):
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@pytest.fixture()
def session(tmp_path):
    """Runner in a scratch directory so stray runner.log files stay contained."""
    with RunnerSession(cwd=tmp_path) as s:
        yield s
