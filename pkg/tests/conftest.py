import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
HELPERS_DIR = TESTS_DIR / "helpers"

sys.path.insert(0, str(HELPERS_DIR))

FAKE_RUNNER_CMD = [sys.executable, str(HELPERS_DIR / "fake_runner.py")]
MISBEHAVING_RUNNER = str(HELPERS_DIR / "misbehaving_runner.py")


def load_manifest():
    return json.loads((DATA_DIR / "fixtures.json").read_text())


def load_fixture_seeds():
    from efakit.store import SeedProblem

    seeds = {}
    for line in (DATA_DIR / "seeds.jsonl").read_text().splitlines():
        payload = json.loads(line)
        seeds[payload["id"]] = SeedProblem.from_payload(payload)
    return seeds


def fixture_response(entry) -> str:
    """The raw model response for a manifest entry: either the stored
    response file or the candidate code wrapped in a fence."""
    if "response_file" in entry:
        return (DATA_DIR / entry["response_file"]).read_text()
    code = (DATA_DIR / entry["file"]).read_text()
    return f"Here is the functionalization:\n\n```python\n{code}```\n"


def candidate_code(name: str) -> str:
    return (DATA_DIR / "candidates" / f"{name}.py").read_text()


@pytest.fixture(scope="session")
def fake_pool():
    """Shared warm pool of fake runners for tests that only issue clean calls."""
    from efakit.sandbox import ResourceLimits, WorkerPool

    with WorkerPool(
        FAKE_RUNNER_CMD,
        limits=ResourceLimits(wall_timeout_ms=10_000, memory_cap_bytes=None),
        size=2,
    ) as pool:
        yield pool
