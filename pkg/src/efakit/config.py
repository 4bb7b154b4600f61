"""Run configuration: one flat TOML file, overridable by flags, one hash.

Every run manifest records the config hash, so two runs are comparable by
a single string. Values here are plumbing defaults; the semantically loaded
bounds (k_variants >= 2, budgets >= 1, ...) are enforced by the dataclasses
that consume them.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ImportError:  # 3.10
    import tomli as tomllib

from .sandbox import ResourceLimits
from .store import content_hash
from .validation import ValidationConfig
from .workflows import ProbeConfig, SolverBudget

BACKENDS = ("replay", "record", "http")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    # layout
    store_dir: str = "store"
    runs_dir: str = "runs"
    templates_dir: str | None = None
    global_seed: int = 0
    deterministic_clock: bool = False

    # gateway
    backend: str = "replay"
    endpoint: str = ""
    model: str = ""
    recording_path: str = ""
    max_in_flight: int = 4
    retry_max: int = 3
    retry_base_ms: int = 200
    max_requests: int | None = None
    max_request_tokens: int | None = None

    # sandbox
    runner_command: tuple[str, ...] = ()
    wall_timeout_ms: int = 10_000
    memory_cap_bytes: int | None = 512 * 1024 * 1024
    max_output_bytes: int = 64 * 1024
    pool_size: int | None = None

    # validation
    k_variants: int = 20
    repeats: int = 2
    strict_statement: bool = False
    similarity_threshold: float = 0.9
    answer_rel_tol: float = 1e-6

    # workflow knobs
    candidates_per_problem: int = 20
    variants_per_efa: int = 1
    solver_n: int = 25
    solver_temperature: float = 0.7
    solver_max_tokens: int = 2048
    ks: tuple[int, ...] = (1,)
    ratio: float = 1.0
    teacher_samples: int = 5
    budget_variants: int = 50
    attempts_per_variant: int = 1
    stop_on_first: bool = True
    probe_gate_n: int = 5
    probe_gate_threshold: float = 0.5
    probe_max_variants: int = 8

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.global_seed < 0:
            raise ConfigError("global_seed must be >= 0")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("ks must be a non-empty list of positive integers")

    def to_payload(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["runner_command"] = list(self.runner_command)
        payload["ks"] = list(self.ks)
        return payload

    def hash(self) -> str:
        return content_hash(self.to_payload())[:12]

    # views consumed by the pipeline modules

    def validation_config(self) -> ValidationConfig:
        return ValidationConfig(
            k_variants=self.k_variants,
            repeats=self.repeats,
            strict_statement=self.strict_statement,
            similarity_threshold=self.similarity_threshold,
            answer_rel_tol=self.answer_rel_tol,
        )

    def resource_limits(self) -> ResourceLimits:
        return ResourceLimits(
            wall_timeout_ms=self.wall_timeout_ms,
            memory_cap_bytes=self.memory_cap_bytes,
            max_output_bytes=self.max_output_bytes,
        )

    def solver_budget(self) -> SolverBudget:
        return SolverBudget(
            n=self.solver_n,
            temperature=self.solver_temperature,
            max_tokens=self.solver_max_tokens,
        )

    def probe_config(self) -> ProbeConfig:
        return ProbeConfig(
            gate_n=self.probe_gate_n,
            gate_threshold=self.probe_gate_threshold,
            max_variants=self.probe_max_variants,
        )


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TUPLE_FIELDS = {"runner_command", "ks"}


def _coerce(name: str, value):
    if name in _TUPLE_FIELDS:
        if isinstance(value, str):
            value = [part for part in value.split(",") if part != ""]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        if name == "ks":
            try:
                return tuple(int(v) for v in value)
            except (TypeError, ValueError):
                raise ConfigError("ks entries must be integers") from None
        return tuple(str(v) for v in value)
    return value


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Config file values, then non-None overrides, over the defaults.

    Unknown keys fail fast: a typo must not silently fall back to a default.
    """
    values: dict = {}
    if path is not None:
        raw = Path(path).read_bytes()
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for key, value in data.items():
            if key not in _FIELDS:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            values[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config override {key!r}")
        values[key] = _coerce(key, value)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
