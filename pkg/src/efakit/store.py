"""Content-addressed corpus and artifact store.

Everything the pipeline produces (seed problems, raw candidates, validated
programs, sampled variants, eval records) lands in append-only JSONL
journals under one directory, keyed by a sha256 of the canonicalized
payload. Records carry explicit parent hashes, so lineage questions
("which seed produced this variant?") are answered by walking parents, and
re-running a stage is idempotent: an identical payload hashes to the same
id and is not appended twice.

Canonicalization before hashing: keys sorted, compact separators, newlines
normalized to \\n, trailing whitespace stripped per line inside string
values. Two payloads that differ only in those respects are the same record.

Writer safety: opening a store for writing takes an advisory flock on
``index/lock``. One writer at a time; readers are unrestricted.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

KINDS = ("seed", "candidate", "efa", "variant", "eval")
_JOURNALS = {
    "seed": "seeds.jsonl",
    "candidate": "candidates.jsonl",
    "efa": "efas.jsonl",
    "variant": "variants.jsonl",
    "eval": "evals.jsonl",
}

# kind -> (required parent kind, exact count) for lineage enforcement
_LINEAGE = {
    "efa": ("seed", 1),
    "variant": ("efa", 1),
}


class StoreError(Exception):
    pass


class IntegrityError(StoreError):
    """Hash collision with differing payloads, or broken lineage."""


class StoreLockedError(StoreError):
    pass


def _canon_value(value):
    if isinstance(value, str):
        text = value.replace("\r\n", "\n").replace("\r", "\n")
        return "\n".join(line.rstrip() for line in text.split("\n"))
    if isinstance(value, dict):
        return {k: _canon_value(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_canon_value(v) for v in value]
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float)):
        return value
    raise TypeError(f"payload value of type {type(value).__name__} is not storable")


def canonical_payload(payload: dict) -> str:
    if not isinstance(payload, dict):
        raise TypeError("payload must be a dict")
    return json.dumps(
        _canon_value(payload), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def content_hash(payload: dict) -> str:
    return hashlib.sha256(canonical_payload(payload).encode("utf-8")).hexdigest()


@dataclass
class SeedProblem:
    """One source problem: statement, reference solution, extracted gold."""

    id: str
    statement: str
    solution: str
    gold_answer: str | None
    source: str = ""
    level: int | None = None
    category: str | None = None

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "statement": self.statement,
            "solution": self.solution,
            "gold_answer": self.gold_answer,
            "source": self.source,
            "level": self.level,
            "category": self.category,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SeedProblem":
        return cls(
            id=payload["id"],
            statement=payload["statement"],
            solution=payload["solution"],
            gold_answer=payload.get("gold_answer"),
            source=payload.get("source", ""),
            level=payload.get("level"),
            category=payload.get("category"),
        )


@dataclass
class StoredRecord:
    kind: str
    content_hash: str
    created_at: float
    parent_ids: tuple[str, ...]
    payload: dict

    def to_line(self) -> str:
        envelope = {
            "kind": self.kind,
            "content_hash": self.content_hash,
            "created_at": self.created_at,
            "parent_ids": list(self.parent_ids),
            "payload": _canon_value(self.payload),
        }
        return json.dumps(
            envelope, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )

    @classmethod
    def from_line(cls, line: str) -> "StoredRecord":
        raw = json.loads(line)
        return cls(
            kind=raw["kind"],
            content_hash=raw["content_hash"],
            created_at=raw["created_at"],
            parent_ids=tuple(raw.get("parent_ids", ())),
            payload=raw["payload"],
        )


@dataclass
class SkipReport:
    line_no: int
    reason: str


class Store:
    """Journal-backed record store. Use as a context manager when writing."""

    def __init__(self, root, mode: str = "r", clock: Callable[[], float] = time.time):
        if mode not in ("r", "w"):
            raise ValueError("mode must be 'r' or 'w'")
        self.root = Path(root)
        self.mode = mode
        self.clock = clock
        self._lock_fh = None
        self._index: dict[str, dict[str, StoredRecord]] = {k: {} for k in KINDS}
        self._by_hash: dict[str, StoredRecord] = {}
        if mode == "w":
            (self.root / "index").mkdir(parents=True, exist_ok=True)
            self._acquire_lock()
        self._load()

    def _acquire_lock(self):
        lock_path = self.root / "index" / "lock"
        fh = open(lock_path, "a+")
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise StoreLockedError(f"another writer holds {lock_path}")
        self._lock_fh = fh

    def _load(self):
        for kind, name in _JOURNALS.items():
            path = self.root / name
            if not path.exists():
                continue
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = StoredRecord.from_line(line)
                    self._index[record.kind][record.content_hash] = record
                    self._by_hash[record.content_hash] = record

    def close(self):
        if self._lock_fh is not None:
            fcntl.flock(self._lock_fh.fileno(), fcntl.LOCK_UN)
            self._lock_fh.close()
            self._lock_fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _require_writable(self):
        if self.mode != "w":
            raise StoreError("store opened read-only")

    def put_record(
        self, kind: str, payload: dict, parent_ids: Iterable[str] = ()
    ) -> str:
        """Insert a record; returns its content hash.

        Idempotent: putting an identical payload again is a no-op. Putting a
        different payload that collides on hash (or the same hash under a
        different kind/parents) raises IntegrityError.
        """
        self._require_writable()
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        parents = tuple(parent_ids)
        for pid in parents:
            if pid not in self._by_hash:
                raise IntegrityError(f"parent {pid} not present in store")
        rule = _LINEAGE.get(kind)
        if rule is not None:
            want_kind, want_count = rule
            matching = [p for p in parents if self._by_hash[p].kind == want_kind]
            if len(matching) != want_count:
                raise IntegrityError(
                    f"{kind} record requires exactly {want_count} {want_kind} "
                    f"parent, got {len(matching)}"
                )
        digest = content_hash(payload)
        existing = self._by_hash.get(digest)
        if existing is not None:
            if existing.kind != kind or canonical_payload(
                existing.payload
            ) != canonical_payload(payload):
                raise IntegrityError(f"hash collision on {digest}")
            return digest
        record = StoredRecord(
            kind=kind,
            content_hash=digest,
            created_at=self.clock(),
            parent_ids=parents,
            payload=payload,
        )
        path = self.root / _JOURNALS[kind]
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(record.to_line() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._index[kind][digest] = record
        self._by_hash[digest] = record
        return digest

    def get_record(self, record_id: str) -> StoredRecord:
        record = self._by_hash.get(record_id)
        if record is None:
            raise KeyError(f"no record {record_id}")
        return record

    def has(self, record_id: str) -> bool:
        return record_id in self._by_hash

    def list_records(
        self, kind: str, where: Callable[[dict], bool] | None = None
    ) -> list[StoredRecord]:
        """Records of one kind in insertion order, optionally filtered."""
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        records = list(self._index[kind].values())
        if where is not None:
            records = [r for r in records if where(r.payload)]
        return records

    def count(self, kind: str) -> int:
        return len(self._index[kind])

    def find_seed(self, problem_id: str) -> StoredRecord:
        """Seed record carrying this problem id; missing ids are hard errors."""
        for record in self._index["seed"].values():
            if record.payload.get("id") == problem_id:
                return record
        raise StoreError(f"no seed with id {problem_id!r} in store")

    def resolve_seed(self, record_id: str) -> StoredRecord:
        """Walk parents up to the seed record."""
        record = self.get_record(record_id)
        seen = set()
        while record.kind != "seed":
            if record.content_hash in seen:
                raise IntegrityError("parent cycle detected")
            seen.add(record.content_hash)
            parents = [
                self._by_hash[p]
                for p in record.parent_ids
                if p in self._by_hash
            ]
            if not parents:
                raise IntegrityError(
                    f"{record.kind} {record.content_hash} has no resolvable parent"
                )
            # lineage rules guarantee a unique upward path for efa/variant
            record = parents[0]
        return record

    def quarantine(self, payload: dict, reason: str) -> None:
        self._require_writable()
        entry = {
            "reason": reason,
            "payload": _canon_value(payload),
            "created_at": self.clock(),
        }
        path = self.root / "quarantine.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(entry, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
                + "\n"
            )

    def quarantine_count(self) -> int:
        path = self.root / "quarantine.jsonl"
        if not path.exists():
            return 0
        with open(path, encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())

    def ingest_seeds(self, seeds: Iterable[SeedProblem]) -> tuple[list[str], int]:
        """Store seeds with gold answers; quarantine the rest.

        Returns (stored hashes in order, quarantined count).
        """
        stored: list[str] = []
        quarantined = 0
        for seed in seeds:
            if not seed.gold_answer:
                self.quarantine(seed.to_payload(), "no extractable gold answer")
                quarantined += 1
                continue
            stored.append(self.put_record("seed", seed.to_payload()))
        return stored, quarantined


def extract_gold_answer(solution: str) -> str | None:
    """Content of the last boxed span in a reference solution, or None.

    Raises answers.BoxedExtractionError when the last span never closes.
    """
    from .answers import last_boxed

    return last_boxed(solution)


_LEVEL_RE = re.compile(r"(\d+)")


def _parse_level(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, int):
        return value
    m = _LEVEL_RE.search(str(value))
    return int(m.group(1)) if m else None


def _gold_from_record(row: dict, solution: str) -> tuple[str | None, str | None]:
    """(gold, problem_with_gold) resolution: explicit answer field wins,
    then the last boxed span of the solution. Second element is a reason
    when gold is missing."""
    from .answers import BoxedExtractionError

    for key in ("answer", "gold_answer"):
        value = row.get(key)
        if value is not None and str(value).strip():
            return str(value).strip(), None
    try:
        gold = extract_gold_answer(solution)
    except BoxedExtractionError as exc:
        return None, f"malformed boxed span: {exc}"
    if gold is None or not gold.strip():
        return None, "no boxed answer in solution"
    return gold, None


def _row_math(row: dict, default_id: str) -> SeedProblem:
    statement = row["problem"]
    solution = row["solution"]
    gold, _ = _gold_from_record(row, solution)
    return SeedProblem(
        id=str(row.get("id") or row.get("unique_id") or default_id),
        statement=statement,
        solution=solution,
        gold_answer=gold,
        source=str(row.get("source", "MATH")),
        level=_parse_level(row.get("level")),
        category=row.get("type") or row.get("subject"),
    )


def _row_numina(row: dict, default_id: str) -> SeedProblem:
    statement = row["problem"]
    solution = row["solution"]
    gold, _ = _gold_from_record(row, solution)
    return SeedProblem(
        id=str(row.get("id") or default_id),
        statement=statement,
        solution=solution,
        gold_answer=gold,
        source=str(row.get("source", "NuminaMath")),
        level=_parse_level(row.get("level")),
        category=row.get("type") or row.get("category"),
    )


def _row_generic(row: dict, default_id: str) -> SeedProblem:
    statement = row.get("statement") or row.get("problem") or row.get("question")
    solution = row.get("solution") or row.get("reasoning") or ""
    if not statement:
        raise KeyError("statement")
    gold, _ = _gold_from_record(row, solution)
    return SeedProblem(
        id=str(row.get("id") or default_id),
        statement=statement,
        solution=solution,
        gold_answer=gold,
        source=str(row.get("source", "generic")),
        level=_parse_level(row.get("level")),
        category=row.get("category") or row.get("type"),
    )


SCHEMAS = {
    "math_jsonl": _row_math,
    "numina_jsonl": _row_numina,
    "generic_jsonl": _row_generic,
}


def load_seed_problems(
    path, schema: str = "math_jsonl"
) -> tuple[list[SeedProblem], list[SkipReport]]:
    """Parse a seed corpus file into SeedProblems plus per-line skip reports.

    Accounting is exact: len(seeds) + len(skips) == number of lines in the
    file. Zero valid records is a hard error, not an empty result.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown corpus schema {schema!r}")
    parse_row = SCHEMAS[schema]
    path = Path(path)
    seeds: list[SeedProblem] = []
    skips: list[SkipReport] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline is not a record
    stem = path.stem
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            skips.append(SkipReport(line_no, "blank line"))
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            skips.append(SkipReport(line_no, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(row, dict):
            skips.append(SkipReport(line_no, "line is not a JSON object"))
            continue
        try:
            seed = parse_row(row, f"{stem}:{line_no:06d}")
        except KeyError as exc:
            skips.append(SkipReport(line_no, f"missing field {exc}"))
            continue
        if not seed.statement.strip():
            skips.append(SkipReport(line_no, "empty problem statement"))
            continue
        seeds.append(seed)
    if not seeds:
        raise StoreError(f"{path}: no valid seed records (schema {schema})")
    return seeds, skips
