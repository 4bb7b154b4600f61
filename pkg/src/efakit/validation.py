"""The five behavioral tests that decide whether a candidate survives.

Order matters and the suite fails fast: a candidate that does not even
execute tells us nothing about its degrees of freedom, so later tests are
recorded as skipped rather than run against a known-broken program.

    is_extractable    a usable program was found in the response (upstream
                      structural check, recorded here for the full picture)
    is_executable     load + original() + sample() + render() + solve() all
                      complete in the sandbox
    has_dof           k sampled parameter records contain >= 2 distinct ones
    is_single_valued  each sampled record solves to the same answer every time
    matches_original  solve(original()) equals the seed's gold answer; the
                      rendered statement's similarity to the seed statement is
                      always recorded and gates only in strict mode

Probe RNG seeds derive from one base seed, so a report is a pure function
of (candidate, seed problem, config, rng_seed) and reruns are identical.
"""

from __future__ import annotations

import difflib
import json
import re
import time
from dataclasses import dataclass, field

from .answers import equivalent_text
from .extraction import CandidateProgram, Reject
from .sandbox import EfaCallError
from .seeding import derive_seed

TEST_NAMES = (
    "is_extractable",
    "is_executable",
    "has_dof",
    "is_single_valued",
    "matches_original",
)

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"


@dataclass(frozen=True)
class ValidationConfig:
    k_variants: int = 20
    repeats: int = 2
    strict_statement: bool = False
    similarity_threshold: float = 0.9
    answer_rel_tol: float = 1e-6

    def __post_init__(self):
        if self.k_variants < 2:
            raise ValueError("k_variants must be >= 2 to measure degrees of freedom")
        if self.repeats < 2:
            raise ValueError("repeats must be >= 2 to detect nondeterminism")
        if not (0.0 <= self.similarity_threshold <= 1.0):
            raise ValueError("similarity_threshold must be within [0, 1]")


@dataclass(frozen=True)
class TestOutcome:
    status: str
    reason: str | None = None
    elapsed_ms: int = 0


@dataclass
class TestReport:
    results: dict[str, TestOutcome]
    variant_probe_count: int = 0
    statement_similarity: float | None = None

    def all_pass(self) -> bool:
        return all(o.status == PASS for o in self.results.values())

    def first_failure(self) -> str | None:
        for name in TEST_NAMES:
            if self.results[name].status == FAIL:
                return name
        return None

    def to_payload(self) -> dict:
        return {
            "results": {
                name: {
                    "status": o.status,
                    "reason": o.reason,
                    "elapsed_ms": o.elapsed_ms,
                }
                for name, o in self.results.items()
            },
            "variant_probe_count": self.variant_probe_count,
            "statement_similarity": self.statement_similarity,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TestReport":
        return cls(
            results={
                name: TestOutcome(
                    status=o["status"],
                    reason=o.get("reason"),
                    elapsed_ms=o.get("elapsed_ms", 0),
                )
                for name, o in payload["results"].items()
            },
            variant_probe_count=payload.get("variant_probe_count", 0),
            statement_similarity=payload.get("statement_similarity"),
        )


def token_similarity(a: str, b: str) -> float:
    """Similarity over lowercase word tokens; ignores spacing and punctuation."""
    ta = re.findall(r"\w+", a.lower())
    tb = re.findall(r"\w+", b.lower())
    if not ta and not tb:
        return 1.0
    return difflib.SequenceMatcher(None, ta, tb).ratio()


class _Clock:
    def __init__(self):
        self.started = time.monotonic()

    def take_ms(self) -> int:
        now = time.monotonic()
        elapsed = int((now - self.started) * 1000)
        self.started = now
        return elapsed


def _params_key(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


def run_all_tests(
    candidate: CandidateProgram | Reject,
    seed_problem,
    runtime_factory,
    cfg: ValidationConfig | None = None,
    rng_seed: int = 0,
    _evidence: dict | None = None,
) -> TestReport:
    """Run the suite against one candidate for one seed problem.

    ``runtime_factory(code)`` must return a context manager yielding an
    object with original()/sample(rng_seed)/render(params)/solve(params)
    that raises EfaCallError on guest failure. Infrastructure faults
    propagate; they are not candidate failures.
    """
    cfg = cfg or ValidationConfig()
    evidence = _evidence if _evidence is not None else {}
    report = TestReport(results={})
    clock = _Clock()

    def record(name, status, reason=None):
        report.results[name] = TestOutcome(status, reason, clock.take_ms())

    def skip_rest(after: str):
        names = list(TEST_NAMES)
        for name in names[names.index(after) + 1 :]:
            report.results[name] = TestOutcome(SKIPPED, f"prior failure: {after}", 0)

    # 1. is_extractable (decided upstream, recorded for completeness)
    if isinstance(candidate, Reject):
        detail = candidate.reason
        if candidate.missing:
            detail += f" (missing: {', '.join(candidate.missing)})"
        record("is_extractable", FAIL, detail)
        skip_rest("is_extractable")
        return report
    record("is_extractable", PASS)

    gold = getattr(seed_problem, "gold_answer", None)
    statement = getattr(seed_problem, "statement", "") or ""

    try:
        runtime_cm = runtime_factory(candidate.code)
    except EfaCallError as exc:
        record("is_executable", FAIL, f"load: {exc.error_type}: {exc.message}")
        skip_rest("is_executable")
        return report

    try:
        with runtime_cm as runtime:
            # 2. is_executable: one full pass through the method surface
            try:
                original_params = runtime.original()
                probe = runtime.sample(derive_seed(rng_seed, "probe"))
                report.variant_probe_count += 1
                rendered = runtime.render(original_params)
                original_answer = runtime.solve(original_params)
            except EfaCallError as exc:
                record("is_executable", FAIL, f"{exc.error_type}: {exc.message}")
                skip_rest("is_executable")
                return report
            if not isinstance(original_params, dict):
                record("is_executable", FAIL, "original() did not yield a parameter record")
                skip_rest("is_executable")
                return report
            record("is_executable", PASS)
            evidence.update(
                original_params=original_params,
                original_answer=original_answer,
                rendered=rendered,
            )
            del probe

            # 3. has_dof: k sampled records, at least two distinct
            records = []
            try:
                for i in range(cfg.k_variants):
                    records.append(runtime.sample(derive_seed(rng_seed, "dof", i)))
                    report.variant_probe_count += 1
            except EfaCallError as exc:
                record("has_dof", FAIL, f"sample: {exc.error_type}: {exc.message}")
                skip_rest("has_dof")
                return report
            distinct = {_params_key(r) for r in records}
            if len(distinct) < 2:
                record(
                    "has_dof",
                    FAIL,
                    f"all {cfg.k_variants} sampled parameter records are identical",
                )
                skip_rest("has_dof")
                return report
            record("has_dof", PASS)

            # 4. is_single_valued: same record, same answer, every time
            for i, params in enumerate(records):
                answers = []
                try:
                    for _ in range(cfg.repeats):
                        answers.append(runtime.solve(params))
                except EfaCallError as exc:
                    record(
                        "is_single_valued",
                        FAIL,
                        f"solve on record {i}: {exc.error_type}: {exc.message}",
                    )
                    skip_rest("is_single_valued")
                    return report
                first = answers[0]
                for other in answers[1:]:
                    if not equivalent_text(first, other, cfg.answer_rel_tol):
                        record(
                            "is_single_valued",
                            FAIL,
                            f"record {i} solved to {first!r} then {other!r}",
                        )
                        skip_rest("is_single_valued")
                        return report
            record("is_single_valued", PASS)

            # 5. matches_original
            report.statement_similarity = token_similarity(rendered, statement)
            if not gold:
                record("matches_original", FAIL, "seed problem has no gold answer")
                return report
            if not equivalent_text(original_answer, gold, cfg.answer_rel_tol):
                record(
                    "matches_original",
                    FAIL,
                    f"solve(original) gave {original_answer!r}, gold is {gold!r}",
                )
                return report
            if cfg.strict_statement and report.statement_similarity < cfg.similarity_threshold:
                record(
                    "matches_original",
                    FAIL,
                    f"statement similarity {report.statement_similarity:.3f} below "
                    f"{cfg.similarity_threshold}",
                )
                return report
            record("matches_original", PASS)
            return report
    except EfaCallError as exc:
        # load failure surfaces when entering the runtime context
        record("is_executable", FAIL, f"load: {exc.error_type}: {exc.message}")
        skip_rest("is_executable")
        return report


def validate_candidate(
    candidate: CandidateProgram | Reject,
    seed_problem,
    runtime_factory,
    cfg: ValidationConfig | None = None,
    rng_seed: int = 0,
) -> tuple[TestReport, "ValidatedEfa | None"]:
    """run_all_tests plus, on a clean pass, the survivor bundle."""
    evidence: dict = {}
    report = run_all_tests(
        candidate, seed_problem, runtime_factory, cfg, rng_seed, _evidence=evidence
    )
    if not report.all_pass():
        return report, None
    efa = ValidatedEfa(
        seed_id=getattr(seed_problem, "id", ""),
        code=candidate.code,
        class_name=candidate.class_name,
        original_params=evidence["original_params"],
        original_answer=evidence["original_answer"],
        statement_similarity=report.statement_similarity,
        report=report,
    )
    return report, efa


@dataclass
class ValidatedEfa:
    """A candidate that passed all five tests, bundled with its evidence."""

    seed_id: str
    code: str
    class_name: str
    original_params: dict
    original_answer: str
    statement_similarity: float
    report: TestReport

    def to_payload(self) -> dict:
        return {
            "seed_id": self.seed_id,
            "code": self.code,
            "class_name": self.class_name,
            "original_params": self.original_params,
            "original_answer": self.original_answer,
            "statement_similarity": self.statement_similarity,
            "report": self.report.to_payload(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ValidatedEfa":
        return cls(
            seed_id=payload["seed_id"],
            code=payload["code"],
            class_name=payload["class_name"],
            original_params=payload["original_params"],
            original_answer=payload["original_answer"],
            statement_similarity=payload["statement_similarity"],
            report=TestReport.from_payload(payload["report"]),
        )
