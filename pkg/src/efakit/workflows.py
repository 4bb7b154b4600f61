"""End-to-end pipelines over the synthesis, validation, and grading layers.

Each operation here is a pure orchestration: prompts come from
``prompting``, completions from a ``Gateway``, guest execution from a
runtime factory, persistence from ``Store``. Nothing in this module talks
to the network or the filesystem on its own behalf except the explicit
dataset writers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .answers import (
    CanonicalAnswer,
    EvalRecord,
    equivalent,
    grade_attempts,
    normalize,
    safe_last_boxed,
)
from .extraction import load_profile, is_extractable
from .gateway import (
    BudgetExceededError,
    Gateway,
    GatewayError,
    SamplingConfig,
)
from .prompting import (
    FewShotExample,
    build_augment_prompt,
    build_efagen_prompt,
    build_solver_prompt,
    load_template,
)
from .sandbox import EfaCallError
from .seeding import derive_seed
from .store import SeedProblem, Store, StoreError, canonical_payload, content_hash
from .validation import TEST_NAMES, ValidatedEfa, ValidationConfig, validate_candidate

DEFAULT_REL_TOL = 1e-6

RuntimeFactory = Callable[[str], object]


def _solver_config(n: int, max_tokens: int = 2048, temperature: float = 0.7) -> SamplingConfig:
    # single responses are greedy, multi-sample runs use the stated temperature
    temp = 0.0 if n == 1 else temperature
    return SamplingConfig(temperature=temp, max_tokens=max_tokens, n=n)


def _params_key(params: Mapping) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class SolverBudget:
    """Sampling budget for one solver evaluation."""

    n: int = 25
    temperature: float = 0.7
    max_tokens: int = 2048

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("solver budget needs n >= 1")


@dataclass(frozen=True)
class ProblemVariant:
    """One sampled instance of a validated abstraction."""

    efa_hash: str
    params: dict
    question: str
    answer: CanonicalAnswer
    rng_seed: int

    def to_payload(self) -> dict:
        return {
            "efa_hash": self.efa_hash,
            "params": self.params,
            "question": self.question,
            "answer_text": self.answer.source_text,
            "answer_canonical": self.answer.canonical_text(),
            "rng_seed": self.rng_seed,
        }


@dataclass
class VariantSampleResult:
    variants: list[ProblemVariant]
    attempts: int
    exhausted: bool


@dataclass
class SynthesisResult:
    """Outcome of one overgenerate-and-filter pass over a seed."""

    efas: list[ValidatedEfa]
    reports: list
    failure_histogram: dict[str, int]
    accepted: int
    total: int
    partial: bool = False

    @property
    def success_rate(self) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.accepted, self.total)


@dataclass(frozen=True)
class SftRecord:
    instruction: str
    response: str

    def to_payload(self) -> dict:
        return {"instruction": self.instruction, "response": self.response}


@dataclass(frozen=True)
class TeacherRecord:
    """A seed training record: question, worked reasoning, gold answer."""

    seed_id: str
    question: str
    reasoning: str
    answer: str


@dataclass
class AugmentReport:
    emitted: int
    seed_records: int
    variant_records: int
    dropped: list[dict]
    out_path: Path
    audit_path: Path


@dataclass
class AdversarialResult:
    found: bool
    hard_variants: list[ProblemVariant]
    probed: int
    log: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class ProbeConfig:
    """Knobs for the in-context uplift probes."""

    gate_n: int = 5
    gate_threshold: float = 0.5
    max_variants: int = 8

    def __post_init__(self):
        if self.gate_n < 1 or self.max_variants < 1:
            raise ValueError("probe budgets must be >= 1")
        if not (0.0 <= self.gate_threshold <= 1.0):
            raise ValueError("gate threshold must be in [0, 1]")


@dataclass
class FaithfulnessResult:
    status: str  # measured | skipped | inconclusive
    gate_pass_rate: float
    initial_pass1: float | None = None
    assisted_pass1: float | None = None
    variant: ProblemVariant | None = None


@dataclass
class LearnabilityResult:
    status: str  # measured | skipped | inconclusive
    gate_pass_rate: float
    holdout: ProblemVariant | None = None
    without_pass1: float | None = None
    with_pass1: float | None = None
    shot_variant: ProblemVariant | None = None


# ---------------------------------------------------------------------------
# synthesis


def overgenerate_filter(
    seed: SeedProblem,
    n: int,
    gateway: Gateway,
    runtime_factory: RuntimeFactory,
    cfg: ValidationConfig | None = None,
    store: Store | None = None,
    templates_dir=None,
    sampling: SamplingConfig | None = None,
    rng_seed: int = 0,
) -> SynthesisResult:
    """Draw n candidate programs for one seed and keep the validated ones.

    All candidates and their diagnostic reports are persisted when a store
    is given; budget exhaustion returns whatever was processed so far with
    ``partial`` set.
    """
    if n < 1:
        raise ValueError("candidate count must be >= 1")
    if not seed.gold_answer:
        raise ValueError(f"seed {seed.id} has no gold answer; cannot validate against it")
    if cfg is None:
        cfg = ValidationConfig()

    template = load_template("functionalize", templates_dir)
    prompt = build_efagen_prompt(seed, template)
    if sampling is None:
        sampling = SamplingConfig(n=n)
    elif sampling.n != n:
        raise ValueError("sampling.n must equal the candidate count")

    partial = False
    try:
        completions = gateway.complete(prompt, sampling)
    except BudgetExceededError:
        completions = []
        partial = True

    profile = load_profile("python")
    seed_hash = None
    if store is not None:
        seed_hash = store.put_record("seed", seed.to_payload())

    efas: list[ValidatedEfa] = []
    reports = []
    histogram = {name: 0 for name in TEST_NAMES}
    accepted = 0
    for index, completion in enumerate(completions):
        if completion.finish_reason == "error":
            histogram["is_extractable"] += 1
            candidate_payload = {
                "seed_id": seed.id,
                "index": index,
                "verdict": "gateway_error",
                "detail": completion.text,
            }
            if store is not None:
                store.put_record("candidate", candidate_payload, (seed_hash,))
            continue

        candidate = is_extractable(completion.text, profile)
        if not candidate:
            histogram["is_extractable"] += 1
            candidate_payload = {
                "seed_id": seed.id,
                "index": index,
                "verdict": "fail",
                "failing_test": "is_extractable",
                "reason": candidate.reason,
                "response": completion.text,
            }
            if store is not None:
                store.put_record("candidate", candidate_payload, (seed_hash,))
            continue

        report, efa = validate_candidate(
            candidate, seed, runtime_factory, cfg, rng_seed=rng_seed
        )
        reports.append(report)
        candidate_payload = {
            "seed_id": seed.id,
            "index": index,
            "verdict": "pass" if efa is not None else "fail",
            "failing_test": report.first_failure(),
            "report": report.to_payload(),
            "response": completion.text,
        }
        if store is not None:
            store.put_record("candidate", candidate_payload, (seed_hash,))
        if efa is None:
            histogram[report.first_failure()] += 1
            continue

        accepted += 1
        efas.append(efa)
        if store is not None:
            store.put_record("efa", efa.to_payload(), (seed_hash,))

    return SynthesisResult(
        efas=efas,
        reports=reports,
        failure_histogram=histogram,
        accepted=accepted,
        total=len(completions),
        partial=partial,
    )


# ---------------------------------------------------------------------------
# variant sampling


def efa_hash(efa: ValidatedEfa) -> str:
    """Stable identity of an abstraction: the program and its provenance.

    Validation evidence is deliberately left out; its timings vary from
    run to run while the abstraction itself does not.
    """
    return content_hash(
        {
            "seed_id": efa.seed_id,
            "code": efa.code,
            "class_name": efa.class_name,
            "original_params": efa.original_params,
            "original_answer": efa.original_answer,
        }
    )


def _draw_variant(runtime, efa_digest: str, rng_seed: int) -> ProblemVariant:
    params = runtime.sample(rng_seed)
    question = runtime.render(params)
    answer_text = runtime.solve(params)
    return ProblemVariant(
        efa_hash=efa_digest,
        params=params,
        question=question,
        answer=normalize(answer_text),
        rng_seed=rng_seed,
    )


def sample_variants(
    efa: ValidatedEfa,
    count: int,
    runtime_factory: RuntimeFactory,
    max_attempts: int | None = None,
    rng_seed: int = 0,
    exclude: Sequence[ProblemVariant] = (),
) -> VariantSampleResult:
    """Sample ``count`` variants whose parameters differ from the original
    and from each other. Failed solves and duplicates consume attempts."""
    if count < 1:
        raise ValueError("variant count must be >= 1")
    if max_attempts is None:
        max_attempts = 10 * count

    digest = efa_hash(efa)
    seen = {_params_key(efa.original_params)}
    seen.update(_params_key(v.params) for v in exclude)
    kept: list[ProblemVariant] = []
    attempts = 0

    with runtime_factory(efa.code) as runtime:
        while len(kept) < count and attempts < max_attempts:
            attempt_seed = derive_seed(rng_seed, "variant", attempts)
            attempts += 1
            try:
                variant = _draw_variant(runtime, digest, attempt_seed)
            except EfaCallError:
                continue
            key = _params_key(variant.params)
            if key in seen:
                continue
            seen.add(key)
            kept.append(variant)

    return VariantSampleResult(
        variants=kept, attempts=attempts, exhausted=len(kept) < count
    )


# ---------------------------------------------------------------------------
# dataset export


def export_sft_dataset(
    efas: Sequence[ValidatedEfa],
    store: Store,
    out_path,
    templates_dir=None,
) -> list[SftRecord]:
    """Write one instruction/response pair per validated abstraction.

    The instruction is the exact synthesis prompt for the originating seed;
    the response is the program in a fenced block. Output order is
    (seed_id, content hash) so reruns are byte-identical.
    """
    template = load_template("functionalize", templates_dir)
    keyed = []
    for efa in efas:
        record = store.find_seed(efa.seed_id)
        seed = SeedProblem.from_payload(record.payload)
        instruction = build_efagen_prompt(seed, template)
        response = f"```python\n{efa.code.rstrip()}\n```"
        keyed.append(((efa.seed_id, efa_hash(efa)), SftRecord(instruction, response)))

    keyed.sort(key=lambda pair: pair[0])
    records = [record for _, record in keyed]
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(canonical_payload(record.to_payload()) + "\n")
    if not records:
        warnings.warn("export produced an empty dataset", stacklevel=2)
    return records


def augment_dataset(
    teacher_records: Sequence[TeacherRecord],
    efas_by_seed: Mapping[str, ValidatedEfa],
    gateway: Gateway,
    runtime_factory: RuntimeFactory,
    out_path,
    ratio: float = 1.0,
    rng_seed: int = 0,
    teacher_samples: int = 5,
    rel_tol: float = DEFAULT_REL_TOL,
    templates_dir=None,
) -> AugmentReport:
    """Interleave verified variant records into a seed training set.

    With S retained seed records of which E have an abstraction, the output
    holds S + floor(ratio * E) records; every variant record's reasoning is
    teacher-sampled and verified against the variant's solved answer before
    it is emitted.
    """
    if ratio < 0:
        raise ValueError("ratio must be >= 0")

    dropped: list[dict] = []
    retained: list[TeacherRecord] = []
    for record in teacher_records:
        boxed = safe_last_boxed(record.reasoning)
        if boxed is None or not equivalent(
            normalize(boxed), normalize(record.answer), rel_tol
        ):
            dropped.append(
                {
                    "seed_id": record.seed_id,
                    "stage": "seed_reverify",
                    "reason": "reasoning does not conclude with the gold answer",
                }
            )
            continue
        retained.append(record)

    with_efa = [r for r in retained if r.seed_id in efas_by_seed]
    extra_total = int(ratio * len(with_efa))
    base, remainder = (
        divmod(extra_total, len(with_efa)) if with_efa else (0, 0)
    )
    quotas: dict[int, int] = {}
    efa_rank = 0
    for index, record in enumerate(retained):
        if record.seed_id in efas_by_seed:
            quotas[index] = base + (1 if efa_rank < remainder else 0)
            efa_rank += 1
        else:
            quotas[index] = 0

    out_path = Path(out_path)
    audit_path = out_path.with_name(out_path.name + ".audit.jsonl")
    emitted = seed_count = variant_count = 0

    with open(out_path, "w", encoding="utf-8") as out, open(
        audit_path, "w", encoding="utf-8"
    ) as audit:

        def emit(row: dict, provenance: dict) -> None:
            nonlocal emitted
            out.write(canonical_payload(row) + "\n")
            audit.write(canonical_payload({"index": emitted, **provenance}) + "\n")
            emitted += 1

        for index, record in enumerate(retained):
            emit(
                {
                    "question": record.question,
                    "reasoning": record.reasoning,
                    "answer": record.answer,
                },
                {"kind": "seed", "seed_id": record.seed_id},
            )
            seed_count += 1

            quota = quotas[index]
            if quota == 0:
                continue
            efa = efas_by_seed[record.seed_id]
            result = sample_variants(
                efa,
                quota,
                runtime_factory,
                rng_seed=derive_seed(rng_seed, "augment", index),
            )
            if result.exhausted:
                dropped.append(
                    {
                        "seed_id": record.seed_id,
                        "stage": "variant_sampling",
                        "reason": f"only {len(result.variants)} of {quota} variants found",
                    }
                )
            for variant in result.variants:
                reasoning = _teach_variant(
                    gateway, variant, teacher_samples, rel_tol, templates_dir, dropped
                )
                if reasoning is None:
                    continue
                emit(
                    {
                        "question": variant.question,
                        "reasoning": reasoning,
                        "answer": variant.answer.source_text,
                    },
                    {
                        "kind": "variant",
                        "seed_id": record.seed_id,
                        "efa_hash": variant.efa_hash,
                        "params": variant.params,
                        "rng_seed": variant.rng_seed,
                    },
                )
                variant_count += 1

    return AugmentReport(
        emitted=emitted,
        seed_records=seed_count,
        variant_records=variant_count,
        dropped=dropped,
        out_path=out_path,
        audit_path=audit_path,
    )


def _teach_variant(
    gateway, variant, teacher_samples, rel_tol, templates_dir, dropped
) -> str | None:
    """First teacher reasoning that concludes with the variant's answer."""
    prompt = build_augment_prompt(variant.question, templates_dir)
    try:
        completions = gateway.complete(
            prompt,
            SamplingConfig(temperature=0.7, max_tokens=2048, n=teacher_samples),
        )
    except BudgetExceededError:
        raise
    except GatewayError as exc:
        dropped.append(
            {
                "seed_id": None,
                "stage": "teacher",
                "rng_seed": variant.rng_seed,
                "reason": f"gateway failure: {exc}",
            }
        )
        return None

    for completion in completions:
        if completion.finish_reason == "error":
            continue
        boxed = safe_last_boxed(completion.text)
        if boxed is not None and equivalent(
            normalize(boxed), variant.answer, rel_tol
        ):
            return completion.text
    dropped.append(
        {
            "seed_id": None,
            "stage": "teacher",
            "rng_seed": variant.rng_seed,
            "reason": "no teacher sample verified against the solved answer",
        }
    )
    return None


# ---------------------------------------------------------------------------
# evaluation


def evaluate_solver(
    problems: Sequence,
    gateway: Gateway,
    budget: SolverBudget | None = None,
    ks: Sequence[int] = (1,),
    rel_tol: float = DEFAULT_REL_TOL,
    templates_dir=None,
) -> list[EvalRecord]:
    """Sample ``budget.n`` solutions per problem and grade the boxed answers.

    Problems are (question, gold) pairs or (ref, question, gold) triples.
    Completions that errored out reduce that problem's sample count; a
    problem with no usable completions is skipped with a warning.
    """
    if budget is None:
        budget = SolverBudget()
    if any(not (1 <= k <= budget.n) for k in ks):
        raise ValueError("every k must lie in [1, budget.n]")

    normalized = []
    for index, problem in enumerate(problems):
        if len(problem) == 3:
            ref, question, gold = problem
        else:
            question, gold = problem
            ref = f"problem:{index:05d}"
        normalized.append((ref, question, gold))

    prompts = [
        build_solver_prompt(question, templates_dir=templates_dir)
        for _, question, _ in normalized
    ]
    config = SamplingConfig(
        temperature=budget.temperature, max_tokens=budget.max_tokens, n=budget.n
    )
    batches = gateway.complete_many(prompts, config)

    records: list[EvalRecord] = []
    for (ref, _, gold), completions in zip(normalized, batches):
        texts = [c.text for c in completions if c.finish_reason != "error"]
        if not texts:
            warnings.warn(f"{ref}: no usable completions, skipped", stacklevel=2)
            continue
        if len(texts) < budget.n:
            warnings.warn(
                f"{ref}: {budget.n - len(texts)} completions failed, "
                f"grading {len(texts)}",
                stacklevel=2,
            )
        attempts = [safe_last_boxed(text) for text in texts]
        usable_ks = [k for k in ks if k <= len(attempts)]
        records.append(grade_attempts(ref, gold, attempts, usable_ks, rel_tol))
    return records


def _ask(gateway, question, n, rel_tol, templates_dir, shots=()) -> list[str]:
    """Solver texts for one question; error completions become misses."""
    prompt = build_solver_prompt(question, shots=shots, templates_dir=templates_dir)
    completions = gateway.complete(prompt, _solver_config(n))
    return [c.text for c in completions if c.finish_reason != "error"]


def _solved(texts: Sequence[str], answer: CanonicalAnswer, rel_tol) -> str | None:
    """The first text whose final boxed answer matches, else None."""
    for text in texts:
        boxed = safe_last_boxed(text)
        if boxed is not None and equivalent(normalize(boxed), answer, rel_tol):
            return text
    return None


def adversarial_search(
    efa: ValidatedEfa,
    gateway: Gateway,
    runtime_factory: RuntimeFactory,
    budget_variants: int = 50,
    attempts_per_variant: int = 1,
    stop_on_first: bool = True,
    rng_seed: int = 0,
    rel_tol: float = DEFAULT_REL_TOL,
    templates_dir=None,
) -> AdversarialResult:
    """Probe sampled variants until one defeats the solver.

    A variant counts as unsolved when none of the solver's sampled answers
    is equivalent to the variant's solved answer.
    """
    if budget_variants < 1:
        raise ValueError("variant budget must be >= 1")

    digest = efa_hash(efa)
    seen = {_params_key(efa.original_params)}
    hard: list[ProblemVariant] = []
    log: list[dict] = []
    probed = 0
    draw_attempts = 0
    max_draw_attempts = 10 * budget_variants

    with runtime_factory(efa.code) as runtime:
        while probed < budget_variants and draw_attempts < max_draw_attempts:
            attempt_seed = derive_seed(rng_seed, "adversarial", draw_attempts)
            draw_attempts += 1
            try:
                variant = _draw_variant(runtime, digest, attempt_seed)
            except EfaCallError:
                continue
            key = _params_key(variant.params)
            if key in seen:
                continue
            seen.add(key)

            probed += 1
            texts = _ask(
                gateway, variant.question, attempts_per_variant, rel_tol, templates_dir
            )
            solved = _solved(texts, variant.answer, rel_tol) is not None
            log.append(
                {
                    "rng_seed": variant.rng_seed,
                    "params": variant.params,
                    "solved": solved,
                }
            )
            if not solved:
                hard.append(variant)
                if stop_on_first:
                    break

    return AdversarialResult(
        found=bool(hard), hard_variants=hard, probed=probed, log=log
    )


# ---------------------------------------------------------------------------
# in-context uplift probes


def _gate_pass_rate(gateway, question, gold, cfg, rel_tol, templates_dir) -> float:
    texts = _ask(gateway, question, cfg.gate_n, rel_tol, templates_dir)
    if not texts:
        return 0.0
    correct = sum(
        1
        for text in texts
        if (boxed := safe_last_boxed(text)) is not None
        and equivalent(normalize(boxed), gold, rel_tol)
    )
    return correct / len(texts)


def _pass1(gateway, question, gold, rel_tol, templates_dir, shots=()) -> float:
    texts = _ask(gateway, question, 1, rel_tol, templates_dir, shots=shots)
    return 1.0 if _solved(texts, gold, rel_tol) is not None else 0.0


def _find_solved_variant(
    gateway, efa, runtime_factory, cfg, rng_seed, rel_tol, templates_dir, exclude=()
) -> tuple[ProblemVariant, str] | None:
    """First sampled variant the solver answers correctly, with its text."""
    result = sample_variants(
        efa,
        cfg.max_variants,
        runtime_factory,
        rng_seed=rng_seed,
        exclude=exclude,
    )
    for variant in result.variants:
        texts = _ask(gateway, variant.question, 1, rel_tol, templates_dir)
        text = _solved(texts, variant.answer, rel_tol)
        if text is not None:
            return variant, text
    return None


def faithfulness_probe(
    seed: SeedProblem,
    efa: ValidatedEfa,
    gateway: Gateway,
    runtime_factory: RuntimeFactory,
    cfg: ProbeConfig | None = None,
    rng_seed: int = 0,
    rel_tol: float = DEFAULT_REL_TOL,
    templates_dir=None,
) -> FaithfulnessResult:
    """Does solving a variant teach the solver to solve the seed?

    Only hard seeds are probed (multi-sample pass rate under the gate
    threshold); the uplift measurement itself is greedy single-response.
    """
    if cfg is None:
        cfg = ProbeConfig()
    if efa.seed_id != seed.id:
        raise ValueError("abstraction does not derive from this seed")
    gold = normalize(seed.gold_answer)

    gate = _gate_pass_rate(
        gateway, seed.statement, gold, cfg, rel_tol, templates_dir
    )
    if gate >= cfg.gate_threshold:
        return FaithfulnessResult(status="skipped", gate_pass_rate=gate)

    initial = _pass1(gateway, seed.statement, gold, rel_tol, templates_dir)
    found = _find_solved_variant(
        gateway,
        efa,
        runtime_factory,
        cfg,
        derive_seed(rng_seed, "faithfulness"),
        rel_tol,
        templates_dir,
    )
    if found is None:
        return FaithfulnessResult(
            status="inconclusive", gate_pass_rate=gate, initial_pass1=initial
        )
    variant, solution_text = found
    shot = FewShotExample(instruction=variant.question, response=solution_text)
    assisted = _pass1(
        gateway, seed.statement, gold, rel_tol, templates_dir, shots=(shot,)
    )
    return FaithfulnessResult(
        status="measured",
        gate_pass_rate=gate,
        initial_pass1=initial,
        assisted_pass1=assisted,
        variant=variant,
    )


def learnability_probe(
    efa: ValidatedEfa,
    gateway: Gateway,
    runtime_factory: RuntimeFactory,
    cfg: ProbeConfig | None = None,
    rng_seed: int = 0,
    rel_tol: float = DEFAULT_REL_TOL,
    templates_dir=None,
) -> LearnabilityResult:
    """Same uplift measurement against a fresh held-out variant."""
    if cfg is None:
        cfg = ProbeConfig()

    holdout_result = sample_variants(
        efa, 1, runtime_factory, rng_seed=derive_seed(rng_seed, "holdout")
    )
    if not holdout_result.variants:
        return LearnabilityResult(status="inconclusive", gate_pass_rate=0.0)
    holdout = holdout_result.variants[0]

    gate = _gate_pass_rate(
        gateway, holdout.question, holdout.answer, cfg, rel_tol, templates_dir
    )
    if gate >= cfg.gate_threshold:
        return LearnabilityResult(
            status="skipped", gate_pass_rate=gate, holdout=holdout
        )

    without = _pass1(gateway, holdout.question, holdout.answer, rel_tol, templates_dir)
    found = _find_solved_variant(
        gateway,
        efa,
        runtime_factory,
        cfg,
        derive_seed(rng_seed, "learnability"),
        rel_tol,
        templates_dir,
        exclude=(holdout,),
    )
    if found is None:
        return LearnabilityResult(
            status="inconclusive",
            gate_pass_rate=gate,
            holdout=holdout,
            without_pass1=without,
        )
    shot_variant, solution_text = found
    shot = FewShotExample(instruction=shot_variant.question, response=solution_text)
    with_shot = _pass1(
        gateway, holdout.question, holdout.answer, rel_tol, templates_dir, shots=(shot,)
    )
    return LearnabilityResult(
        status="measured",
        gate_pass_rate=gate,
        holdout=holdout,
        without_pass1=without,
        with_pass1=with_shot,
        shot_variant=shot_variant,
    )
