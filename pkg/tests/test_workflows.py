import json
import math
import re
from fractions import Fraction

import pytest

from conftest import candidate_code, load_fixture_seeds
from inproc import inproc_runtime_factory
from efakit.answers import equivalent, normalize
from efakit.extraction import extract_code_blocks, is_extractable, load_profile
from efakit.gateway import (
    Backend,
    Budget,
    Completion,
    Gateway,
    MockBackend,
)
from efakit.store import SeedProblem, Store
from efakit.validation import ValidationConfig, validate_candidate
from efakit.workflows import (
    AdversarialResult,
    ProbeConfig,
    SolverBudget,
    TeacherRecord,
    adversarial_search,
    augment_dataset,
    evaluate_solver,
    export_sft_dataset,
    faithfulness_probe,
    learnability_probe,
    overgenerate_filter,
    sample_variants,
)

PROFILE = load_profile("python")

DOUBLER = (
    "class Doubler(BaseModel):\n"
    "    n: int\n"
    "    @classmethod\n"
    "    def original(cls) -> 'Self':\n"
    "        return cls(n=4)\n"
    "    @classmethod\n"
    "    def sample(cls) -> 'Self':\n"
    "        return cls(n=random.randint(1, 10**6))\n"
    "    def render(self) -> str:\n"
    "        return f'Compute twice the quantity {self.n}.'\n"
    "    def solve(self) -> str:\n"
    "        return str(self.n * 2)\n"
)

QUANTITY_RE = re.compile(r"quantity (\d+)\.")


def fenced(code: str) -> str:
    return f"```python\n{code}\n```"


def make_efa(code: str, seed: SeedProblem):
    candidate = is_extractable(fenced(code), PROFILE)
    assert candidate
    report, efa = validate_candidate(
        candidate, seed, inproc_runtime_factory, ValidationConfig()
    )
    assert efa is not None, report.first_failure()
    return efa


def doubler_seed(seed_id: str = "s1") -> SeedProblem:
    return SeedProblem(
        id=seed_id,
        statement="What is 4 doubled?",
        solution="Doubling gives $4 \\cdot 2 = \\boxed{8}$.",
        gold_answer="8",
        source="fixtures",
    )


def target_question(prompt: str) -> str:
    return prompt.rstrip("\n").rsplit("Problem: ", 1)[1]


def has_shots(prompt: str) -> bool:
    return "Here are some examples:" in prompt


class TestOvergenerateFilter:
    def test_two_good_three_bad(self, tmp_path):
        seeds = load_fixture_seeds()
        seed = seeds["MATH_train_2738"]
        good = candidate_code("geometry_cylinder")
        responses = [
            fenced(good),
            "I could not produce a program for this one.",
            fenced(candidate_code("syntax_error")),
            fenced(candidate_code("cylinder_wrong_answer")),
            fenced(good + "\n# second draft"),
        ]
        gateway = Gateway(MockBackend(responses))
        with Store(tmp_path / "store", mode="w") as store:
            result = overgenerate_filter(
                seed, 5, gateway, inproc_runtime_factory, store=store
            )
            assert len(result.efas) == 2
            assert result.total == 5
            assert result.success_rate == Fraction(2, 5)
            assert result.failure_histogram["is_extractable"] == 1
            assert result.failure_histogram["is_executable"] == 1
            assert result.failure_histogram["matches_original"] == 1
            assert not result.partial

            assert store.count("candidate") == 5
            assert store.count("efa") == 2
            for record in store.list_records("efa"):
                parent = store.get_record(record.parent_ids[0])
                assert parent.kind == "seed"
                assert parent.payload["id"] == seed.id

    def test_zero_candidates_rejected(self):
        seed = doubler_seed()
        with pytest.raises(ValueError):
            overgenerate_filter(seed, 0, Gateway(MockBackend([])), inproc_runtime_factory)

    def test_goldless_seed_rejected(self):
        seed = SeedProblem(
            id="x", statement="q", solution="no box here", gold_answer=None
        )
        with pytest.raises(ValueError, match="gold"):
            overgenerate_filter(seed, 1, Gateway(MockBackend([])), inproc_runtime_factory)

    def test_budget_exhaustion_marks_partial(self):
        seed = doubler_seed()
        gateway = Gateway(
            MockBackend([fenced(DOUBLER)]), budget=Budget(max_requests=0)
        )
        result = overgenerate_filter(seed, 1, gateway, inproc_runtime_factory)
        assert result.partial
        assert result.total == 0
        assert result.efas == []

    def test_works_without_store(self):
        seed = doubler_seed()
        gateway = Gateway(MockBackend([fenced(DOUBLER)]))
        result = overgenerate_filter(seed, 1, gateway, inproc_runtime_factory)
        assert len(result.efas) == 1
        assert result.efas[0].original_answer == "8"


class TestSampleVariants:
    def test_cylinder_variants_follow_the_rule(self):
        seeds = load_fixture_seeds()
        efa = make_efa(
            candidate_code("geometry_cylinder"), seeds["MATH_train_2738"]
        )
        result = sample_variants(efa, 3, inproc_runtime_factory, rng_seed=7)
        assert len(result.variants) == 3
        assert not result.exhausted
        volumes = [v.params["original_volume"] for v in result.variants]
        assert len(set(volumes)) == 3
        for variant in result.variants:
            expected = str(12 * variant.params["original_volume"])
            assert equivalent(normalize(expected), variant.answer)
            assert variant.params != efa.original_params

    def test_single_variant_differs_from_original(self):
        efa = make_efa(DOUBLER, doubler_seed())
        result = sample_variants(efa, 1, inproc_runtime_factory)
        assert len(result.variants) == 1
        assert result.variants[0].params != efa.original_params

    def test_dedup_discards_original_hits(self):
        half_original = DOUBLER.replace(
            "return cls(n=random.randint(1, 10**6))",
            "return cls(n=random.choice([4, random.randint(10, 10**6)]))",
        )
        efa = make_efa(half_original, doubler_seed())
        result = sample_variants(efa, 5, inproc_runtime_factory, rng_seed=3)
        assert len(result.variants) == 5
        assert result.attempts > 5
        assert all(v.params["n"] != 4 for v in result.variants)

    def test_exhaustion_reports_partial_list(self):
        # only one distinct non-original parameter value exists
        narrow = DOUBLER.replace(
            "return cls(n=random.randint(1, 10**6))",
            "return cls(n=random.randint(4, 5))",
        )
        efa = make_efa(narrow, doubler_seed())
        result = sample_variants(efa, 3, inproc_runtime_factory)
        assert result.exhausted
        assert len(result.variants) == 1
        assert result.variants[0].params["n"] == 5
        assert result.attempts == 30

    def test_exclude_previously_kept(self):
        efa = make_efa(DOUBLER, doubler_seed())
        first = sample_variants(efa, 2, inproc_runtime_factory, rng_seed=1)
        again = sample_variants(
            efa, 2, inproc_runtime_factory, rng_seed=1, exclude=first.variants
        )
        kept = {v.params["n"] for v in first.variants}
        assert all(v.params["n"] not in kept for v in again.variants)

    def test_same_seed_same_variants(self):
        efa = make_efa(DOUBLER, doubler_seed())
        a = sample_variants(efa, 4, inproc_runtime_factory, rng_seed=9)
        b = sample_variants(efa, 4, inproc_runtime_factory, rng_seed=9)
        assert [v.to_payload() for v in a.variants] == [
            v.to_payload() for v in b.variants
        ]

    def test_count_floor(self):
        efa = make_efa(DOUBLER, doubler_seed())
        with pytest.raises(ValueError):
            sample_variants(efa, 0, inproc_runtime_factory)


class TestExportSft:
    def make_store_with_seed(self, tmp_path, seed):
        store = Store(tmp_path / "store", mode="w")
        store.put_record("seed", seed.to_payload())
        return store

    def test_per_efa_granularity_shared_instruction(self, tmp_path):
        seed = doubler_seed()
        efa1 = make_efa(DOUBLER, seed)
        efa2 = make_efa(DOUBLER + "\n# alternate derivation", seed)
        out = tmp_path / "sft.jsonl"
        with self.make_store_with_seed(tmp_path, seed) as store:
            records = export_sft_dataset([efa1, efa2], store, out)
        assert len(records) == 2
        assert records[0].instruction == records[1].instruction
        assert seed.statement in records[0].instruction
        assert records[0].response != records[1].response

    def test_response_fencing_round_trips(self, tmp_path):
        seed = doubler_seed()
        efa = make_efa(DOUBLER, seed)
        out = tmp_path / "sft.jsonl"
        with self.make_store_with_seed(tmp_path, seed) as store:
            records = export_sft_dataset([efa], store, out)
        blocks = extract_code_blocks(records[0].response)
        assert len(blocks) == 1
        assert blocks[0].text.strip() == efa.code.strip()

    def test_output_order_is_input_order_independent(self, tmp_path):
        seed_a = doubler_seed("a_seed")
        seed_b = doubler_seed("b_seed")
        efa_a = make_efa(DOUBLER, seed_a)
        efa_b = make_efa(DOUBLER, seed_b)
        store = Store(tmp_path / "store", mode="w")
        store.put_record("seed", seed_a.to_payload())
        store.put_record("seed", seed_b.to_payload())
        with store:
            first = tmp_path / "one.jsonl"
            second = tmp_path / "two.jsonl"
            export_sft_dataset([efa_b, efa_a], store, first)
            export_sft_dataset([efa_a, efa_b], store, second)
        assert first.read_bytes() == second.read_bytes()

    def test_dangling_seed_is_hard_error(self, tmp_path):
        from efakit.store import StoreError

        seed = doubler_seed()
        efa = make_efa(DOUBLER, seed)
        with Store(tmp_path / "store", mode="w") as store:
            with pytest.raises(StoreError):
                export_sft_dataset([efa], store, tmp_path / "sft.jsonl")

    def test_empty_export_warns(self, tmp_path):
        out = tmp_path / "sft.jsonl"
        with Store(tmp_path / "store", mode="w") as store:
            with pytest.warns(UserWarning, match="empty"):
                records = export_sft_dataset([], store, out)
        assert records == []
        assert out.read_text() == ""


def correct_teacher(prompt, cfg, index):
    quantity = int(QUANTITY_RE.search(prompt).group(1))
    return f"Doubling gives $\\boxed{{{quantity * 2}}}$."


class TestAugmentDataset:
    def records_and_efas(self, efa_seed_ids=("s1", "s2", "s3")):
        records = [
            TeacherRecord(
                seed_id=f"s{i}",
                question=f"Seed question {i}?",
                reasoning=f"Work it out: $\\boxed{{{i}}}$.",
                answer=str(i),
            )
            for i in range(1, 5)
        ]
        efas = {}
        for seed_id in efa_seed_ids:
            seed = SeedProblem(
                id=seed_id,
                statement="What is 4 doubled?",
                solution="Doubling gives $\\boxed{8}$.",
                gold_answer="8",
            )
            efas[seed_id] = make_efa(DOUBLER, seed)
        return records, efas

    def test_counting_identity(self, tmp_path):
        records, efas = self.records_and_efas()
        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            records,
            efas,
            Gateway(MockBackend(correct_teacher)),
            inproc_runtime_factory,
            out,
            ratio=1.0,
        )
        # S + floor(r * E) = 4 + 3
        assert report.emitted == 7
        assert report.seed_records == 4
        assert report.variant_records == 3
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 7
        assert all(set(row) == {"question", "reasoning", "answer"} for row in rows)

    def test_interleaving_order(self, tmp_path):
        records, efas = self.records_and_efas(efa_seed_ids=("s1", "s3"))
        out = tmp_path / "train.jsonl"
        augment_dataset(
            records,
            efas,
            Gateway(MockBackend(correct_teacher)),
            inproc_runtime_factory,
            out,
            ratio=1.0,
        )
        audit = [
            json.loads(line)
            for line in (tmp_path / "train.jsonl.audit.jsonl").read_text().splitlines()
        ]
        kinds = [(row["kind"], row["seed_id"]) for row in audit]
        assert kinds == [
            ("seed", "s1"),
            ("variant", "s1"),
            ("seed", "s2"),
            ("seed", "s3"),
            ("variant", "s3"),
            ("seed", "s4"),
        ]

    def test_ratio_zero_is_identity(self, tmp_path):
        records, efas = self.records_and_efas()
        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            records, efas, Gateway(MockBackend([])), inproc_runtime_factory, out, ratio=0.0
        )
        assert report.emitted == 4
        assert report.variant_records == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert [row["question"] for row in rows] == [r.question for r in records]

    def test_fractional_ratio_floor(self, tmp_path):
        records, efas = self.records_and_efas()  # E = 3
        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            records,
            efas,
            Gateway(MockBackend(correct_teacher)),
            inproc_runtime_factory,
            out,
            ratio=0.5,
        )
        assert report.emitted == 4 + 1  # floor(0.5 * 3)
        assert report.variant_records == 1

    def test_unverified_seed_record_dropped(self, tmp_path):
        records, efas = self.records_and_efas()
        bad = TeacherRecord(
            seed_id="s9",
            question="Q?",
            reasoning="Confused: $\\boxed{99}$.",
            answer="100",
        )
        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            [bad] + records,
            efas,
            Gateway(MockBackend(correct_teacher)),
            inproc_runtime_factory,
            out,
            ratio=0.0,
        )
        assert report.emitted == 4
        assert any(d["stage"] == "seed_reverify" for d in report.dropped)

    def test_unverifiable_teacher_never_emits(self, tmp_path):
        records, efas = self.records_and_efas(efa_seed_ids=("s1",))
        wrong_teacher = MockBackend(lambda p, c, i: "Ehh, $\\boxed{0}$.")
        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            records,
            efas,
            Gateway(wrong_teacher),
            inproc_runtime_factory,
            out,
            ratio=1.0,
        )
        assert report.variant_records == 0
        assert report.emitted == 4
        assert any(d["stage"] == "teacher" for d in report.dropped)

    def test_first_verified_sample_wins(self, tmp_path):
        records, efas = self.records_and_efas(efa_seed_ids=("s1",))

        def flaky_teacher(prompt, cfg, index):
            if index % 5 < 2:  # first two samples per question are wrong
                return "No idea: $\\boxed{-1}$."
            quantity = int(QUANTITY_RE.search(prompt).group(1))
            return f"Take {quantity} twice: $\\boxed{{{2 * quantity}}}$. (sample {index % 5})"

        out = tmp_path / "train.jsonl"
        report = augment_dataset(
            records,
            efas,
            Gateway(MockBackend(flaky_teacher)),
            inproc_runtime_factory,
            out,
            ratio=1.0,
        )
        assert report.variant_records == 1
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        variant_rows = [r for r in rows if "twice the quantity" in r["question"]]
        assert "(sample 2)" in variant_rows[0]["reasoning"]

    def test_audit_rows_reverify_through_runtime(self, tmp_path):
        records, efas = self.records_and_efas()
        out = tmp_path / "train.jsonl"
        augment_dataset(
            records,
            efas,
            Gateway(MockBackend(correct_teacher)),
            inproc_runtime_factory,
            out,
            ratio=1.0,
        )
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        audit = [
            json.loads(line)
            for line in (tmp_path / "train.jsonl.audit.jsonl").read_text().splitlines()
        ]
        assert len(audit) == len(rows)
        for meta, row in zip(audit, rows):
            if meta["kind"] != "variant":
                continue
            efa = efas[meta["seed_id"]]
            with inproc_runtime_factory(efa.code) as runtime:
                resolved = runtime.solve(meta["params"])
            assert equivalent(normalize(resolved), normalize(row["answer"]))


class FlakyBackend(Backend):
    """First `errors` completions of every request fail."""

    id = "flaky"
    supports_batch = True

    def __init__(self, text: str, errors: int):
        self.text = text
        self.errors = errors

    def request(self, prompt, cfg, n):
        out = []
        for i in range(n):
            if i < self.errors:
                out.append(
                    Completion(text="", finish_reason="error", backend_id=self.id)
                )
            else:
                out.append(
                    Completion(text=self.text, finish_reason="stop", backend_id=self.id)
                )
        return out


class TestEvaluateSolver:
    def test_always_correct(self):
        gateway = Gateway(MockBackend(lambda p, c, i: "Easy: $\\boxed{4}$."))
        records = evaluate_solver(
            [("Q?", "4")], gateway, SolverBudget(n=5), ks=(1, 5)
        )
        assert len(records) == 1
        assert records[0].c == 5
        assert records[0].pass_at == {1: 1.0, 5: 1.0}
        assert records[0].majority_at == {1: True, 5: True}

    def test_rigged_pattern_matches_enumeration(self):
        # first 5 of 25 are correct: c = 5
        def rig(prompt, cfg, index):
            return "$\\boxed{4}$" if index < 5 else "$\\boxed{0}$"

        gateway = Gateway(MockBackend(rig))
        records = evaluate_solver(
            [("Q?", "4")], gateway, SolverBudget(n=25), ks=(5,)
        )
        expected = 1 - math.comb(20, 5) / math.comb(25, 5)
        assert records[0].c == 5
        assert records[0].pass_at[5] == pytest.approx(expected, abs=1e-12)

    def test_equivalence_grading(self):
        gateway = Gateway(MockBackend(lambda p, c, i: "It is $\\boxed{0.5}$."))
        records = evaluate_solver([("Q?", "1/2")], gateway, SolverBudget(n=4), ks=(1,))
        assert records[0].c == 4

    def test_refs_and_order_preserved(self):
        gateway = Gateway(MockBackend(lambda p, c, i: "$\\boxed{1}$"))
        records = evaluate_solver(
            [("ref_b", "B?", "1"), ("ref_a", "A?", "2")],
            gateway,
            SolverBudget(n=2),
            ks=(1,),
        )
        assert [r.problem_ref for r in records] == ["ref_b", "ref_a"]
        assert records[0].c == 2
        assert records[1].c == 0

    def test_k_outside_budget_rejected(self):
        with pytest.raises(ValueError):
            evaluate_solver(
                [("Q?", "1")], Gateway(MockBackend([])), SolverBudget(n=2), ks=(3,)
            )

    def test_error_completions_reduce_n(self):
        gateway = Gateway(FlakyBackend("$\\boxed{4}$", errors=2), retry_max=1)
        with pytest.warns(UserWarning, match="failed"):
            records = evaluate_solver(
                [("Q?", "4")], gateway, SolverBudget(n=5), ks=(1, 5)
            )
        assert records[0].n == 3
        assert records[0].c == 3
        # k=5 no longer fits the reduced sample
        assert set(records[0].pass_at) == {1}

    def test_total_failure_skips_problem(self):
        gateway = Gateway(FlakyBackend("", errors=5), retry_max=1)
        with pytest.warns(UserWarning, match="skipped"):
            records = evaluate_solver(
                [("Q?", "4")], gateway, SolverBudget(n=5), ks=(1,)
            )
        assert records == []


def threshold_solver(limit: int):
    """Correct answers only for quantities <= limit."""

    def rig(prompt, cfg, index):
        quantity = int(QUANTITY_RE.search(target_question(prompt)).group(1))
        if quantity > limit:
            return "Too hard: $\\boxed{-1}$."
        return f"$\\boxed{{{2 * quantity}}}$"

    return rig


class TestAdversarialSearch:
    def efa(self, span="random.randint(1, 100)"):
        code = DOUBLER.replace("random.randint(1, 10**6)", span)
        return make_efa(code, doubler_seed())

    def test_hard_variants_are_exactly_the_oracle_set(self):
        efa = self.efa()
        gateway = Gateway(MockBackend(threshold_solver(50)))
        result = adversarial_search(
            efa,
            gateway,
            inproc_runtime_factory,
            budget_variants=30,
            stop_on_first=False,
            rng_seed=21,
        )
        assert result.probed == 30
        hard = {v.params["n"] for v in result.hard_variants}
        probed_hard = {
            entry["params"]["n"] for entry in result.log if not entry["solved"]
        }
        assert hard == probed_hard
        assert all(n > 50 for n in hard)
        assert all(
            entry["params"]["n"] <= 50
            for entry in result.log
            if entry["solved"]
        )
        assert result.found == bool(hard)

    def test_perfect_solver_exhausts_budget(self):
        efa = self.efa("random.randint(1, 10**6)")
        gateway = Gateway(MockBackend(threshold_solver(10**7)))
        result = adversarial_search(
            efa, gateway, inproc_runtime_factory, budget_variants=50
        )
        assert not result.found
        assert result.hard_variants == []
        assert result.probed == 50

    def test_stop_on_first(self):
        efa = self.efa("random.randint(1, 10**6)")
        gateway = Gateway(MockBackend(threshold_solver(0)))
        result = adversarial_search(
            efa, gateway, inproc_runtime_factory, budget_variants=50
        )
        assert result.found
        assert result.probed == 1
        assert len(result.hard_variants) == 1

    def test_variants_never_repeat_original(self):
        efa = self.efa("random.randint(1, 6)")  # tiny space around original 4
        gateway = Gateway(MockBackend(threshold_solver(10**7)))
        result = adversarial_search(
            efa, gateway, inproc_runtime_factory, budget_variants=50
        )
        seen = [entry["params"]["n"] for entry in result.log]
        assert 4 not in seen
        assert len(seen) == len(set(seen))
        # 5 distinct non-original values at most
        assert result.probed <= 5


class TestFaithfulnessProbe:
    SEED_Q = "What is 4 doubled?"

    def rigged_solver(self):
        """Fails the seed unless a worked example is present; solves variants."""

        def rig(prompt, cfg, index):
            target = target_question(prompt)
            match = QUANTITY_RE.search(target)
            if match:
                return f"$\\boxed{{{2 * int(match.group(1))}}}$"
            if has_shots(prompt):
                return "With the example, $\\boxed{8}$."
            return "Stuck: $\\boxed{-1}$."

        return rig

    def test_uplift_measured(self):
        seed = doubler_seed()
        efa = make_efa(DOUBLER, seed)
        gateway = Gateway(MockBackend(self.rigged_solver()))
        result = faithfulness_probe(seed, efa, gateway, inproc_runtime_factory)
        assert result.status == "measured"
        assert result.gate_pass_rate == 0.0
        assert result.initial_pass1 == 0.0
        assert result.assisted_pass1 == 1.0
        assert result.variant is not None
        assert result.variant.params != efa.original_params

    def test_easy_seed_skipped_by_gate(self):
        seed = doubler_seed()
        efa = make_efa(DOUBLER, seed)
        gateway = Gateway(MockBackend(lambda p, c, i: "$\\boxed{8}$"))
        result = faithfulness_probe(seed, efa, gateway, inproc_runtime_factory)
        assert result.status == "skipped"
        assert result.gate_pass_rate == 1.0
        assert result.assisted_pass1 is None

    def test_no_solvable_variant_is_inconclusive(self):
        seed = doubler_seed()
        efa = make_efa(DOUBLER, seed)
        gateway = Gateway(MockBackend(lambda p, c, i: "$\\boxed{-1}$"))
        result = faithfulness_probe(seed, efa, gateway, inproc_runtime_factory)
        assert result.status == "inconclusive"
        assert result.initial_pass1 == 0.0
        assert result.assisted_pass1 is None

    def test_mismatched_seed_rejected(self):
        efa = make_efa(DOUBLER, doubler_seed("s1"))
        other = doubler_seed("other")
        with pytest.raises(ValueError):
            faithfulness_probe(
                other, efa, Gateway(MockBackend([])), inproc_runtime_factory
            )


class TestLearnabilityProbe:
    def rigged_solver(self):
        """Wrong on the first question it ever sees, right afterwards."""
        state = {"first": None}

        def rig(prompt, cfg, index):
            target = target_question(prompt)
            if state["first"] is None:
                state["first"] = target
            if target == state["first"] and not has_shots(prompt):
                return "Stumped: $\\boxed{-1}$."
            quantity = int(QUANTITY_RE.search(target).group(1))
            return f"$\\boxed{{{2 * quantity}}}$"

        return rig

    def test_uplift_on_holdout(self):
        efa = make_efa(DOUBLER, doubler_seed())
        gateway = Gateway(MockBackend(self.rigged_solver()))
        result = learnability_probe(efa, gateway, inproc_runtime_factory)
        assert result.status == "measured"
        assert result.without_pass1 == 0.0
        assert result.with_pass1 == 1.0
        assert result.holdout is not None
        assert result.shot_variant is not None
        assert result.shot_variant.params != result.holdout.params
        assert result.shot_variant.params != efa.original_params

    def test_easy_holdout_skipped(self):
        efa = make_efa(DOUBLER, doubler_seed())

        def always_right(prompt, cfg, index):
            quantity = int(QUANTITY_RE.search(target_question(prompt)).group(1))
            return f"$\\boxed{{{2 * quantity}}}$"

        result = learnability_probe(
            efa, Gateway(MockBackend(always_right)), inproc_runtime_factory
        )
        assert result.status == "skipped"

    def test_unsolvable_everywhere_is_inconclusive(self):
        efa = make_efa(DOUBLER, doubler_seed())
        gateway = Gateway(MockBackend(lambda p, c, i: "$\\boxed{-1}$"))
        result = learnability_probe(efa, gateway, inproc_runtime_factory)
        assert result.status == "inconclusive"
        assert result.without_pass1 == 0.0
        assert result.with_pass1 is None


class TestProbeConfig:
    def test_bounds(self):
        with pytest.raises(ValueError):
            ProbeConfig(gate_n=0)
        with pytest.raises(ValueError):
            ProbeConfig(gate_threshold=1.5)
        with pytest.raises(ValueError):
            SolverBudget(n=0)
