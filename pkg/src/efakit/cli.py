"""Command-line surface over the pipeline.

Every command reads one config (file + flag overrides), writes its outputs
under a fresh run directory whose name embeds the config hash, and leaves
a manifest there. Exit codes: 0 success, 1 user error, 2 infrastructure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from pathlib import Path

from .answers import safe_last_boxed
from .config import ConfigError, RunConfig, load_config
from .extraction import load_profile
from .gateway import (
    Budget,
    Gateway,
    GatewayError,
    HttpBackend,
    RecordingBackend,
    ReplayBackend,
)
from .sandbox import SandboxError, WorkerPool, profile_command, runtime_factory
from .seeding import derive_seed
from .store import (
    IntegrityError,
    SeedProblem,
    Store,
    StoreError,
    StoreLockedError,
    canonical_payload,
    load_seed_problems,
)
from .validation import ValidatedEfa
from .workflows import (
    TeacherRecord,
    adversarial_search,
    augment_dataset,
    efa_hash,
    evaluate_solver,
    export_sft_dataset,
    faithfulness_probe,
    learnability_probe,
    overgenerate_filter,
    sample_variants,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFRA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def make_clock(deterministic: bool):
    if not deterministic:
        return time.time
    counter = itertools.count()
    return lambda: float(next(counter))


# ---------------------------------------------------------------------------
# run context


class RunContext:
    """Config, run directory, and lazily built shared resources."""

    def __init__(self, args):
        overrides = {
            name: getattr(args, name)
            for name in (
                "store_dir",
                "runs_dir",
                "global_seed",
                "deterministic_clock",
                "backend",
                "recording_path",
                "endpoint",
                "model",
                "runner_command",
                "templates_dir",
            )
            if getattr(args, name, None) is not None
        }
        self.cfg = load_config(args.config, overrides)
        self.command = args.command
        self.dry_run = args.dry_run
        self.clock = make_clock(self.cfg.deterministic_clock)
        self._explicit_run_dir = args.run_dir
        self._run_dir = None
        self._store = None
        self._pool = None

    # -- run directory & manifest

    @property
    def run_dir(self) -> Path:
        if self._run_dir is None:
            if self._explicit_run_dir is not None:
                path = Path(self._explicit_run_dir)
            else:
                stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime(self.clock()))
                base = Path(self.cfg.runs_dir) / f"{stamp}-{self.cfg.hash()}"
                path = base
                for suffix in itertools.count(1):
                    if not path.exists():
                        break
                    path = base.with_name(f"{base.name}-{suffix}")
            path.mkdir(parents=True, exist_ok=True)
            self._run_dir = path
            self._write_manifest()
        return self._run_dir

    def _write_manifest(self):
        manifest = {
            "command": self.command,
            "config_hash": self.cfg.hash(),
            "config": self.cfg.to_payload(),
            "created_at": 0.0 if self.cfg.deterministic_clock else time.time(),
        }
        path = self._run_dir / "manifest.json"
        path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def out_path(self, name: str) -> Path:
        return self.run_dir / name

    def write_jsonl(self, name: str, payloads) -> Path:
        path = self.out_path(name)
        with open(path, "w", encoding="utf-8") as fh:
            for payload in payloads:
                fh.write(canonical_payload(payload) + "\n")
        return path

    def write_json(self, name: str, payload) -> Path:
        path = self.out_path(name)
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        return path

    # -- shared resources

    def store(self, mode: str) -> Store:
        if self._store is not None and mode == "w" and self._store.mode == "r":
            self._store.close()
            self._store = None
        if self._store is None:
            self._store = Store(self.cfg.store_dir, mode=mode, clock=self.clock)
        return self._store

    def gateway(self) -> Gateway:
        cfg = self.cfg
        if cfg.backend == "replay":
            if not cfg.recording_path:
                raise ConfigError("replay backend needs recording_path")
            backend = ReplayBackend(cfg.recording_path)
        elif cfg.backend == "record":
            if not (cfg.endpoint and cfg.model and cfg.recording_path):
                raise ConfigError("record backend needs endpoint, model, recording_path")
            backend = RecordingBackend(
                HttpBackend(cfg.endpoint, cfg.model), cfg.recording_path
            )
        else:  # http
            if not (cfg.endpoint and cfg.model):
                raise ConfigError("http backend needs endpoint and model")
            backend = HttpBackend(cfg.endpoint, cfg.model)
        budget = Budget(
            max_requests=cfg.max_requests, max_tokens=cfg.max_request_tokens
        )
        return Gateway(
            backend,
            max_in_flight=cfg.max_in_flight,
            retry_max=cfg.retry_max,
            retry_base_ms=cfg.retry_base_ms,
            budget=budget,
        )

    def pool(self) -> WorkerPool:
        if self._pool is None:
            command = list(self.cfg.runner_command) or profile_command(
                load_profile("python")
            )
            self._pool = WorkerPool(
                command, self.cfg.resource_limits(), size=self.cfg.pool_size
            )
        return self._pool

    def runtime_factory(self):
        # spawn the pool on first use, not when the command is wired up
        def factory(code: str):
            return runtime_factory(self.pool())(code)

        return factory

    def close(self):
        if self._store is not None:
            self._store.close()
        if self._pool is not None:
            self._pool.close()

    # -- store views

    def stored_seeds(self) -> list[SeedProblem]:
        records = self.store("r").list_records("seed")
        seeds = [SeedProblem.from_payload(r.payload) for r in records]
        seeds.sort(key=lambda s: s.id)
        return seeds

    def stored_efas(self) -> list[tuple[str, ValidatedEfa]]:
        """(record_hash, efa) pairs ordered by the abstraction's identity."""
        records = self.store("r").list_records("efa")
        pairs = [(r.content_hash, ValidatedEfa.from_payload(r.payload)) for r in records]
        pairs.sort(key=lambda pair: (pair[1].seed_id, efa_hash(pair[1])))
        return pairs


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(ctx: RunContext, args) -> int:
    seeds, skips = load_seed_problems(args.corpus, args.schema)
    if ctx.dry_run:
        print(f"[dry-run] would ingest {len(seeds)} seeds ({len(skips)} skipped rows)")
        return EXIT_OK
    store = ctx.store("w")
    hashes, quarantined = store.ingest_seeds(seeds)
    ctx.write_json(
        "ingest_report.json",
        {
            "config_hash": ctx.cfg.hash(),
            "corpus": str(args.corpus),
            "schema": args.schema,
            "parsed": len(seeds),
            "skipped_rows": len(skips),
            "ingested": len(hashes),
            "quarantined": quarantined,
        },
    )
    print(
        f"ingested {len(hashes)} seeds, {quarantined} quarantined, "
        f"{len(skips)} rows skipped"
    )
    return EXIT_OK


def cmd_generate(ctx: RunContext, args) -> int:
    cfg = ctx.cfg
    n = args.n if args.n is not None else cfg.candidates_per_problem
    if args.corpus is not None:
        seeds, _ = load_seed_problems(args.corpus, args.schema)
    else:
        seeds = ctx.stored_seeds()
    seeds = [s for s in seeds if s.gold_answer]
    if ctx.dry_run:
        print(
            f"[dry-run] would draw {n} candidates for each of {len(seeds)} seeds "
            f"({n * len(seeds)} completions) via {cfg.backend} backend"
        )
        return EXIT_OK

    store = ctx.store("w")
    gateway = ctx.gateway()
    factory = ctx.runtime_factory()
    vcfg = cfg.validation_config()
    rows = []
    accepted = total = 0
    for index, seed in enumerate(sorted(seeds, key=lambda s: s.id)):
        result = overgenerate_filter(
            seed,
            n,
            gateway,
            factory,
            cfg=vcfg,
            store=store,
            templates_dir=cfg.templates_dir,
            rng_seed=derive_seed(cfg.global_seed, "generate", index),
        )
        accepted += result.accepted
        total += result.total
        rows.append(
            {
                "seed_id": seed.id,
                "accepted": result.accepted,
                "total": result.total,
                "partial": result.partial,
                "failure_histogram": result.failure_histogram,
            }
        )
        if result.partial:
            break
    ctx.write_json(
        "generate_report.json",
        {
            "config_hash": ctx.cfg.hash(),
            "n_per_seed": n,
            "seeds": rows,
            "overall": {"accepted": accepted, "total": total},
        },
    )
    print(f"accepted {accepted} of {total} candidates over {len(rows)} seeds")
    return EXIT_OK


def cmd_validate(ctx: RunContext, args) -> int:
    from .extraction import is_extractable
    from .validation import validate_candidate

    store = ctx.store("r" if ctx.dry_run else "w")
    candidates = store.list_records(
        "candidate", where=lambda p: "response" in p
    )
    if ctx.dry_run:
        print(f"[dry-run] would re-validate {len(candidates)} stored candidates")
        return EXIT_OK
    profile = load_profile("python")
    factory = ctx.runtime_factory()
    vcfg = ctx.cfg.validation_config()
    flips = []
    for record in candidates:
        payload = record.payload
        seed = SeedProblem.from_payload(store.find_seed(payload["seed_id"]).payload)
        candidate = is_extractable(payload["response"], profile)
        if not candidate:
            now = "fail"
        else:
            report, efa = validate_candidate(
                candidate, seed, factory, vcfg,
                rng_seed=derive_seed(ctx.cfg.global_seed, "validate"),
            )
            now = "pass" if efa is not None else "fail"
        was = payload["verdict"]
        if now != was:
            flips.append(
                {"seed_id": payload["seed_id"], "index": payload["index"],
                 "was": was, "now": now}
            )
    ctx.write_json(
        "validate_report.json",
        {
            "config_hash": ctx.cfg.hash(),
            "total": len(candidates),
            "unchanged": len(candidates) - len(flips),
            "flips": flips,
        },
    )
    print(f"re-validated {len(candidates)} candidates, {len(flips)} verdicts changed")
    return EXIT_OK


def cmd_sample(ctx: RunContext, args) -> int:
    count = args.count if args.count is not None else ctx.cfg.variants_per_efa
    pairs = ctx.stored_efas()
    if ctx.dry_run:
        print(f"[dry-run] would sample {count} variants for each of {len(pairs)} abstractions")
        return EXIT_OK
    store = ctx.store("w")
    factory = ctx.runtime_factory()
    rows = []
    for index, (record_id, efa) in enumerate(pairs):
        result = sample_variants(
            efa,
            count,
            factory,
            rng_seed=derive_seed(ctx.cfg.global_seed, "sample", index),
        )
        for variant in result.variants:
            payload = variant.to_payload()
            store.put_record("variant", payload, (record_id,))
            rows.append(payload)
        if result.exhausted:
            rows.append(
                {
                    "efa_hash": efa_hash(efa),
                    "exhausted": True,
                    "kept": len(result.variants),
                    "requested": count,
                }
            )
    path = ctx.write_jsonl("variants.jsonl", rows)
    print(f"sampled {store.count('variant')} variants into {path}")
    return EXIT_OK


def cmd_export_sft(ctx: RunContext, args) -> int:
    pairs = ctx.stored_efas()
    if ctx.dry_run:
        print(f"[dry-run] would export {len(pairs)} records")
        return EXIT_OK
    store = ctx.store("r")
    out = Path(args.out) if args.out else ctx.out_path("sft.jsonl")
    records = export_sft_dataset(
        [efa for _, efa in pairs], store, out, templates_dir=ctx.cfg.templates_dir
    )
    print(f"exported {len(records)} records to {out}")
    return EXIT_OK


def _load_teacher_records(path) -> list[TeacherRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                records.append(
                    TeacherRecord(
                        seed_id=row["seed_id"],
                        question=row["question"],
                        reasoning=row["reasoning"],
                        answer=row["answer"],
                    )
                )
            except KeyError as exc:
                raise UsageError(f"{path}:{line_no}: missing field {exc}") from exc
    return records


def cmd_augment(ctx: RunContext, args) -> int:
    records = _load_teacher_records(args.teacher_file)
    pairs = ctx.stored_efas()
    efas_by_seed = {}
    for _, efa in pairs:
        efas_by_seed.setdefault(efa.seed_id, efa)
    ratio = args.ratio if args.ratio is not None else ctx.cfg.ratio
    if ctx.dry_run:
        have = sum(1 for r in records if r.seed_id in efas_by_seed)
        print(
            f"[dry-run] would emit {len(records)} + {int(ratio * have)} records "
            f"({have} of {len(records)} seeds have abstractions)"
        )
        return EXIT_OK
    out = Path(args.out) if args.out else ctx.out_path("train.jsonl")
    report = augment_dataset(
        records,
        efas_by_seed,
        ctx.gateway(),
        ctx.runtime_factory(),
        out,
        ratio=ratio,
        rng_seed=derive_seed(ctx.cfg.global_seed, "augment"),
        teacher_samples=ctx.cfg.teacher_samples,
        rel_tol=ctx.cfg.answer_rel_tol,
        templates_dir=ctx.cfg.templates_dir,
    )
    ctx.write_json(
        "augment_report.json",
        {
            "config_hash": ctx.cfg.hash(),
            "emitted": report.emitted,
            "seed_records": report.seed_records,
            "variant_records": report.variant_records,
            "dropped": report.dropped,
            "out": str(report.out_path),
            "audit": str(report.audit_path),
        },
    )
    print(
        f"emitted {report.emitted} records ({report.variant_records} variants, "
        f"{len(report.dropped)} drops) to {out}"
    )
    return EXIT_OK


def _load_problems(path) -> list[tuple]:
    problems = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                ref = row.get("ref", f"problem:{line_no:05d}")
                problems.append((ref, row["question"], row["gold"]))
            except KeyError as exc:
                raise UsageError(f"{path}:{line_no}: missing field {exc}") from exc
    return problems


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise UsageError(f"bad k list {text!r}") from None
    if not ks:
        raise UsageError("empty k list")
    return ks


def cmd_eval(ctx: RunContext, args) -> int:
    problems = _load_problems(args.problems)
    budget = ctx.cfg.solver_budget()
    if args.n is not None:
        budget = type(budget)(
            n=args.n, temperature=budget.temperature, max_tokens=budget.max_tokens
        )
    ks = _parse_ks(args.k) if args.k else ctx.cfg.ks
    if ctx.dry_run:
        print(
            f"[dry-run] would grade {len(problems)} problems at n={budget.n}, "
            f"ks={list(ks)}"
        )
        return EXIT_OK
    store = ctx.store("w")
    records = evaluate_solver(
        problems,
        ctx.gateway(),
        budget,
        ks=ks,
        rel_tol=ctx.cfg.answer_rel_tol,
        templates_dir=ctx.cfg.templates_dir,
    )
    for record in records:
        store.put_record("eval", record.to_payload())
    path = ctx.write_jsonl("eval.jsonl", (r.to_payload() for r in records))
    solved = sum(1 for r in records if r.c > 0)
    print(f"graded {len(records)} problems ({solved} with at least one pass) into {path}")
    return EXIT_OK


def cmd_adversarial(ctx: RunContext, args) -> int:
    budget = args.budget if args.budget is not None else ctx.cfg.budget_variants
    pairs = ctx.stored_efas()
    if ctx.dry_run:
        print(
            f"[dry-run] would probe up to {budget} variants for each of "
            f"{len(pairs)} abstractions"
        )
        return EXIT_OK
    gateway = ctx.gateway()
    factory = ctx.runtime_factory()
    stop_on_first = not args.exhaustive if args.exhaustive is not None else ctx.cfg.stop_on_first
    rows = []
    found_count = 0
    for index, (_, efa) in enumerate(pairs):
        result = adversarial_search(
            efa,
            gateway,
            factory,
            budget_variants=budget,
            attempts_per_variant=ctx.cfg.attempts_per_variant,
            stop_on_first=stop_on_first,
            rng_seed=derive_seed(ctx.cfg.global_seed, "adversarial", index),
            rel_tol=ctx.cfg.answer_rel_tol,
            templates_dir=ctx.cfg.templates_dir,
        )
        found_count += result.found
        rows.append(
            {
                "efa_hash": efa_hash(efa),
                "seed_id": efa.seed_id,
                "found": result.found,
                "probed": result.probed,
                "hard_variants": [v.to_payload() for v in result.hard_variants],
            }
        )
    path = ctx.write_jsonl("adversarial.jsonl", rows)
    rate = found_count / len(pairs) if pairs else 0.0
    print(f"found hard variants for {found_count}/{len(pairs)} ({rate:.1%}) into {path}")
    return EXIT_OK


def cmd_probe_faithfulness(ctx: RunContext, args) -> int:
    pairs = ctx.stored_efas()
    if ctx.dry_run:
        print(f"[dry-run] would probe {len(pairs)} abstractions against their seeds")
        return EXIT_OK
    store = ctx.store("r")
    gateway = ctx.gateway()
    factory = ctx.runtime_factory()
    pcfg = ctx.cfg.probe_config()
    rows = []
    for index, (_, efa) in enumerate(pairs):
        seed = SeedProblem.from_payload(store.find_seed(efa.seed_id).payload)
        result = faithfulness_probe(
            seed,
            efa,
            gateway,
            factory,
            cfg=pcfg,
            rng_seed=derive_seed(ctx.cfg.global_seed, "faithfulness", index),
            rel_tol=ctx.cfg.answer_rel_tol,
            templates_dir=ctx.cfg.templates_dir,
        )
        rows.append(
            {
                "efa_hash": efa_hash(efa),
                "seed_id": efa.seed_id,
                "status": result.status,
                "gate_pass_rate": result.gate_pass_rate,
                "initial_pass1": result.initial_pass1,
                "assisted_pass1": result.assisted_pass1,
            }
        )
    path = ctx.write_jsonl("faithfulness.jsonl", rows)
    measured = [r for r in rows if r["status"] == "measured"]
    print(f"probed {len(rows)} abstractions ({len(measured)} measured) into {path}")
    return EXIT_OK


def cmd_probe_learnability(ctx: RunContext, args) -> int:
    pairs = ctx.stored_efas()
    if ctx.dry_run:
        print(f"[dry-run] would probe {len(pairs)} abstractions on held-out variants")
        return EXIT_OK
    gateway = ctx.gateway()
    factory = ctx.runtime_factory()
    pcfg = ctx.cfg.probe_config()
    rows = []
    for index, (_, efa) in enumerate(pairs):
        result = learnability_probe(
            efa,
            gateway,
            factory,
            cfg=pcfg,
            rng_seed=derive_seed(ctx.cfg.global_seed, "learnability", index),
            rel_tol=ctx.cfg.answer_rel_tol,
            templates_dir=ctx.cfg.templates_dir,
        )
        rows.append(
            {
                "efa_hash": efa_hash(efa),
                "seed_id": efa.seed_id,
                "status": result.status,
                "gate_pass_rate": result.gate_pass_rate,
                "without_pass1": result.without_pass1,
                "with_pass1": result.with_pass1,
            }
        )
    path = ctx.write_jsonl("learnability.jsonl", rows)
    measured = [r for r in rows if r["status"] == "measured"]
    print(f"probed {len(rows)} abstractions ({len(measured)} measured) into {path}")
    return EXIT_OK


def cmd_report(ctx: RunContext, args) -> int:
    store = ctx.store("r")
    candidates = store.list_records("candidate")
    if ctx.dry_run:
        print(f"[dry-run] would summarize {len(candidates)} candidate verdicts by {args.group_by}")
        return EXIT_OK
    groups: dict[str, dict[str, int]] = {}
    for record in candidates:
        seed_payload = store.find_seed(record.payload["seed_id"]).payload
        key = seed_payload.get(args.group_by)
        key = "unknown" if key is None else str(key)
        bucket = groups.setdefault(key, {"accepted": 0, "total": 0})
        bucket["total"] += 1
        bucket["accepted"] += record.payload["verdict"] == "pass"
    rows = []
    for key in sorted(groups):
        bucket = groups[key]
        rate = bucket["accepted"] / bucket["total"]
        rows.append(
            {
                args.group_by: key,
                "accepted": bucket["accepted"],
                "total": bucket["total"],
                "rate": rate,
            }
        )
        print(
            f"{args.group_by}={key}: {bucket['accepted']}/{bucket['total']} "
            f"({rate:.1%})"
        )
    ctx.write_json(
        "report.json",
        {"config_hash": ctx.cfg.hash(), "group_by": args.group_by, "groups": rows},
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="efakit", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None)
    common.add_argument("--store", dest="store_dir", default=None)
    common.add_argument("--runs-dir", dest="runs_dir", default=None)
    common.add_argument("--run-dir", default=None, help="exact output directory")
    common.add_argument("--seed", dest="global_seed", type=int, default=None)
    common.add_argument(
        "--deterministic-clock",
        dest="deterministic_clock",
        action="store_const",
        const=True,
        default=None,
    )
    common.add_argument("--backend", choices=("replay", "record", "http"), default=None)
    common.add_argument("--recording", dest="recording_path", default=None)
    common.add_argument("--endpoint", default=None)
    common.add_argument("--model", default=None)
    common.add_argument(
        "--runner",
        dest="runner_command",
        default=None,
        help="guest runner command, comma-separated argv",
    )
    common.add_argument("--templates-dir", dest="templates_dir", default=None)
    common.add_argument("--dry-run", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common])
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument(
        "--schema",
        choices=("math_jsonl", "numina_jsonl", "generic_jsonl"),
        default="generic_jsonl",
    )
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("generate", parents=[common])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument(
        "--schema",
        choices=("math_jsonl", "numina_jsonl", "generic_jsonl"),
        default="generic_jsonl",
    )
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("validate", parents=[common])
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("sample", parents=[common])
    p.add_argument("--count", type=int, default=None)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("export-sft", parents=[common])
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_export_sft)

    p = sub.add_parser("augment", parents=[common])
    p.add_argument("--teacher-file", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("eval", parents=[common])
    p.add_argument("--problems", required=True, type=Path)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", default=None, help="comma-separated k values")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("adversarial", parents=[common])
    p.add_argument("--budget", type=int, default=None)
    p.add_argument(
        "--exhaustive",
        action="store_const",
        const=True,
        default=None,
        help="keep probing after the first hard variant",
    )
    p.set_defaults(fn=cmd_adversarial)

    p = sub.add_parser("probe-faithfulness", parents=[common])
    p.set_defaults(fn=cmd_probe_faithfulness)

    p = sub.add_parser("probe-learnability", parents=[common])
    p.set_defaults(fn=cmd_probe_learnability)

    p = sub.add_parser("report", parents=[common])
    p.add_argument("--group-by", choices=("level", "category"), default="level")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    ctx = None
    try:
        ctx = RunContext(args)
        return args.fn(ctx, args)
    except (UsageError, ConfigError, StoreError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, (StoreLockedError, IntegrityError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INFRA
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GatewayError, SandboxError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    finally:
        if ctx is not None:
            ctx.close()


if __name__ == "__main__":
    sys.exit(main())
