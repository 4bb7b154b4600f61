"""Pull candidate programs out of raw model responses.

A response may contain prose, several fenced code blocks, or nothing usable.
Extraction scans markdown fences, finds blocks declaring a class with the
four methods the guest contract requires (original, sample, render, solve),
and returns the last qualifying block; models often emit a corrected
version after a false start, so last wins. Everything here is purely
structural: no guest-language parsing or execution, just line patterns from
the guest profile. Running the code is the sandbox's job.

Rejection is a value, not an exception: an unusable response is an expected
outcome that downstream statistics count.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class GuestProfile:
    """Structural description of one guest language."""

    name: str
    required_methods: tuple[str, ...]
    class_pattern: str
    method_pattern: str
    language_tags: tuple[str, ...]
    runner_command: tuple[str, ...]
    preloaded_names: tuple[str, ...] = ()

    def class_re(self) -> re.Pattern:
        return re.compile(self.class_pattern)

    def method_re(self, method: str) -> re.Pattern:
        return re.compile(self.method_pattern.format(method=re.escape(method)))


def load_profile(name: str, profiles_dir: str | Path | None = None) -> GuestProfile:
    if profiles_dir is not None:
        raw = (Path(profiles_dir) / f"{name}.json").read_text(encoding="utf-8")
    else:
        ref = resources.files("efakit") / "profiles" / f"{name}.json"
        try:
            raw = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ValueError(f"no guest profile named {name!r}") from None
    data = json.loads(raw)
    return GuestProfile(
        name=data["name"],
        required_methods=tuple(data["required_methods"]),
        class_pattern=data["class_pattern"],
        method_pattern=data["method_pattern"],
        language_tags=tuple(data.get("language_tags", ())),
        runner_command=tuple(data.get("runner_command", ())),
        preloaded_names=tuple(data.get("preloaded_names", ())),
    )


@dataclass(frozen=True)
class CodeBlock:
    text: str
    info: str  # language tag on the opening fence, may be ""
    unterminated: bool = False


@dataclass(frozen=True)
class CandidateProgram:
    raw_response: str
    code: str
    class_name: str
    methods_found: frozenset[str]
    block_index: int
    guest_profile: str = "python"

    def to_payload(self) -> dict:
        return {
            "raw_response": self.raw_response,
            "code": self.code,
            "class_name": self.class_name,
            "methods_found": sorted(self.methods_found),
            "block_index": self.block_index,
            "guest_profile": self.guest_profile,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "CandidateProgram":
        return cls(
            raw_response=payload["raw_response"],
            code=payload["code"],
            class_name=payload["class_name"],
            methods_found=frozenset(payload["methods_found"]),
            block_index=payload["block_index"],
            guest_profile=payload.get("guest_profile", "python"),
        )


@dataclass(frozen=True)
class Reject:
    """Structured reason a response produced no candidate."""

    reason: str  # "no_block" | "no_class" | "missing_methods" | "empty_block"
    missing: tuple[str, ...] = ()

    def __bool__(self):
        return False


_FENCE_RE = re.compile(r"^[ \t]*(`{3,})(.*)$")


def extract_code_blocks(response: str) -> list[CodeBlock]:
    """All fenced blocks in order. Inner text is verbatim, fences excluded.

    An unclosed fence at EOF yields its remainder flagged unterminated.
    """
    blocks: list[CodeBlock] = []
    lines = response.split("\n")
    inside = False
    info = ""
    fence = ""
    buf: list[str] = []
    for line in lines:
        m = _FENCE_RE.match(line)
        if not inside:
            if m:
                inside = True
                fence = m.group(1)
                info = m.group(2).strip()
                buf = []
        else:
            if m and m.group(1)[: len(fence)] == fence and not m.group(2).strip():
                blocks.append(CodeBlock("\n".join(buf), info))
                inside = False
            else:
                buf.append(line)
    if inside:
        blocks.append(CodeBlock("\n".join(buf), info, unterminated=True))
    return blocks


def _classes_in_block(text: str, profile: GuestProfile) -> list[tuple[str, frozenset[str]]]:
    """(class name, methods found in its indentation scope) for each class."""
    class_re = profile.class_re()
    method_res = {m: profile.method_re(m) for m in profile.required_methods}
    lines = text.split("\n")
    results = []
    for i, line in enumerate(lines):
        m = class_re.match(line)
        if not m:
            continue
        indent = len(line) - len(line.lstrip())
        found = set()
        for j in range(i + 1, len(lines)):
            body_line = lines[j]
            if body_line.strip():
                body_indent = len(body_line) - len(body_line.lstrip())
                if body_indent <= indent:
                    break
            for name, rx in method_res.items():
                if rx.match(body_line):
                    found.add(name)
        results.append((m.group(1), frozenset(found)))
    return results


def is_extractable(
    response: str, profile: GuestProfile
) -> CandidateProgram | Reject:
    """The structural gate: find a usable program or say why there is none.

    Scans fenced blocks whose language tag is allowed by the profile; the
    last block containing a class that declares every required method wins.
    When several classes in that block qualify, the last declared one is
    reported (models append fixed versions).
    """
    blocks = extract_code_blocks(response)
    relevant = [
        (i, b)
        for i, b in enumerate(blocks)
        if not profile.language_tags or b.info.lower() in profile.language_tags
    ]
    if not relevant:
        return Reject("no_block")
    required = frozenset(profile.required_methods)
    best_near_miss: frozenset[str] = frozenset()
    saw_class = False
    for index, block in reversed(relevant):
        if not block.text.strip():
            continue
        classes = _classes_in_block(block.text, profile)
        if classes:
            saw_class = True
        qualifying = [(name, found) for name, found in classes if found >= required]
        if qualifying:
            name, found = qualifying[-1]
            return CandidateProgram(
                raw_response=response,
                code=block.text,
                class_name=name,
                methods_found=found,
                block_index=index,
                guest_profile=profile.name,
            )
        for _, found in classes:
            if len(found) > len(best_near_miss):
                best_near_miss = found
    if not any(b.text.strip() for _, b in relevant):
        return Reject("empty_block")
    if not saw_class:
        return Reject("no_class")
    return Reject("missing_methods", missing=tuple(sorted(required - best_near_miss)))
