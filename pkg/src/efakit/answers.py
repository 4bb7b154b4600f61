"""Answer normalization, equivalence, and solver-accuracy estimators.

Math answers arrive as LaTeX-ish strings from three directions: gold answers
boxed inside reference solutions, strings returned by generated programs'
``solve`` methods, and free-form model output. Grading has to treat
``\\frac{1}{2}``, ``1/2`` and ``0.5`` as the same thing without ever treating
``i`` and ``-i`` as the same thing. The approach here is a small closed
taxonomy: every answer string canonicalizes to one of six kinds (rational,
decimal, symbolic token, tuple, interval, raw) and equivalence is defined
kind-by-kind. Exact comparison is tried first (Fraction arithmetic); floats
fall back to a relative tolerance.

Also hosts the evaluation estimators (unbiased pass@k, majority@k) because
they are meaningless without the equivalence relation.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

DEFAULT_REL_TOL = 1e-6

RATIONAL = "rational"
DECIMAL = "decimal"
SYMBOLIC = "symbolic_token"
TUPLE = "tuple"
INTERVAL = "interval"
RAW = "raw"


class BoxedExtractionError(ValueError):
    """Raised when a \\boxed{...} span has unbalanced braces.

    ``position`` is the character offset of the offending ``\\boxed`` in the
    original text.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


def last_boxed(text: str) -> str | None:
    """Return the content of the last balanced ``\\boxed{...}`` span.

    Returns None when the text contains no boxed span at all. Raises
    BoxedExtractionError when the last ``\\boxed{`` never closes.
    """
    marker = "\\boxed"
    start = text.rfind(marker)
    if start < 0:
        return None
    i = start + len(marker)
    # Tolerate whitespace between \boxed and its brace.
    while i < len(text) and text[i] in " \t":
        i += 1
    if i >= len(text) or text[i] != "{":
        # `\boxed 4`-style (no braces) is out of contract; treat as a miss
        # unless an earlier balanced span exists.
        earlier = text[:start]
        return last_boxed(earlier) if marker in earlier else None
    depth = 0
    for j in range(i, len(text)):
        ch = text[j]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1 : j]
    raise BoxedExtractionError("unbalanced braces in boxed span", start)


def safe_last_boxed(text: str) -> str | None:
    """last_boxed for grading paths: malformed spans count as a miss."""
    try:
        return last_boxed(text)
    except BoxedExtractionError:
        return None


@dataclass(frozen=True)
class CanonicalAnswer:
    """A parsed answer. ``value`` depends on ``kind``:

    rational -> Fraction, decimal -> float, symbolic_token -> str,
    tuple -> tuple[CanonicalAnswer, ...],
    interval -> (lo: CanonicalAnswer, hi: CanonicalAnswer, lo_open, hi_open),
    raw -> str (the stripped source).
    """

    kind: str
    value: object
    unit: str | None = None
    source_text: str = ""

    def key(self) -> tuple:
        """Hashable identity ignoring the source text."""
        if self.kind == TUPLE:
            return (TUPLE, tuple(e.key() for e in self.value), self.unit)
        if self.kind == INTERVAL:
            lo, hi, lo_open, hi_open = self.value
            return (INTERVAL, lo.key(), hi.key(), lo_open, hi_open, self.unit)
        return (self.kind, self.value, self.unit)

    def canonical_text(self) -> str:
        """Render a string that normalizes back to the same answer."""
        if self.kind == RATIONAL:
            body = str(self.value)
        elif self.kind == DECIMAL:
            body = repr(self.value)
        elif self.kind == SYMBOLIC:
            body = str(self.value)
        elif self.kind == TUPLE:
            return "(" + ", ".join(e.canonical_text() for e in self.value) + ")"
        elif self.kind == INTERVAL:
            lo, hi, lo_open, hi_open = self.value
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            return f"{left}{lo.canonical_text()}, {hi.canonical_text()}{right}"
        else:
            return str(self.value)
        if self.unit == "degree":
            body += "^\\circ"
        return body


# LaTeX spacing macros carry no meaning for comparison.
_SPACING_RE = re.compile(r"\\[,;:!]|~")
_LEFTRIGHT_RE = re.compile(r"\\left\s*|\\right\s*")
_FRAC_RE = re.compile(
    r"^([+-]?)\\[dt]?frac\s*\{\s*(-?\d+)\s*\}\s*\{\s*(-?\d+)\s*\}$"
)
_SLASH_RE = re.compile(r"^([+-]?\d+)\s*/\s*(-?\d+)$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_GROUPED_INT_RE = re.compile(r"^[+-]?\d{1,3}(?:,\d{3})+$")
_FLOAT_RE = re.compile(r"^[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?$")
_DEGREE_RE = re.compile(r"^(.*?)\s*(?:\^\s*(?:\{\s*\\circ\s*\}|\\circ)|°)$")


def _strip_wrappers(s: str) -> str:
    """Peel $...$ and whole-string \\boxed{...} layers until stable."""
    while True:
        s = s.strip()
        if len(s) >= 2 and s.startswith("$") and s.endswith("$"):
            s = s[1:-1]
            continue
        if s.startswith("\\boxed"):
            try:
                inner = last_boxed(s)
            except BoxedExtractionError:
                break
            # Only unwrap when the box spans the whole string.
            if inner is not None and s == f"\\boxed{{{inner}}}":
                s = inner
                continue
        break
    return s


def _split_top_level(s: str) -> list[str]:
    parts, depth, buf = [], 0, []
    for ch in s:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def _parse_number(s: str) -> tuple[str, object] | None:
    """Try rational/decimal parses. Returns (kind, value) or None."""
    m = _FRAC_RE.match(s)
    if m:
        sign, num, den = m.groups()
        if int(den) == 0:
            return None
        frac = Fraction(int(num), int(den))
        return (RATIONAL, -frac if sign == "-" else frac)
    m = _SLASH_RE.match(s)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            return None
        return (RATIONAL, Fraction(num, den))
    if _GROUPED_INT_RE.match(s):
        s = s.replace(",", "")
    if _INT_RE.match(s):
        return (RATIONAL, Fraction(int(s)))
    if _FLOAT_RE.match(s):
        return (DECIMAL, float(s))
    return None


def normalize(text: str) -> CanonicalAnswer:
    """Parse an answer string into its canonical form.

    Never raises on content: anything unparseable becomes a symbolic token
    (whitespace and LaTeX spacing removed) or, for empty input, a raw answer.
    """
    source = text
    s = _strip_wrappers(_SPACING_RE.sub("", text))
    s = _LEFTRIGHT_RE.sub("", s).strip()
    if not s:
        return CanonicalAnswer(RAW, source.strip(), None, source)

    # Sequence forms first: tuples and intervals.
    if len(s) >= 2 and s[0] in "([" and s[-1] in ")]":
        inner = s[1:-1]
        parts = [p.strip() for p in _split_top_level(inner)]
        ends = (s[0], s[-1])
        if len(parts) == 2 and all(parts) and ends != ("(", ")"):
            lo, hi = normalize(parts[0]), normalize(parts[1])
            return CanonicalAnswer(
                INTERVAL, (lo, hi, s[0] == "(", s[-1] == ")"), None, source
            )
        if len(parts) >= 2 and all(parts):
            elems = tuple(normalize(p) for p in parts)
            return CanonicalAnswer(TUPLE, elems, None, source)
        if len(parts) == 1 and ends == ("(", ")") and parts[0]:
            return normalize(parts[0])

    unit = None
    m = _DEGREE_RE.match(s)
    if m and m.group(1):
        parsed = _parse_number(m.group(1).strip())
        if parsed is not None:
            unit = "degree"
            s = m.group(1).strip()

    parsed = _parse_number(s)
    if parsed is not None:
        kind, value = parsed
        return CanonicalAnswer(kind, value, unit, source)

    token = re.sub(r"\s+", "", s)
    return CanonicalAnswer(SYMBOLIC, token, None, source)


def _numeric_equal(a: CanonicalAnswer, b: CanonicalAnswer, rel_tol: float) -> bool:
    if a.unit != b.unit:
        return False
    # Exact route: everything representable as a Fraction compares exactly.
    fa = a.value if a.kind == RATIONAL else Fraction(a.value)
    fb = b.value if b.kind == RATIONAL else Fraction(b.value)
    if fa == fb:
        return True
    if a.kind == RATIONAL and b.kind == RATIONAL:
        return False
    return math.isclose(float(fa), float(fb), rel_tol=rel_tol, abs_tol=0.0)


def equivalent(
    a: CanonicalAnswer, b: CanonicalAnswer, rel_tol: float = DEFAULT_REL_TOL
) -> bool:
    """Kind-aware answer equivalence.

    Rational/decimal compare numerically (exact first, then relative
    tolerance); symbolic tokens compare by exact token; tuples element-wise;
    intervals by bounds and openness. Mixed structural kinds never match.
    """
    numeric = (RATIONAL, DECIMAL)
    if a.kind in numeric and b.kind in numeric:
        return _numeric_equal(a, b, rel_tol)
    if a.kind != b.kind:
        return False
    if a.kind == SYMBOLIC:
        return a.value == b.value
    if a.kind == TUPLE:
        if len(a.value) != len(b.value):
            return False
        return all(
            equivalent(x, y, rel_tol) for x, y in zip(a.value, b.value)
        )
    if a.kind == INTERVAL:
        alo, ahi, alo_open, ahi_open = a.value
        blo, bhi, blo_open, bhi_open = b.value
        return (
            alo_open == blo_open
            and ahi_open == bhi_open
            and equivalent(alo, blo, rel_tol)
            and equivalent(ahi, bhi, rel_tol)
        )
    return a.value == b.value  # raw


def equivalent_text(a: str, b: str, rel_tol: float = DEFAULT_REL_TOL) -> bool:
    return equivalent(normalize(a), normalize(b), rel_tol)


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased pass@k: 1 - C(n-c, k) / C(n, k).

    Computed as 1 - prod_{j=0..k-1} (n-c-j)/(n-j) in exact Fraction
    arithmetic, then converted to float, so e.g. pass_at_k(5, 2, 2) is
    exactly 0.7.
    """
    if not all(isinstance(x, int) for x in (n, c, k)):
        raise ValueError("pass_at_k arguments must be integers")
    if n < 1 or not (0 <= c <= n) or not (1 <= k <= n):
        raise ValueError(f"pass_at_k domain violation: n={n} c={c} k={k}")
    if n - c < k:
        return 1.0
    miss = Fraction(1)
    for j in range(k):
        miss *= Fraction(n - c - j, n - j)
    return float(1 - miss)


def majority_at_k(
    answers: Sequence[CanonicalAnswer],
    k: int,
    gold: CanonicalAnswer,
    rel_tol: float = DEFAULT_REL_TOL,
) -> bool:
    """Majority vote over the first k answers, graded against gold.

    Clusters greedily under ``equivalent``; the largest cluster wins, ties
    broken by earliest first occurrence.
    """
    if not answers:
        raise ValueError("majority_at_k needs at least one answer")
    if not (1 <= k <= len(answers)):
        raise ValueError(f"k={k} out of range for {len(answers)} answers")
    clusters: list[list] = []  # [representative, count, first_index]
    for i, ans in enumerate(answers[:k]):
        for cluster in clusters:
            if equivalent(cluster[0], ans, rel_tol):
                cluster[1] += 1
                break
        else:
            clusters.append([ans, 1, i])
    best = max(clusters, key=lambda cl: (cl[1], -cl[2]))
    return equivalent(best[0], gold, rel_tol)


def success_rate(outcomes: Iterable) -> Fraction:
    """Fraction of truthy outcomes. Accepts bools or objects with all_pass()."""
    total = 0
    passed = 0
    for item in outcomes:
        total += 1
        ok = item if isinstance(item, bool) else item.all_pass()
        if ok:
            passed += 1
    if total == 0:
        raise ValueError("success_rate over an empty sequence is undefined")
    return Fraction(passed, total)


@dataclass
class EvalRecord:
    """Grading result for one problem: n attempts, c correct."""

    problem_ref: str
    n: int
    c: int
    answers: list[str] = field(default_factory=list)
    pass_at: dict[int, float] = field(default_factory=dict)
    majority_at: dict[int, bool] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or not (0 <= self.c <= self.n):
            raise ValueError(f"invalid eval counts n={self.n} c={self.c}")
        for k in self.pass_at:
            if not (1 <= k <= self.n):
                raise ValueError(f"pass_at key {k} outside 1..{self.n}")

    def to_payload(self) -> dict:
        return {
            "problem_ref": self.problem_ref,
            "n": self.n,
            "c": self.c,
            "answers": list(self.answers),
            "pass_at": {str(k): v for k, v in self.pass_at.items()},
            "majority_at": {str(k): v for k, v in self.majority_at.items()},
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "EvalRecord":
        return cls(
            problem_ref=payload["problem_ref"],
            n=payload["n"],
            c=payload["c"],
            answers=list(payload.get("answers", [])),
            pass_at={int(k): v for k, v in payload.get("pass_at", {}).items()},
            majority_at={
                int(k): v for k, v in payload.get("majority_at", {}).items()
            },
        )


def grade_attempts(
    problem_ref: str,
    gold_text: str,
    attempt_texts: Sequence[str | None],
    ks: Sequence[int] = (1,),
    rel_tol: float = DEFAULT_REL_TOL,
) -> EvalRecord:
    """Grade n attempts against a gold answer and fill in the estimators.

    ``attempt_texts`` entries may be None (no answer produced); those count
    as wrong and are excluded from majority voting.
    """
    if not attempt_texts:
        raise ValueError("no attempts to grade")
    gold = normalize(gold_text)
    parsed: list[CanonicalAnswer | None] = []
    c = 0
    for t in attempt_texts:
        if t is None:
            parsed.append(None)
            continue
        ans = normalize(t)
        parsed.append(ans)
        if equivalent(ans, gold, rel_tol):
            c += 1
    n = len(attempt_texts)
    record = EvalRecord(
        problem_ref=problem_ref,
        n=n,
        c=c,
        answers=[a.canonical_text() if a else "" for a in parsed],
    )
    for k in ks:
        if not (1 <= k <= n):
            continue
        record.pass_at[k] = pass_at_k(n, c, k)
        votes = [a for a in parsed[:k] if a is not None]
        record.majority_at[k] = bool(votes) and majority_at_k(
            votes, len(votes), gold, rel_tol
        )
    return record


def grade_batch_file(
    in_path,
    out_path,
    ks: Sequence[int] = (1,),
    rel_tol: float = DEFAULT_REL_TOL,
) -> list[EvalRecord]:
    """Grade a JSONL batch of {problem_ref, gold, answers: [...]} rows.

    Writes one EvalRecord payload per input row to out_path and returns the
    records. Rows are processed in order; malformed rows raise.
    """
    records = []
    with open(in_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                rec = grade_attempts(
                    row["problem_ref"], row["gold"], row["answers"], ks, rel_tol
                )
            except KeyError as exc:
                raise ValueError(
                    f"{in_path}:{line_no}: missing field {exc}"
                ) from None
            records.append(rec)
    with open(out_path, "w", encoding="utf-8") as out:
        for rec in records:
            out.write(json.dumps(rec.to_payload(), sort_keys=True) + "\n")
    return records
