"""Prompt templates and rendering.

Two prompt families ship as package data under ``templates/``:

* ``functionalize`` turns a (statement, solution) pair into a request to
  write a parameterized problem class. Its body embeds three fully worked
  examples whose code contains f-string brace escapes like
  ``\\overline{{AX}}``; those must survive rendering byte-for-byte.
* ``solve_0shot`` / ``solve_nshot`` ask a model to solve a problem, with
  the N-shot variant interpolating worked (instruction, response) pairs.

The engine is deliberately tiny: ``{{name}}`` substitution plus one block
form ``{{#each items}}...{{/each}}``. Only names bound by the caller are
substituted; brace sequences that happen to look like placeholders (the
f-string escapes above) pass through untouched. Rendering fails loudly if a
template's required names are unbound or missing from the body, so a broken
template dies before any model call is spent on it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

_PLACEHOLDER_RE = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")
_EACH_RE = re.compile(
    r"\{\{#each\s+([A-Za-z_][A-Za-z0-9_]*)\s*\}\}(.*?)\{\{/each\}\}", re.S
)

# required placeholder names for the shipped templates
_SHIPPED_REQUIRED = {
    "functionalize": frozenset({"problem", "solution"}),
    "solve_0shot": frozenset({"question"}),
    "solve_nshot": frozenset({"question", "shots"}),
    "augment": frozenset({"question"}),
}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class FewShotExample:
    instruction: str
    response: str

    def __post_init__(self):
        if not self.instruction.strip() or not self.response.strip():
            raise ValueError("few-shot examples need non-empty instruction and response")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    required: frozenset[str]
    guest_profile: str = "python"

    def render(self, **bindings) -> str:
        """Substitute bound placeholders; error on unmet requirements."""
        missing = sorted(self.required - bindings.keys())
        if missing:
            raise TemplateError(
                f"template {self.name!r}: unbound required placeholders {missing}"
            )
        body = self.body
        for name in sorted(self.required):
            if name in _each_names(body):
                continue
            if not _has_placeholder(body, name):
                raise TemplateError(
                    f"template {self.name!r}: body has no {{{{{name}}}}} placeholder"
                )

        def expand_each(match):
            list_name, block = match.group(1), match.group(2)
            if list_name not in bindings:
                raise TemplateError(
                    f"template {self.name!r}: unbound list {list_name!r}"
                )
            pieces = []
            for item in bindings[list_name]:
                scope = dict(bindings)
                if isinstance(item, FewShotExample):
                    scope.update(instruction=item.instruction, response=item.response)
                elif isinstance(item, dict):
                    scope.update(item)
                else:
                    raise TemplateError(
                        f"template {self.name!r}: each-items must be mappings"
                    )
                pieces.append(_substitute(block, scope))
            return "".join(pieces)

        body = _EACH_RE.sub(expand_each, body)
        return _substitute(body, bindings)


def _substitute(text: str, bindings: dict) -> str:
    def repl(match):
        name = match.group(1)
        if name in bindings and not isinstance(bindings[name], (list, tuple)):
            return str(bindings[name])
        return match.group(0)  # unbound lookalikes stay verbatim

    return _PLACEHOLDER_RE.sub(repl, text)


def _has_placeholder(body: str, name: str) -> bool:
    return any(m.group(1) == name for m in _PLACEHOLDER_RE.finditer(body))


def _each_names(body: str) -> set[str]:
    return {m.group(1) for m in _EACH_RE.finditer(body)}


def load_template(
    name: str,
    templates_dir: str | Path | None = None,
    required: frozenset[str] | None = None,
) -> PromptTemplate:
    """Load a template by name from package data or an override directory."""
    if templates_dir is not None:
        path = Path(templates_dir) / f"{name}.txt"
        body = path.read_text(encoding="utf-8")
    else:
        ref = resources.files("efakit") / "templates" / f"{name}.txt"
        try:
            body = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise TemplateError(f"no shipped template named {name!r}") from None
    if required is None:
        required = _SHIPPED_REQUIRED.get(name)
    if required is None:
        # custom template: every distinct simple placeholder is required
        required = frozenset(
            m.group(1) for m in _PLACEHOLDER_RE.finditer(body)
        ) | _each_names(body)
    return PromptTemplate(name=name, body=body, required=frozenset(required))


def build_efagen_prompt(seed, template: PromptTemplate | None = None) -> str:
    """Prompt asking for a parameterized program for one seed problem.

    ``seed`` needs ``statement`` and ``solution`` attributes; both must be
    non-empty. The rendered prompt ends with the statement and solution in
    their labeled sections followed by the completion header.
    """
    if template is None:
        template = load_template("functionalize")
    statement = getattr(seed, "statement", "") or ""
    solution = getattr(seed, "solution", "") or ""
    if not statement.strip():
        raise TemplateError("seed problem has an empty statement")
    if not solution.strip():
        raise TemplateError("seed problem has an empty solution")
    return template.render(problem=statement, solution=solution)


def build_solver_prompt(
    question: str,
    shots: tuple[FewShotExample, ...] = (),
    templates_dir: str | Path | None = None,
) -> str:
    """0-shot or N-shot solving prompt ending with the target question."""
    if not question.strip():
        raise TemplateError("cannot build a solver prompt for an empty question")
    if shots:
        template = load_template("solve_nshot", templates_dir)
        return template.render(question=question, shots=list(shots))
    template = load_template("solve_0shot", templates_dir)
    return template.render(question=question)


def build_augment_prompt(
    question: str, templates_dir: str | Path | None = None
) -> str:
    """Minimal instruction prompt used for teacher annotation."""
    if not question.strip():
        raise TemplateError("cannot build an annotation prompt for an empty question")
    return load_template("augment", templates_dir).render(question=question)
