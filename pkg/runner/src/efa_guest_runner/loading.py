"""Turning untrusted candidate source into a dispatchable class.

Loading is where the contract's "Do not import any libraries!" rule gets
enforced. Generated programs routinely re-import helpers the namespace
already provides (``import numpy as np``, ``from pydantic import
BaseModel``); those statements are stripped from the tree and reported as
warnings, with the binding satisfied from the preloaded objects instead.
An import we cannot satisfy that way is a safety boundary and fails the
load outright: nothing gets executed.

The class served afterwards is the last one defined in the code that has
all four contract methods, mirroring how the supervisor's extractor picks
the last qualifying code block from a model response.
"""

import ast
import traceback
from dataclasses import dataclass, field

from .guestns import ALLOWED_MODULES, PRELOADED, BaseModel, Self, fresh_namespace

CANDIDATE_FILE = "<candidate>"

REQUIRED_METHODS = ("original", "sample", "render", "solve")


class GuestError(Exception):
    """A candidate-attributable fault, carrying its wire error type."""

    def __init__(self, kind: str, message: str, tb: str | None = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.tb = tb


@dataclass
class LoadedCandidate:
    class_object: type
    load_diagnostics: list = field(default_factory=list)

    @property
    def class_name(self) -> str:
        return self.class_object.__name__


def candidate_traceback(exc: BaseException) -> str | None:
    """Format only the frames that live in the candidate's own code.

    Runner frames are noise to the supervisor and carry install paths that
    would make error output machine-dependent.
    """
    frames = [
        entry
        for entry in traceback.extract_tb(exc.__traceback__)
        if entry.filename == CANDIDATE_FILE
    ]
    if not frames:
        return None
    lines = ["Traceback (most recent call last):\n"]
    lines += traceback.format_list(frames)
    lines += traceback.format_exception_only(type(exc), exc)
    return "".join(lines)


def guest_error(exc: Exception, kind: str = "runtime") -> GuestError:
    return GuestError(kind, f"{type(exc).__name__}: {exc}", candidate_traceback(exc))


class _DisallowedImport(Exception):
    pass


def _resolve_dotted(path: str):
    """Resolve ``numpy.linalg``-style paths against the preloaded modules."""
    root, *rest = path.split(".")
    obj = ALLOWED_MODULES[root]
    for part in rest:
        obj = getattr(obj, part)
    return obj


class _ImportControl(ast.NodeTransformer):
    """Strip satisfiable imports, reject the rest, collect warnings."""

    def __init__(self):
        self.warnings: list[str] = []
        self.bindings: dict[str, object] = {}

    def _strip(self, node: ast.stmt) -> ast.stmt:
        self.warnings.append(
            f"line {node.lineno}: stripped {ast.unparse(node)!r}; "
            "the namespace already provides it"
        )
        return ast.copy_location(ast.Pass(), node)

    def _reject(self, node: ast.stmt, what: str):
        raise _DisallowedImport(
            f"line {node.lineno}: import of {what!r} is not allowed; available "
            "names: " + ", ".join(PRELOADED)
        )

    def visit_Import(self, node: ast.Import) -> ast.stmt:
        for alias in node.names:
            root = alias.name.split(".")[0]
            if root not in ("random", "math", "numpy", "sympy"):
                self._reject(node, alias.name)
            try:
                target = _resolve_dotted(alias.name if alias.asname else root)
            except AttributeError:
                self._reject(node, alias.name)
            self.bindings[alias.asname or root] = target
        return self._strip(node)

    def visit_ImportFrom(self, node: ast.ImportFrom) -> ast.stmt:
        if node.level or node.module is None:
            self._reject(node, "." * node.level)
        root = node.module.split(".")[0]
        if root not in ALLOWED_MODULES:
            self._reject(node, node.module)
        for alias in node.names:
            if alias.name == "*":
                self._reject(node, f"{node.module}.*")
            bound = alias.asname or alias.name
            # pydantic and typing are satisfiable only for the two names
            # the contract actually promises
            if root == "pydantic":
                if alias.name != "BaseModel":
                    self._reject(node, f"pydantic.{alias.name}")
                self.bindings[bound] = BaseModel
            elif root == "typing":
                if alias.name != "Self":
                    self._reject(node, f"typing.{alias.name}")
                self.bindings[bound] = Self
            else:
                try:
                    self.bindings[bound] = getattr(
                        _resolve_dotted(node.module), alias.name
                    )
                except AttributeError:
                    self._reject(node, f"{node.module}.{alias.name}")
        return self._strip(node)


def _qualifies(obj) -> bool:
    if not isinstance(obj, type) or obj is BaseModel:
        return False
    return all(callable(getattr(obj, name, None)) for name in REQUIRED_METHODS)


def load_candidate(code: str) -> LoadedCandidate:
    """Execute candidate source and select the class to serve.

    Raises GuestError with kind ``syntax`` (does not compile) or ``runtime``
    (disallowed import, execution failure, or no qualifying class).
    """
    try:
        tree = ast.parse(code, CANDIDATE_FILE)
    except SyntaxError as exc:
        raise GuestError("syntax", str(exc)) from exc
    control = _ImportControl()
    try:
        tree = ast.fix_missing_locations(control.visit(tree))
    except _DisallowedImport as exc:
        raise GuestError("runtime", str(exc)) from exc

    namespace = fresh_namespace()
    namespace.update(control.bindings)
    try:
        exec(compile(tree, CANDIDATE_FILE, "exec"), namespace)
    except SyntaxError as exc:  # degenerate trees can still fail late
        raise GuestError("syntax", str(exc)) from exc
    except MemoryError:
        raise  # die under the rlimit; the supervisor records the kill
    except Exception as exc:
        raise guest_error(exc) from exc

    selected = None
    for obj in namespace.values():
        if _qualifies(obj):
            selected = obj
    if selected is None:
        raise GuestError("runtime", "no class with the four required methods")
    return LoadedCandidate(selected, control.warnings)
