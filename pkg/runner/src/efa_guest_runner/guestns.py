"""The execution namespace promised to candidate programs.

Candidates are generated against a contract that says exactly six names are
in scope: ``BaseModel``, ``random``, ``math``, ``np``, ``sympy``, ``Self``.
This module owns those six bindings and nothing else. The contract also
forbids candidate imports; loading handles that (see ``loading``), but the
objects it substitutes for allowed re-imports come from here so that every
spelling of ``BaseModel`` resolves to the same class.
"""

import math
import random
from typing import TypeVar

import numpy as np
import sympy

# Candidates annotate classmethods with `-> Self`; a TypeVar is a valid
# annotation expression and nothing ever instantiates it.
Self = TypeVar("Self")


class BaseModel:
    """Field bag for candidate classes: annotated names are the parameters.

    Deliberately non-coercing, unlike the validation-heavy originals this
    mimics: a field annotated ``float`` and assigned ``10`` stays the int
    ``10``, so ``str(12 * volume)`` renders ``"120"`` and not ``"120.0"``.
    Whether loose types are acceptable is the supervisor's call, made
    through its behavioral tests, not ours.
    """

    def __init__(self, **kwargs):
        for key, value in kwargs.items():
            setattr(self, key, value)

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in vars(self).items())
        return f"{type(self).__name__}({inner})"


#: preloaded name -> the module (or object) the runner provides under it
PRELOADED = {
    "BaseModel": BaseModel,
    "random": random,
    "math": math,
    "np": np,
    "sympy": sympy,
    "Self": Self,
}

#: importable module name -> the preloaded object that satisfies it; any
#: import statement not rooted in one of these is rejected at load
ALLOWED_MODULES = {
    "random": random,
    "math": math,
    "numpy": np,
    "sympy": sympy,
    "pydantic": None,  # only BaseModel, resolved specially
    "typing": None,  # only Self, resolved specially
}


def fresh_namespace() -> dict:
    """Globals for one candidate load. Shallow: module state is shared."""
    return dict(PRELOADED)


def disable_network():
    """Replace socket constructors with refusers, process-wide.

    Import statements naming ``socket`` never survive loading, but
    ``__import__`` is still reachable from guest code; this closes the
    obvious road from there to the network.
    """
    import socket

    def refuse(*args, **kwargs):
        raise RuntimeError("network access is disabled in the runner")

    socket.socket = refuse
    socket.create_connection = refuse
    socket.socketpair = refuse
