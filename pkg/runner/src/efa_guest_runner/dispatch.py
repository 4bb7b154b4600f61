"""Executing contract methods on a loaded candidate class.

original/sample return the instance's parameter record: exactly the fields
the class declares, as JSON-safe values, never derived attributes. render
and solve rebuild an instance from a parameter record and return text;
numeric returns are coerced to strings since models are sloppy about the
declared return type. Everything a candidate does wrong surfaces as
GuestError{runtime} with the candidate's own traceback frames.
"""

import math
import random

import numpy as np

from .loading import GuestError, guest_error
from .protocol import BadRequest

_SCALARS = (str, int, float, bool)


def _jsonable(value):
    if hasattr(value, "item") and type(value).__module__.startswith("numpy"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        raise TypeError(f"non-finite number {value!r}")
    if isinstance(value, _SCALARS) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    raise TypeError(f"value of type {type(value).__name__}")


def params_of(instance, cls) -> dict:
    """The declared-field record for one instance."""
    record = {}
    for name in getattr(cls, "__annotations__", {}):
        try:
            record[name] = _jsonable(getattr(instance, name))
        except TypeError as exc:
            raise GuestError(
                "runtime", f"unserializable parameters: field {name!r} is {exc}"
            ) from exc
    return record


def _text_result(value, what: str) -> str:
    if hasattr(value, "item") and type(value).__module__.startswith("numpy"):
        value = value.item()
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float, bool)):
        return str(value)
    raise GuestError(
        "runtime", f"{what}() must return a string, got {type(value).__name__}"
    )


def _instance_from(cls, op: str, request: dict):
    params = request.get("params")
    if params is None:
        params = {}
    if not isinstance(params, dict):
        raise BadRequest(f"{op} params must be an object", request["call_id"])
    return cls(**params)


def _returned_instance(cls, op: str):
    instance = getattr(cls, op)()
    if not isinstance(instance, cls):
        raise GuestError(
            "runtime", f"{op}() must return an instance of {cls.__name__}"
        )
    return instance


def dispatch(cls: type, request: dict):
    """Run one non-load op against the loaded class; returns the wire value.

    Raises GuestError for candidate faults, BadRequest for requests whose
    payload does not fit the op. MemoryError is deliberately not caught
    anywhere on this path: the process dies and the supervisor records the
    kill.
    """
    op = request["op"]
    try:
        if op == "original":
            return params_of(_returned_instance(cls, "original"), cls)
        if op == "sample":
            seed = request.get("rng_seed")
            if seed is not None:
                if not isinstance(seed, int) or isinstance(seed, bool):
                    raise BadRequest("rng_seed must be an integer", request["call_id"])
                random.seed(seed)
                np.random.seed(seed % 2**32)
            return params_of(_returned_instance(cls, "sample"), cls)
        if op == "render":
            return _text_result(_instance_from(cls, op, request).render(), "render")
        if op == "solve":
            return _text_result(_instance_from(cls, op, request).solve(), "solve")
    except (GuestError, BadRequest, MemoryError):
        raise
    except Exception as exc:
        raise guest_error(exc) from exc
    raise BadRequest(f"op {op!r} is not dispatchable", request["call_id"])
