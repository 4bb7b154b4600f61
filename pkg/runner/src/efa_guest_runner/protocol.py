"""Wire format: one compact UTF-8 JSON object per line.

Requests arrive as ``{"op": ..., ("code"|"params"|"rng_seed"): ..., "call_id": ...}``
and every request gets exactly one response line, either

    {"call_id": N, "ok": true, "value": ...}
    {"call_id": N, "ok": false, "error": {"type": ..., "message": ..., "traceback": ...}}

Key order and separators are part of the contract; supervisors replay golden
transcripts against these bytes. Error types: syntax (code does not
compile), runtime (candidate raised or broke the contract), protocol
(malformed or out-of-sequence request). The remaining two types the
supervisor synthesizes itself (timeout, killed); the runner never emits
them.
"""

import json

OPS = ("load", "original", "sample", "render", "solve", "ping", "shutdown")

TRACEBACK_TAIL = 2000  # chars of guest traceback kept in error responses


class BadRequest(Exception):
    """Request line that cannot be dispatched; maps to error{protocol}."""

    def __init__(self, message: str, call_id: int = -1):
        super().__init__(message)
        self.call_id = call_id


def parse_request(raw: bytes) -> dict:
    """Decode and structurally check one request line.

    Returns a dict with op/call_id present and correctly typed; field
    payloads (code/params/rng_seed) are checked by the dispatcher, which
    knows which op wants what.
    """
    try:
        request = json.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise BadRequest("unparseable request line") from exc
    if not isinstance(request, dict):
        raise BadRequest("request must be a JSON object")
    call_id = request.get("call_id")
    if not isinstance(call_id, int) or isinstance(call_id, bool):
        raise BadRequest("call_id must be an integer")
    op = request.get("op")
    if op not in OPS:
        raise BadRequest(f"unknown op {op!r}", call_id)
    return request


def encode_value(value) -> str:
    return json.dumps(value, separators=(",", ":"), ensure_ascii=False)


def ok_line(call_id: int, value) -> bytes:
    body = {"call_id": call_id, "ok": True, "value": value}
    return encode_value(body).encode("utf-8") + b"\n"


def error_line(call_id: int, error_type: str, message: str, tb: str | None = None) -> bytes:
    error = {"type": error_type, "message": message}
    if tb:
        error["traceback"] = tb[-TRACEBACK_TAIL:]
    body = {"call_id": call_id, "ok": False, "error": error}
    return encode_value(body).encode("utf-8") + b"\n"
