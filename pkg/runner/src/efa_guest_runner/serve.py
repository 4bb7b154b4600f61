"""The request loop and process plumbing.

Protocol purity is the one non-negotiable here: the stream the supervisor
reads carries well-formed response lines and nothing else, no matter what
the candidate prints. At startup the real stdout is duplicated for the
protocol and file descriptor 1 is pointed at /dev/null; the Python-level
stdout/stderr become a side channel that appends to a log file, created
lazily so quiet candidates leave nothing behind.

Environment knobs set by the supervisor:

    EFA_RUNNER_NO_NET=1        disable socket constructors process-wide
    EFA_RUNNER_MAX_OUTPUT=N    per-value byte cap (default 65536)
    EFA_RUNNER_LOG=path        side-channel target (default ./runner.log)
"""

import argparse
import io
import os
import sys

from .dispatch import dispatch
from .guestns import disable_network
from .loading import GuestError, load_candidate
from .protocol import BadRequest, encode_value, error_line, ok_line, parse_request

PROFILES = ("python",)

DEFAULT_MAX_OUTPUT = 64 * 1024


class SideChannel(io.TextIOBase):
    """Append-only log that opens on first write.

    Takes the place of sys.stdout/sys.stderr while candidate code runs. If
    the log cannot be opened (read-only working directory), guest output is
    dropped rather than turned into a guest fault.
    """

    def __init__(self, path: str):
        self.path = path
        self._file = None
        self._broken = False

    @property
    def encoding(self):
        return "utf-8"

    def writable(self):
        return True

    def write(self, text) -> int:
        if self._broken:
            return len(text)
        if self._file is None:
            try:
                self._file = open(self.path, "a", encoding="utf-8")
            except OSError:
                self._broken = True
                return len(text)
        return self._file.write(text)

    def flush(self):
        if self._file is not None:
            self._file.flush()


def _claim_protocol_stream():
    """Own fd 1 for the protocol; guest-visible stdout goes elsewhere."""
    protocol = os.fdopen(os.dup(1), "wb")
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.close(devnull)
    return protocol


def serve(log_path: str, max_output: int) -> int:
    protocol = _claim_protocol_stream()
    side = SideChannel(log_path)
    sys.stdout = side
    sys.stderr = side

    def respond(line: bytes):
        # side channel flushes first: once the supervisor sees the response
        # it may kill us, and the call's guest output must already be on disk
        side.flush()
        protocol.write(line)
        protocol.flush()

    cls = None
    for raw in sys.stdin.buffer:
        if not raw.strip():
            continue
        try:
            request = parse_request(raw)
        except BadRequest as exc:
            respond(error_line(exc.call_id, "protocol", str(exc)))
            continue
        op = request["op"]
        call_id = request["call_id"]

        if op == "ping":
            respond(ok_line(call_id, "pong"))
            continue
        if op == "shutdown":
            respond(ok_line(call_id, "bye"))
            return 0

        if op == "load":
            cls = None  # a reload drops the previous candidate either way
            code = request.get("code")
            if not isinstance(code, str):
                respond(error_line(call_id, "protocol", "load requires code"))
                continue
            try:
                loaded = load_candidate(code)
            except GuestError as exc:
                respond(error_line(call_id, exc.kind, exc.message, exc.tb))
                continue
            cls = loaded.class_object
            value = {"class_name": loaded.class_name, "warnings": loaded.load_diagnostics}
        else:
            if cls is None:
                respond(error_line(call_id, "protocol", f"{op} before a successful load"))
                continue
            try:
                value = dispatch(cls, request)
            except BadRequest as exc:
                respond(error_line(call_id, "protocol", str(exc)))
                continue
            except GuestError as exc:
                respond(error_line(call_id, exc.kind, exc.message, exc.tb))
                continue

        encoded = encode_value(value)
        if len(encoded.encode("utf-8")) > max_output:
            respond(error_line(call_id, "runtime", f"value exceeds {max_output} byte cap"))
            continue
        respond(ok_line(call_id, value))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="efa-guest-runner",
        description="Serve candidate problem-abstraction classes over the "
        "line-delimited JSON runner protocol.",
    )
    parser.add_argument("--profile", required=True, choices=PROFILES)
    parser.add_argument(
        "--log-file",
        default=None,
        help="side channel for candidate print output "
        "(default: $EFA_RUNNER_LOG or ./runner.log)",
    )
    args = parser.parse_args(argv)

    if os.environ.get("EFA_RUNNER_NO_NET") == "1":
        disable_network()
    max_output = int(os.environ.get("EFA_RUNNER_MAX_OUTPUT", DEFAULT_MAX_OUTPUT))
    log_path = args.log_file or os.environ.get("EFA_RUNNER_LOG") or "runner.log"
    return serve(log_path, max_output)


if __name__ == "__main__":
    sys.exit(main())
