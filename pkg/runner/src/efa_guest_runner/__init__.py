"""Guest-side host for sandboxed problem-abstraction programs.

The supervisor process on the other end of the pipe treats this package as
a black box: it spawns ``efa-guest-runner --profile python``, speaks
newline-delimited JSON, and observes only responses. Everything here serves
that contract; nothing here imports supervisor code.
"""

from .loading import GuestError, LoadedCandidate, load_candidate
from .protocol import OPS

__version__ = "0.1.0"

__all__ = ["GuestError", "LoadedCandidate", "load_candidate", "OPS", "__version__"]
