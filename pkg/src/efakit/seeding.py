"""Deterministic derivation of per-task RNG seeds from one global seed.

Every stochastic site (candidate sampling, variant probes, solver draws)
gets its own seed derived from (global_seed, purpose, indices) so that runs
replay bit-for-bit and reordering one workflow cannot shift another's draws.
"""

from __future__ import annotations

import hashlib

# Guest runners receive seeds over JSON; keep them in non-negative int63 so
# every JSON implementation round-trips them exactly.
_SEED_BITS = 63


def derive_seed(global_seed: int, purpose: str, *indices) -> int:
    material = "|".join([str(global_seed), purpose, *[str(i) for i in indices]])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << _SEED_BITS) - 1)
