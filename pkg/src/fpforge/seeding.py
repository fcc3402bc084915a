"""Deterministic RNG substreams.

All randomness in a run flows from one seed.  Named substreams keep
modules (and parallel-safe per-trial streams) from sharing state.
"""

import hashlib

import numpy as np


def substream(seed, *names):
    """Return a Generator for the substream identified by `names` under `seed`."""
    digest = hashlib.sha256("/".join(names).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *words]))
