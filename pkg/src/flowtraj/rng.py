"""Deterministic random number generation.

Every random choice in the pipeline is driven by a Philox4x64-10
counter-based generator, keyed from one 64-bit seed plus a fixed
per-stage stream index. Philox is platform independent, so the same
(seed, stream) pair reproduces the same draws everywhere.
"""

from __future__ import annotations

import numpy as np

# Stream index per pipeline stage. These are frozen: changing them would
# change every seeded output of the CLI.
STREAMS = {
    "synth": 0,
    "track": 1,
    "eval": 2,
}


def make_rng(seed: int, stream: int | str = 0) -> np.random.Generator:
    """Return the Philox generator for a (seed, stream) pair."""
    if isinstance(stream, str):
        stream = STREAMS[stream]
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))
