"""Seeded randomness.

All randomness in the workbench flows through Philox, a counter-based
generator: seedable, splittable into independent named streams, and
bit-reproducible for a fixed seed across platforms.  Streams are derived
with ``numpy.random.SeedSequence(seed, spawn_key=(stream,))`` so that the
same (seed, stream) pair always yields the same draws.
"""

import numpy as np

# Stream tags used by the package.  Tests may use any integer >= 100.
STREAM_SAMPLE = 0
STREAM_CHECKS = 1
STREAM_NETS = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a Philox-backed Generator for (seed, stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))
