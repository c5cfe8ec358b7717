"""Named, counter-based RNG substreams.

A single global seed fans out to independent generators keyed by name (and
optionally an index), so adding a new consumer never perturbs the draws seen
by existing ones.
"""

import zlib

import numpy as np


def substream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Return a Generator for the (seed, name, index) substream.

    The name is folded through crc32 so the mapping is stable across runs
    and platforms.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, int(index)]))
