"""
Keyed random-number substreams.

Every consumer builds its generator from SeedSequence([seed, stream_tag, *keys]),
so results never depend on the order in which (replicate, year) cells are run.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, stream: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for one (seed, stream, keys) cell."""
    if seed is None:
        raise ValueError("seed is required")
    entropy = [int(seed), int(stream), *(int(k) for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derived_seed(seed: int, *keys: int) -> int:
    """Child integer seed, e.g. the SIR seed of one sensitivity replicate."""
    entropy = [int(seed), *(int(k) for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
