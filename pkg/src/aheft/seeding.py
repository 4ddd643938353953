"""Counter-style RNG substreams keyed by (master seed, experiment, seed index, ...)."""
from __future__ import annotations

import numpy as np


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key``; identical keys give identical streams
    regardless of how many other streams were created or in what order."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
