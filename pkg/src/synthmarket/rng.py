"""Seedable counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, index, phase)``, so
independent scenarios or permutations can be regenerated in isolation.
"""
from __future__ import annotations

import numpy as np

PHASES = {"index": 0, "forward": 1, "reverse": 2, "shuffle": 3, "permutation": 4, "init": 5}


def stream(seed: int, index: int = 0, phase: str = "forward") -> np.random.Generator:
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), PHASES[phase]))
    return np.random.Generator(np.random.Philox(ss))
