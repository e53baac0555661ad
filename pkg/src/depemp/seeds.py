"""Deterministic seed derivation for parallel Monte Carlo streams.

Streams are identified by (master seed, *path) tuples fed to numpy's
SeedSequence, so replication r of role k always gets the same generator
no matter how work is scheduled.
"""

from __future__ import annotations

import numpy as np

# stable role ids; never renumber, output reproducibility depends on them
ROLE_PATH = 0
ROLE_COUPLED = 1
ROLE_REPLICATION = 2
ROLE_CALIBRATION = 3
ROLE_SWEEP = 4


def seed_sequence(master: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))


def generator(master: int, *path: int) -> np.random.Generator:
    """PCG64 generator for stream (master, *path); disjoint paths give independent streams."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master, *path)))
